#include "mcarsense/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "mcarsense/errors.hpp"

namespace mcarsense {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <class F>
void for_each_line(std::string_view text, F&& f) {
  std::size_t start = 0, lineno = 0;
  while (start <= text.size()) {
    const std::size_t pos = text.find('\n', start);
    const std::string_view line = text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    ++lineno;
    f(trim(line), lineno);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
}

double parse_double(std::string_view s, std::size_t lineno) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::string tmp(s);
  char* end = nullptr;
  const double v = std::strtod(tmp.c_str(), &end);
  if (end != tmp.c_str() + tmp.size()) {
    throw DataError("line " + std::to_string(lineno) + ": cannot parse number '" + tmp + "'");
  }
  return v;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// --- JSON helpers ---------------------------------------------------------

void check_keys(const Json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return it.key() == k; })) {
      throw ConfigError(where + ": unknown key '" + it.key() + "'");
    }
  }
}

double get_number(const Json& obj, const char* key, const std::string& where, double fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
  return v.get<double>();
}

long long get_integer(const Json& obj, const char* key, const std::string& where, long long fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) throw ConfigError(where + "." + key + ": expected an integer");
  return v.get<long long>();
}

std::string get_string(const Json& obj, const char* key, const std::string& where, const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_string()) throw ConfigError(where + "." + key + ": expected a string");
  return v.get<std::string>();
}

Json stats_of(const std::vector<double>& xs, int bins) {
  Json out;
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  out["mean"] = mean;
  out["sd"] = xs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  out["q05"] = empirical_quantile(xs, 0.05);
  out["q50"] = empirical_quantile(xs, 0.50);
  out["q95"] = empirical_quantile(xs, 0.95);
  const auto [mn, mx] = std::minmax_element(xs.begin(), xs.end());
  double lo = *mn, hi = *mx;
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  std::vector<double> edges(bins + 1);
  for (int i = 0; i <= bins; ++i) edges[i] = lo + (hi - lo) * i / bins;
  std::vector<long> counts(bins, 0);
  for (double x : xs) {
    int k = static_cast<int>((x - lo) / (hi - lo) * bins);
    counts[std::clamp(k, 0, bins - 1)]++;
  }
  out["histogram"] = {{"edges", edges}, {"counts", counts}};
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

ObservedDataset parse_dataset_csv(std::string_view text) {
  std::vector<Record> recs;
  bool header = false;
  for_each_line(text, [&](std::string_view line, std::size_t lineno) {
    if (line.empty()) return;
    if (!header) {
      const auto f = split_fields(line);
      if (f.size() != 2 || f[0] != "x" || f[1] != "r") throw DataError("dataset: header must be 'x,r'");
      header = true;
      return;
    }
    const auto f = split_fields(line);
    if (f.size() != 2) throw DataError("dataset line " + std::to_string(lineno) + ": expected two fields");
    Record rec;
    if (f[1] == "1") {
      rec.r = 1;
    } else if (f[1] == "0") {
      rec.r = 0;
    } else {
      throw DataError("dataset line " + std::to_string(lineno) + ": r must be 0 or 1");
    }
    if (rec.r == 1) {
      rec.x = parse_double(f[0], lineno);
      if (!(rec.x >= 0.0)) throw DataError("dataset line " + std::to_string(lineno) + ": x must be >= 0");
    }
    recs.push_back(rec);
  });
  if (!header) throw DataError("dataset: missing header 'x,r'");
  return ObservedDataset(std::move(recs));
}

std::string format_dataset_csv(const ObservedDataset& data) {
  std::string out = "x,r\n";
  for (const auto& rec : data.records()) {
    out += format_double(rec.r == 1 ? rec.x : 0.0);
    out += rec.r == 1 ? ",1\n" : ",0\n";
  }
  return out;
}

ObservedDataset read_dataset_csv(const std::string& path) { return parse_dataset_csv(read_text_file(path)); }

void write_dataset_csv(const ObservedDataset& data, const std::string& path) {
  write_text_file(path, format_dataset_csv(data));
}

std::string format_draws_csv(const PosteriorDraws& draws) {
  std::string out = "iteration,functional,alpha,eta\n";
  for (std::size_t i = 0; i < draws.functional.size(); ++i) {
    out += std::to_string(i);
    out += ',';
    out += format_double(draws.functional[i]);
    out += ',';
    out += i < draws.alpha.size() ? format_double(draws.alpha[i]) : "";
    out += ',';
    out += i < draws.eta.size() ? format_double(draws.eta[i]) : "";
    out += '\n';
  }
  return out;
}

PosteriorDraws parse_draws_csv(std::string_view text) {
  PosteriorDraws d;
  bool header = false, any_eta = false;
  std::vector<double> eta;
  for_each_line(text, [&](std::string_view line, std::size_t lineno) {
    if (line.empty()) return;
    const auto f = split_fields(line);
    if (!header) {
      if (f.size() != 4 || f[0] != "iteration" || f[1] != "functional" || f[2] != "alpha" || f[3] != "eta") {
        throw DataError("draws: header must be 'iteration,functional,alpha,eta'");
      }
      header = true;
      return;
    }
    if (f.size() != 4) throw DataError("draws line " + std::to_string(lineno) + ": expected four fields");
    d.functional.push_back(parse_double(f[1], lineno));
    d.alpha.push_back(parse_double(f[2], lineno));
    if (!f[3].empty()) any_eta = true;
    eta.push_back(parse_double(f[3], lineno));
  });
  if (!header) throw DataError("draws: missing header");
  if (any_eta) d.eta = std::move(eta);
  return d;
}

void write_draws_csv(const PosteriorDraws& draws, const std::string& path) {
  write_text_file(path, format_draws_csv(draws));
}

PosteriorDraws read_draws_csv(const std::string& path) { return parse_draws_csv(read_text_file(path)); }

// ---------------------------------------------------------------------------

RunConfig parse_run_config(const Json& doc) {
  check_keys(doc, "config", {"scenario", "priors", "engine", "run"});
  RunConfig cfg;
  ScenarioSpec& scn = cfg.fit.scenario;

  if (doc.contains("scenario")) {
    const Json& s = doc.at("scenario");
    check_keys(s, "scenario", {"r", "s", "p0", "alpha0", "c_mode", "c"});
    scn.r = get_number(s, "r", "scenario", scn.r);
    scn.s = get_number(s, "s", "scenario", scn.s);
    scn.p0 = get_number(s, "p0", "scenario", scn.p0);
    scn.alpha0 = get_number(s, "alpha0", "scenario", scn.alpha0);
    scn.c_mode = parse_c_mode(get_string(s, "c_mode", "scenario", to_string(scn.c_mode)));
    scn.c_value = get_number(s, "c", "scenario", scn.c_value);
    if (s.contains("c") && !s.contains("c_mode")) scn.c_mode = CMode::explicit_value;
  }
  try {
    scn.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  const double c = compute_c(scn);

  // priors default to the true values, fixed
  cfg.fit.priors.alpha = AlphaPrior::fixed_at(scn.alpha0);
  cfg.fit.priors.eta = EtaPrior::fixed_at(true_eta(scn, c));
  if (doc.contains("priors")) {
    const Json& p = doc.at("priors");
    check_keys(p, "priors", {"alpha", "eta", "precision"});
    cfg.fit.prior_precision = get_number(p, "precision", "priors", 1.0);
    if (!(cfg.fit.prior_precision > 0.0)) throw ConfigError("priors.precision must be positive");
    if (p.contains("alpha")) {
      const Json& a = p.at("alpha");
      check_keys(a, "priors.alpha", {"type", "value", "mean", "sd"});
      const std::string type = get_string(a, "type", "priors.alpha", "fixed");
      if (type == "fixed") {
        cfg.fit.priors.alpha = AlphaPrior::fixed_at(get_number(a, "value", "priors.alpha", scn.alpha0));
      } else if (type == "normal") {
        const double sd = get_number(a, "sd", "priors.alpha", 0.5);
        if (!(sd > 0.0)) throw ConfigError("priors.alpha.sd must be positive");
        cfg.fit.priors.alpha = AlphaPrior::normal(get_number(a, "mean", "priors.alpha", 1.0), sd);
      } else {
        throw ConfigError("priors.alpha.type must be 'fixed' or 'normal'");
      }
    }
    if (p.contains("eta")) {
      const Json& e = p.at("eta");
      check_keys(e, "priors.eta", {"type", "value", "lo", "hi"});
      const std::string type = get_string(e, "type", "priors.eta", "true");
      if (type == "true") {
        cfg.fit.priors.eta = EtaPrior::fixed_at(true_eta(scn, c));
      } else if (type == "fixed") {
        if (!e.contains("value")) throw ConfigError("priors.eta.value is required for type 'fixed'");
        cfg.fit.priors.eta = EtaPrior::fixed_at(get_number(e, "value", "priors.eta", 0.0));
      } else if (type == "uniform") {
        const double lo = get_number(e, "lo", "priors.eta", -5.0);
        const double hi = get_number(e, "hi", "priors.eta", 2.0);
        if (!(lo < hi)) throw ConfigError("priors.eta needs lo < hi");
        cfg.fit.priors.eta = EtaPrior::uniform(lo, hi);
      } else {
        throw ConfigError("priors.eta.type must be 'true', 'fixed' or 'uniform'");
      }
    }
  }

  EngineConfig& ec = cfg.fit.config;
  if (doc.contains("engine")) {
    const Json& e = doc.at("engine");
    check_keys(e, "engine", {"name", "n_draws", "burn_in", "thinning", "trunc_eps", "mh_target_accept",
                             "mh_adapt_window", "mh_initial_scale", "jump_tol", "quad"});
    cfg.fit.engine = parse_engine(get_string(e, "name", "engine", "h"));
    ec.n_draws = static_cast<int>(get_integer(e, "n_draws", "engine", ec.n_draws));
    ec.burn_in = static_cast<int>(get_integer(e, "burn_in", "engine", ec.burn_in));
    ec.thinning = static_cast<int>(get_integer(e, "thinning", "engine", ec.thinning));
    ec.trunc_eps = get_number(e, "trunc_eps", "engine", ec.trunc_eps);
    ec.mh_target_accept = get_number(e, "mh_target_accept", "engine", ec.mh_target_accept);
    ec.mh_adapt_window = static_cast<int>(get_integer(e, "mh_adapt_window", "engine", ec.mh_adapt_window));
    ec.mh_initial_scale = get_number(e, "mh_initial_scale", "engine", ec.mh_initial_scale);
    ec.jump_tol = get_number(e, "jump_tol", "engine", ec.jump_tol);
    if (e.contains("quad")) {
      const Json& q = e.at("quad");
      check_keys(q, "engine.quad", {"abs_tol", "rel_tol", "max_subdivisions"});
      ec.quad.abs_tol = get_number(q, "abs_tol", "engine.quad", ec.quad.abs_tol);
      ec.quad.rel_tol = get_number(q, "rel_tol", "engine.quad", ec.quad.rel_tol);
      ec.quad.max_subdivisions =
          static_cast<int>(get_integer(q, "max_subdivisions", "engine.quad", ec.quad.max_subdivisions));
    }
  }
  try {
    ec.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }

  if (doc.contains("run")) {
    const Json& r = doc.at("run");
    check_keys(r, "run", {"seed", "n", "ns", "reps", "level", "threads", "out", "functional"});
    const long long seed = get_integer(r, "seed", "run", 1);
    if (seed < 0) throw ConfigError("run.seed must be nonnegative");
    cfg.seed = static_cast<std::uint64_t>(seed);
    const long long n = get_integer(r, "n", "run", static_cast<long long>(cfg.n));
    if (n < 1) throw ConfigError("run.n must be >= 1");
    cfg.n = static_cast<std::size_t>(n);
    if (r.contains("ns")) {
      if (!r.at("ns").is_array() || r.at("ns").empty()) throw ConfigError("run.ns: expected a nonempty array");
      for (const auto& v : r.at("ns")) {
        if (!v.is_number_integer() || v.get<long long>() < 1) throw ConfigError("run.ns: entries must be integers >= 1");
        cfg.ns.push_back(v.get<std::size_t>());
      }
    }
    cfg.reps = static_cast<int>(get_integer(r, "reps", "run", cfg.reps));
    if (cfg.reps < 1) throw ConfigError("run.reps must be >= 1");
    cfg.level = get_number(r, "level", "run", cfg.level);
    if (!(cfg.level > 0.0 && cfg.level < 1.0)) throw ConfigError("run.level must be in (0, 1)");
    cfg.threads = static_cast<int>(get_integer(r, "threads", "run", cfg.threads));
    if (cfg.threads < 0) throw ConfigError("run.threads must be >= 0");
    cfg.out = get_string(r, "out", "run", "");
    if (r.contains("functional")) {
      const Json& f = r.at("functional");
      check_keys(f, "run.functional", {"type", "threshold"});
      const std::string type = get_string(f, "type", "run.functional", "identity");
      if (type == "identity") {
        cfg.fit.g = FunctionalSpec::identity();
      } else if (type == "indicator") {
        if (!f.contains("threshold")) throw ConfigError("run.functional.threshold is required");
        cfg.fit.g = FunctionalSpec::indicator(get_number(f, "threshold", "run.functional", 0.0));
      } else {
        throw ConfigError("run.functional.type must be 'identity' or 'indicator'");
      }
    }
  }
  if (cfg.ns.empty()) cfg.ns = {cfg.n};
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path);
  Json doc;
  try {
    doc = Json::parse(read_text_file(path));
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_run_config(doc);
}

Json to_json(const RunConfig& cfg) {
  const auto& scn = cfg.fit.scenario;
  const auto& pr = cfg.fit.priors;
  const auto& ec = cfg.fit.config;
  Json doc;
  doc["scenario"] = {{"r", scn.r}, {"s", scn.s}, {"p0", scn.p0}, {"alpha0", scn.alpha0},
                     {"c_mode", to_string(scn.c_mode)}, {"c", scn.c_value}};
  Json alpha = pr.alpha.fixed ? Json{{"type", "fixed"}, {"value", pr.alpha.value}}
                              : Json{{"type", "normal"}, {"mean", pr.alpha.mean}, {"sd", pr.alpha.sd}};
  Json eta = pr.eta.fixed ? Json{{"type", "fixed"}, {"value", pr.eta.value}}
                          : Json{{"type", "uniform"}, {"lo", pr.eta.lo}, {"hi", pr.eta.hi}};
  doc["priors"] = {{"alpha", alpha}, {"eta", eta}, {"precision", cfg.fit.prior_precision}};
  doc["engine"] = {{"name", to_string(cfg.fit.engine)},
                   {"n_draws", ec.n_draws},
                   {"burn_in", ec.burn_in},
                   {"thinning", ec.thinning},
                   {"trunc_eps", ec.trunc_eps},
                   {"mh_target_accept", ec.mh_target_accept},
                   {"mh_adapt_window", ec.mh_adapt_window},
                   {"mh_initial_scale", ec.mh_initial_scale},
                   {"jump_tol", ec.jump_tol},
                   {"quad", {{"abs_tol", ec.quad.abs_tol}, {"rel_tol", ec.quad.rel_tol},
                             {"max_subdivisions", ec.quad.max_subdivisions}}}};
  Json functional = cfg.fit.g.kind() == FunctionalSpec::Kind::identity
                        ? Json{{"type", "identity"}}
                        : Json{{"type", "indicator"}, {"threshold", cfg.fit.g.threshold()}};
  doc["run"] = {{"seed", cfg.seed}, {"n", cfg.n},         {"ns", cfg.ns},
                {"reps", cfg.reps}, {"level", cfg.level}, {"threads", cfg.threads},
                {"out", cfg.out},   {"functional", functional}};
  return doc;
}

Json summarize_draws(const PosteriorDraws& draws, double level, int bins) {
  if (draws.functional.empty()) throw DataError("summarize_draws: no draws");
  if (bins < 1) throw ParameterError("summarize_draws: bins must be >= 1");
  Json out;
  out["engine"] = draws.engine;
  out["n_draws"] = draws.functional.size();
  out["acceptance_rate"] = draws.acceptance_rate;
  out["functional"] = stats_of(draws.functional, bins);
  if (!draws.alpha.empty()) out["alpha"] = stats_of(draws.alpha, bins);
  if (!draws.eta.empty()) out["eta"] = stats_of(draws.eta, bins);
  if (draws.functional.size() >= 100) {
    const Interval ci = credible_interval(draws.functional, level);
    out["interval"] = {{"level", level}, {"lower", ci.lower}, {"upper", ci.upper}};
  }
  if (std::isfinite(draws.split_rhat)) out["split_rhat"] = draws.split_rhat;
  out["seed"] = draws.seed;
  out["stream_id"] = draws.stream_id;
  return out;
}

Json to_json(const CoverageReport& report) {
  Json cells = Json::array();
  for (const auto& c : report.cells) {
    cells.push_back({{"engine", c.engine}, {"n", c.n}, {"reps", c.reps}, {"coverage", c.coverage},
                     {"mean_length", c.mean_length}, {"failures", c.failures}, {"seed", c.seed}});
  }
  return {{"cells", cells}};
}

std::string read_text_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!os) throw std::runtime_error("write failed for " + path);
}

}  // namespace mcarsense
