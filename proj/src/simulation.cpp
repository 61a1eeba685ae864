#include "mcarsense/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "mcarsense/errors.hpp"
#include "mcarsense/extended_gamma.hpp"
#include "mcarsense/samplers.hpp"
#include "mcarsense/special.hpp"

namespace mcarsense {

std::string to_string(CMode mode) {
  switch (mode) {
    case CMode::zero: return "zero";
    case CMode::observed_mean_log: return "observed_mean_log";
    case CMode::oracle_mean_log: return "oracle_mean_log";
    case CMode::explicit_value: return "explicit";
  }
  return "unknown";
}

CMode parse_c_mode(const std::string& text) {
  if (text == "zero") return CMode::zero;
  if (text == "observed_mean_log") return CMode::observed_mean_log;
  if (text == "oracle_mean_log") return CMode::oracle_mean_log;
  if (text == "explicit") return CMode::explicit_value;
  throw ConfigError("unknown c mode '" + text + "'");
}

void ScenarioSpec::validate() const {
  if (!(r > 0.0) || !(s > 0.0)) throw ParameterError("scenario: r and s must be positive");
  if (!(p0 > 0.0 && p0 < 1.0)) throw ParameterError("scenario: p0 must lie in (0, 1)");
  if (!(r + alpha0 > 0.0)) throw ParameterError("scenario: r + alpha0 must be positive");
  if (!std::isfinite(c_value)) throw ParameterError("scenario: c must be finite");
}

double compute_c(const ScenarioSpec& scn) {
  scn.validate();
  switch (scn.c_mode) {
    case CMode::zero: return 0.0;
    case CMode::observed_mean_log: return digamma(scn.r) - std::log(scn.s);
    case CMode::oracle_mean_log:
      return scn.p0 * (digamma(scn.r) - std::log(scn.s)) +
             (1.0 - scn.p0) * (digamma(scn.r + scn.alpha0) - std::log(scn.s));
    case CMode::explicit_value: return scn.c_value;
  }
  return 0.0;
}

double true_functional(const ScenarioSpec& scn, const FunctionalSpec& g) {
  scn.validate();
  if (g.kind() == FunctionalSpec::Kind::identity) {
    return scn.p0 * scn.r / scn.s + (1.0 - scn.p0) * (scn.r + scn.alpha0) / scn.s;
  }
  const double t = g.threshold();
  if (!(t > 0.0)) return 0.0;
  return scn.p0 * boost::math::gamma_p(scn.r, scn.s * t) +
         (1.0 - scn.p0) * boost::math::gamma_p(scn.r + scn.alpha0, scn.s * t);
}

double true_eta(const ScenarioSpec& scn, double c) {
  scn.validate();
  return std::log((1.0 - scn.p0) / scn.p0) + scn.alpha0 * (std::log(scn.s) + c) -
         (log_gamma(scn.r + scn.alpha0) - log_gamma(scn.r));
}

ObservedDataset generate_dataset(const ScenarioSpec& scn, std::size_t n, RngStream& rng) {
  scn.validate();
  if (n == 0) throw ParameterError("generate_dataset: n must be >= 1");
  std::vector<Record> recs;
  recs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int r = rng.uniform() < scn.p0 ? 1 : 0;
    const double y = sample_gamma(r == 1 ? scn.r : scn.r + scn.alpha0, scn.s, rng);
    recs.push_back({r == 1 ? y : 0.0, r});
  }
  return ObservedDataset(std::move(recs));
}

BaseMeasure h_prior_base(const ScenarioSpec& scn, double precision) {
  scn.validate();
  if (!(precision > 0.0)) throw ParameterError("prior precision must be positive");
  auto cont = std::make_shared<GammaDistribution>(scn.r, scn.s);
  return BaseMeasure(precision * scn.p0, cont, {{Point::star(), precision * (1.0 - scn.p0)}});
}

BaseMeasure p_prior_base(const ScenarioSpec& scn, double precision) {
  scn.validate();
  if (!(precision > 0.0)) throw ParameterError("prior precision must be positive");
  auto mix = std::make_shared<MixtureDistribution>(std::vector<MixtureDistribution::Component>{
      {scn.p0, std::make_shared<GammaDistribution>(scn.r, scn.s)},
      {1.0 - scn.p0, std::make_shared<GammaDistribution>(scn.r + scn.alpha0, scn.s)}});
  return BaseMeasure(precision, mix);
}

DiscreteMeasure gamma_quantile_atoms(double shape, double rate, std::size_t k) {
  if (k == 0) throw ParameterError("gamma_quantile_atoms: k must be >= 1");
  if (!(shape > 0.0) || !(rate > 0.0)) throw ParameterError("gamma_quantile_atoms: invalid Gamma parameters");
  std::vector<WeightedPoint> atoms;
  atoms.reserve(k);
  const double w = 1.0 / static_cast<double>(k);
  for (std::size_t i = 0; i < k; ++i) {
    const double u = (static_cast<double>(i) + 0.5) * w;
    atoms.push_back({Point::outcome(boost::math::gamma_p_inv(shape, u) / rate), w});
  }
  return DiscreteMeasure::normalize(std::move(atoms), Space::outcomes);
}

double efficiency_bound_truth(const ScenarioSpec& scn, double c, const FunctionalSpec& g,
                              const QuadratureSpec& quad) {
  scn.validate();
  const GammaDistribution p1(scn.r, scn.s), p0(scn.r + scn.alpha0, scn.s);
  auto expect = [&](const GammaDistribution& d, const std::function<double(double)>& f) {
    return integrate_semiline([&](double y) { return y > 0.0 ? f(y) * d.density(y) : 0.0; }, quad).value;
  };
  const double eta = true_eta(scn, c);
  const double p1g = expect(p1, [&](double y) { return g(y); });
  const double p0g = expect(p0, [&](double y) { return g(y); });
  const double second = expect(p1, [&](double y) {
    const double h = (g(y) - p0g) * std::exp(eta + scn.alpha0 * (std::log(y) - c)) + g(y) - p1g;
    return h * h;
  });
  const double p = scn.p0;
  return p * (1.0 - p) * (p0g - p1g) * (p0g - p1g) + p * second;
}

// ---------------------------------------------------------------------------

double empirical_quantile(std::span<const double> draws, double prob) {
  if (draws.empty()) throw DataError("empirical_quantile: no draws");
  if (!(prob >= 0.0 && prob <= 1.0)) throw ParameterError("empirical_quantile: prob must be in [0, 1]");
  std::vector<double> sorted(draws.begin(), draws.end());
  std::sort(sorted.begin(), sorted.end());
  const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

Interval credible_interval(std::span<const double> draws, double level) {
  if (draws.size() < 100) throw DataError("credible_interval: need at least 100 draws");
  if (!(level > 0.0 && level < 1.0)) throw ParameterError("credible_interval: level must be in (0, 1)");
  for (double d : draws) {
    if (!std::isfinite(d)) throw NumericError("credible_interval: non-finite draw");
  }
  std::vector<double> sorted(draws.begin(), draws.end());
  std::sort(sorted.begin(), sorted.end());
  auto q = [&](double prob) {
    const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  };
  return {q(0.5 * (1.0 - level)), q(0.5 * (1.0 + level))};
}

std::string to_string(EngineKind engine) {
  switch (engine) {
    case EngineKind::h: return "h";
    case EngineKind::peta: return "peta";
    case EngineKind::egp: return "egp";
  }
  return "unknown";
}

EngineKind parse_engine(const std::string& text) {
  if (text == "h") return EngineKind::h;
  if (text == "peta") return EngineKind::peta;
  if (text == "egp") return EngineKind::egp;
  throw ConfigError("unknown engine '" + text + "' (expected h, peta or egp)");
}

PosteriorDraws fit_dataset(const FitSetup& setup, const ObservedDataset& data, RngStream& rng) {
  const double c = compute_c(setup.scenario);
  switch (setup.engine) {
    case EngineKind::h:
      return run_h_engine(data, h_prior_base(setup.scenario, setup.prior_precision), setup.priors, c,
                          setup.g, setup.config, rng);
    case EngineKind::peta:
      return run_peta_gibbs(data, p_prior_base(setup.scenario, setup.prior_precision), setup.priors, c,
                            setup.g, setup.config, rng);
    case EngineKind::egp:
      if (!setup.priors.eta.fixed || !setup.priors.alpha.fixed) {
        throw ConfigError("the egp engine needs fixed eta and alpha");
      }
      return run_egp_engine(data, setup.priors.eta.value, {setup.priors.alpha.value, c},
                            p_prior_base(setup.scenario, setup.prior_precision), setup.g,
                            setup.config, rng);
  }
  throw ConfigError("unknown engine");
}

RngStream replication_data_stream(std::uint64_t base_seed, int rep, std::size_t n) {
  return RngStream(base_seed, static_cast<std::uint64_t>(rep)).substream(2 * n);
}

RngStream replication_engine_stream(std::uint64_t base_seed, int rep, std::size_t n) {
  return RngStream(base_seed, static_cast<std::uint64_t>(rep)).substream(2 * n + 1);
}

CoverageReport run_coverage(const FitSetup& setup, const CoverageOptions& options) {
  if (options.reps < 1) throw ParameterError("run_coverage: reps must be >= 1");
  if (options.ns.empty()) throw ParameterError("run_coverage: no sample sizes");
  setup.scenario.validate();
  setup.priors.validate();
  setup.config.validate();
  const double truth = true_functional(setup.scenario, setup.g);

  struct Outcome {
    bool ok = false;
    bool covered = false;
    double length = 0.0;
    std::string error;
  };

  const std::size_t total = options.ns.size() * static_cast<std::size_t>(options.reps);
  std::vector<Outcome> outcomes(total);
  std::atomic<std::size_t> next{0}, done{0};
  std::mutex progress_mu;

  auto worker = [&] {
    for (;;) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= total) return;
      const std::size_t n = options.ns[idx / options.reps];
      const int rep = static_cast<int>(idx % options.reps);
      Outcome& o = outcomes[idx];
      try {
        RngStream data_rng = replication_data_stream(options.base_seed, rep, n);
        RngStream engine_rng = replication_engine_stream(options.base_seed, rep, n);
        const ObservedDataset data = generate_dataset(setup.scenario, n, data_rng);
        const PosteriorDraws draws = fit_dataset(setup, data, engine_rng);
        const Interval ci = credible_interval(draws.functional, options.level);
        o.ok = true;
        o.covered = ci.contains(truth);
        o.length = ci.length();
      } catch (const std::exception& e) {
        o.error = e.what();
      }
      const std::size_t d = done.fetch_add(1) + 1;
      if (options.progress) {
        std::lock_guard<std::mutex> lock(progress_mu);
        options.progress(static_cast<double>(d) / static_cast<double>(total));
      }
    }
  };

  int threads = options.threads > 0 ? options.threads : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::clamp(threads, 1, static_cast<int>(std::min<std::size_t>(total, 256)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  CoverageReport report;
  for (std::size_t k = 0; k < options.ns.size(); ++k) {
    CoverageCell cell;
    cell.engine = to_string(setup.engine);
    cell.n = options.ns[k];
    cell.reps = options.reps;
    cell.seed = options.base_seed;
    double length_sum = 0.0;
    int ok = 0;
    for (int rep = 0; rep < options.reps; ++rep) {
      const Outcome& o = outcomes[k * options.reps + rep];
      if (!o.ok) {
        ++cell.failures;
        if (cell.first_failure.empty()) cell.first_failure = o.error;
        continue;
      }
      ++ok;
      cell.covered += o.covered;
      length_sum += o.length;
    }
    cell.coverage = ok > 0 ? static_cast<double>(cell.covered) / ok : std::numeric_limits<double>::quiet_NaN();
    cell.mean_length = ok > 0 ? length_sum / ok : std::numeric_limits<double>::quiet_NaN();
    report.cells.push_back(cell);
  }
  return report;
}

// ---------------------------------------------------------------------------

double anderson_darling_normal(std::span<const double> draws) {
  const std::size_t m = draws.size();
  if (m < 8) throw DataError("anderson_darling_normal: need at least 8 draws");
  const double mean = std::accumulate(draws.begin(), draws.end(), 0.0) / static_cast<double>(m);
  double ss = 0.0;
  for (double d : draws) ss += (d - mean) * (d - mean);
  const double sd = std::sqrt(ss / static_cast<double>(m - 1));
  if (!(sd > 0.0)) return std::numeric_limits<double>::infinity();
  std::vector<double> z(m);
  for (std::size_t i = 0; i < m; ++i) z[i] = (draws[i] - mean) / sd;
  std::sort(z.begin(), z.end());
  // log Phi(x) and log(1 - Phi(x)) through erfc to keep the tails
  auto log_cdf = [](double x) { return std::log(0.5 * std::erfc(-x / std::sqrt(2.0))); };
  double s = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double a = log_cdf(z[i]);
    const double b = log_cdf(-z[m - 1 - i]);
    s += (2.0 * static_cast<double>(i) + 1.0) * (a + b);
  }
  return -static_cast<double>(m) - s / static_cast<double>(m);
}

BvMReport bvm_diagnostic(const PosteriorDraws& draws, const ObservedDataset& data,
                         const ScenarioSpec& scn, const FunctionalSpec& g) {
  if (draws.functional.size() < 2) throw DataError("bvm_diagnostic: need at least two draws");
  BvMReport rep;
  rep.n = data.n();
  const auto& f = draws.functional;
  const double mean = std::accumulate(f.begin(), f.end(), 0.0) / static_cast<double>(f.size());
  double ss = 0.0;
  for (double v : f) ss += (v - mean) * (v - mean);
  const double var = ss / static_cast<double>(f.size() - 1);
  rep.scaled_variance = static_cast<double>(rep.n) * var;
  rep.efficiency_bound = efficiency_bound_truth(scn, compute_c(scn), g);
  rep.ratio = rep.scaled_variance / rep.efficiency_bound;
  rep.anderson_darling = f.size() >= 8 ? anderson_darling_normal(f) : std::numeric_limits<double>::quiet_NaN();
  return rep;
}

PosteriorMeanCheck posterior_mean_check(const ObservedDataset& data, double eta,
                                        const SensitivitySpec& spec, const BaseMeasure& base,
                                        const QuadratureSpec& quad) {
  if (data.num_observed() == 0) throw DataError("posterior_mean_check: no observed outcomes");
  const double alpha = spec.alpha, c = spec.c;
  auto b = [eta, alpha, c](double y) { return 1.0 + std::exp(eta + alpha * (std::log(y) - c)); };
  const EGPModel model(b, alpha == 0.0 ? 1.0 + std::exp(eta) : 1.0, base);
  const GroupedSample grouped(data.observed_values());
  const EGPPosteriorMean mean = egp_posterior_mean(model, grouped, quad);

  PosteriorMeanCheck out;
  const double n = static_cast<double>(grouped.n());
  double abs_sum = 0.0;
  for (std::size_t j = 0; j < grouped.num_distinct(); ++j) {
    const double gap = std::abs(mean.atoms.atoms()[j].weight - grouped.multiplicities()[j] / n);
    abs_sum += gap;
    out.max_atom_gap = std::max(out.max_atom_gap, gap);
  }
  out.diffuse_mass = mean.diffuse_mass;
  // total variation: half the L1 distance; the empirical measure has no diffuse part
  out.sup_distance = 0.5 * (abs_sum + mean.diffuse_mass);
  out.bound = 2.0 / n;
  out.pass = out.sup_distance <= out.bound;
  return out;
}

// ---------------------------------------------------------------------------

void export_report(const CoverageReport& report, const std::string& path, ReportFormat format) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("export_report: cannot open " + path);
  os << std::setprecision(17);
  if (format == ReportFormat::csv) {
    os << "engine,n,reps,coverage,mean_length,failures,seed\n";
    for (const auto& c : report.cells) {
      os << c.engine << ',' << c.n << ',' << c.reps << ',' << c.coverage << ',' << c.mean_length << ','
         << c.failures << ',' << c.seed << '\n';
    }
  } else {
    nlohmann::ordered_json doc;
    doc["cells"] = nlohmann::ordered_json::array();
    for (const auto& c : report.cells) {
      nlohmann::ordered_json cell;
      cell["engine"] = c.engine;
      cell["n"] = c.n;
      cell["reps"] = c.reps;
      cell["coverage"] = c.coverage;
      cell["mean_length"] = c.mean_length;
      cell["failures"] = c.failures;
      cell["seed"] = c.seed;
      doc["cells"].push_back(cell);
    }
    os << doc.dump(2) << '\n';
  }
  if (!os) throw std::runtime_error("export_report: write failed for " + path);
}

CoverageReport read_report_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("read_report_csv: cannot open " + path);
  std::string line;
  if (!std::getline(is, line) || line != "engine,n,reps,coverage,mean_length,failures,seed") {
    throw DataError("read_report_csv: unexpected header in " + path);
  }
  CoverageReport report;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 7) throw DataError("read_report_csv: expected 7 fields in '" + line + "'");
    CoverageCell c;
    c.engine = fields[0];
    c.n = std::stoull(fields[1]);
    c.reps = std::stoi(fields[2]);
    c.coverage = std::stod(fields[3]);
    c.mean_length = std::stod(fields[4]);
    c.failures = std::stoi(fields[5]);
    c.seed = std::stoull(fields[6]);
    report.cells.push_back(c);
  }
  return report;
}

}  // namespace mcarsense
