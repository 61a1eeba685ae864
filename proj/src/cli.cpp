#include "mcarsense/cli.hpp"

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <pthread.h>

#include "CLI11.hpp"
#include "mcarsense/errors.hpp"
#include "mcarsense/io.hpp"
#include "mcarsense/service.hpp"

namespace fs = std::filesystem;

namespace mcarsense {

namespace {

struct Flags {
  std::string config;
  std::uint64_t seed = 0;
  std::size_t n = 0;
  int reps = 0;
  int threads = -1;
  std::string engine;
  std::string out;
  std::string data;
  std::string host = "127.0.0.1";
  int port = 8080;
};

bool given(const CLI::App& sub, const char* name) {
  const CLI::Option* opt = sub.get_option_no_throw(name);
  return opt != nullptr && opt->count() > 0;
}

RunConfig load_config(const Flags& f, const CLI::App& sub) {
  RunConfig cfg = f.config.empty() ? parse_run_config(Json::object()) : load_run_config(f.config);
  if (given(sub, "--seed")) cfg.seed = f.seed;
  if (given(sub, "--n")) {
    if (f.n < 1) throw ConfigError("--n must be >= 1");
    cfg.n = f.n;
    cfg.ns = {f.n};
  }
  if (given(sub, "--reps")) {
    if (f.reps < 1) throw ConfigError("--reps must be >= 1");
    cfg.reps = f.reps;
  }
  if (given(sub, "--threads")) {
    if (f.threads < 0) throw ConfigError("--threads must be >= 0");
    cfg.threads = f.threads;
  }
  if (given(sub, "--engine")) cfg.fit.engine = parse_engine(f.engine);
  if (given(sub, "--out")) cfg.out = f.out;
  return cfg;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  if (cfg.out.empty()) throw ConfigError("simulate needs an output path (--out or run.out)");
  RngStream rng(cfg.seed, 0);
  const ObservedDataset data = generate_dataset(cfg.fit.scenario, cfg.n, rng);
  write_dataset_csv(data, cfg.out);
  out << "wrote " << data.n() << " records (" << data.num_observed() << " observed) to " << cfg.out << "\n";
  return kExitOk;
}

int cmd_fit(const RunConfig& cfg, const std::string& data_path, std::ostream& out) {
  if (data_path.empty()) throw ConfigError("fit needs a dataset (--data)");
  if (!fs::exists(data_path)) throw ConfigError("dataset not found: " + data_path);
  const fs::path dir = cfg.out.empty() ? fs::path(".") : fs::path(cfg.out);
  fs::create_directories(dir);
  const ObservedDataset data = read_dataset_csv(data_path);
  RngStream rng(cfg.seed, 0);
  const PosteriorDraws draws = fit_dataset(cfg.fit, data, rng);
  const Json summary = summarize_draws(draws, cfg.level);
  write_draws_csv(draws, (dir / "draws.csv").string());
  write_text_file((dir / "summary.json").string(), summary.dump(2) + "\n");
  const auto& fs_ = summary["functional"];
  out << std::setprecision(6) << "engine " << draws.engine << ": mean " << fs_["mean"].get<double>() << ", 90% ["
      << fs_["q05"].get<double>() << ", " << fs_["q95"].get<double>() << "], acceptance " << draws.acceptance_rate
      << "\n";
  out << "wrote " << (dir / "draws.csv").string() << " and " << (dir / "summary.json").string() << "\n";
  return kExitOk;
}

int cmd_coverage(const RunConfig& cfg, std::ostream& out) {
  CoverageOptions opt;
  opt.ns = cfg.ns;
  opt.reps = cfg.reps;
  opt.base_seed = cfg.seed;
  opt.level = cfg.level;
  opt.threads = cfg.threads;
  const CoverageReport report = run_coverage(cfg.fit, opt);
  out << "engine      n   reps  coverage  mean_length  failures\n";
  for (const auto& c : report.cells) {
    out << std::left << std::setw(6) << c.engine << std::right << std::setw(7) << c.n << std::setw(7) << c.reps
        << std::fixed << std::setprecision(3) << std::setw(10) << c.coverage << std::setw(13) << c.mean_length
        << std::setw(10) << c.failures << std::defaultfloat << "\n";
    if (!c.first_failure.empty()) out << "  first failure: " << c.first_failure << "\n";
  }
  if (!cfg.out.empty()) {
    const bool json = fs::path(cfg.out).extension() == ".json";
    export_report(report, cfg.out, json ? ReportFormat::json : ReportFormat::csv);
    out << "wrote " << cfg.out << "\n";
  }
  return kExitOk;
}

int cmd_serve(const Flags& f, std::ostream& out) {
  std::string root = f.data;
  if (root.empty()) {
    const char* env = std::getenv("MCARSENSE_DATA_DIR");
    root = env && *env ? env : "mcarsense-data";
  }
  if (f.port < 0 || f.port > 65535) throw ConfigError("--port must be in [0, 65535]");

  // block SIGINT/SIGTERM in every thread, then wait for them here
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  Service service(root);
  HttpServer server(service);
  int port = 0;
  try {
    port = server.start(f.host, f.port);
  } catch (const std::runtime_error& e) {
    throw ConfigError(e.what());
  }
  out << "serving on http://" << f.host << ":" << port << " (store " << fs::absolute(root).string() << ")"
      << std::endl;
  int sig = 0;
  sigwait(&set, &sig);
  out << "shutting down" << std::endl;
  server.stop();
  service.wait_idle();
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian sensitivity analysis for outcomes missing not at random"};
  app.require_subcommand(1);
  Flags f;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", f.config, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--seed", f.seed, "Base random seed");
    sub->add_option("--out", f.out, "Output path");
  };

  CLI::App* simulate = app.add_subcommand("simulate", "Generate a dataset from the scenario");
  add_common(simulate);
  simulate->add_option("--n", f.n, "Sample size");

  CLI::App* fit = app.add_subcommand("fit", "Fit one dataset; writes draws.csv and summary.json into --out");
  add_common(fit);
  fit->add_option("--data", f.data, "Dataset CSV (x,r)");
  fit->add_option("--engine", f.engine, "h | peta | egp");

  CLI::App* coverage = app.add_subcommand("coverage", "Frequentist coverage of credible intervals");
  add_common(coverage);
  coverage->add_option("--n", f.n, "Single sample size (overrides run.ns)");
  coverage->add_option("--reps", f.reps, "Replications per sample size");
  coverage->add_option("--engine", f.engine, "h | peta | egp");
  coverage->add_option("--threads", f.threads, "Worker threads (0 = all cores)");

  CLI::App* serve = app.add_subcommand("serve", "JSON-over-HTTP service");
  serve->add_option("--port", f.port, "Port (0 picks a free one)");
  serve->add_option("--host", f.host, "Bind address");
  serve->add_option("--data", f.data, "Job store directory (default $MCARSENSE_DATA_DIR)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*serve) return cmd_serve(f, out);
    CLI::App* sub = *simulate ? simulate : *fit ? fit : coverage;
    const RunConfig cfg = load_config(f, *sub);
    if (*simulate) return cmd_simulate(cfg, out);
    if (*fit) return cmd_fit(cfg, f.data, out);
    return cmd_coverage(cfg, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitCompute;
  }
}

}  // namespace mcarsense
