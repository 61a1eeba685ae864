#include "mcarsense/service.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "httplib.h"
#include "mcarsense/errors.hpp"

namespace fs = std::filesystem;

namespace mcarsense {

namespace {

// thrown inside handlers, turned into {code, message}
struct HttpError {
  int status;
  std::string code;
  std::string message;
};

[[noreturn]] void bad_request(const std::string& msg) { throw HttpError{400, "bad_request", msg}; }
[[noreturn]] void not_found(const std::string& msg) { throw HttpError{404, "not_found", msg}; }
[[noreturn]] void conflict(const std::string& msg) { throw HttpError{409, "conflict", msg}; }

Json parse_body(const std::string& body) {
  if (body.empty()) return Json::object();
  try {
    Json doc = Json::parse(body);
    if (!doc.is_object()) bad_request("request body must be a JSON object");
    return doc;
  } catch (const Json::parse_error& e) {
    bad_request(std::string("invalid JSON: ") + e.what());
  }
}

void allow_keys(const Json& obj, std::initializer_list<const char*> keys) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; })) {
      bad_request("unknown field '" + it.key() + "'");
    }
  }
}

bool valid_id(const std::string& id) {
  return !id.empty() && id.size() <= 64 &&
         std::all_of(id.begin(), id.end(), [](char ch) { return std::isalnum(static_cast<unsigned char>(ch)) || ch == '-'; });
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> out;
  std::stringstream ss(path);
  std::string part;
  while (std::getline(ss, part, '/')) {
    if (!part.empty()) out.push_back(part);
  }
  return out;
}

// Builds a RunConfig document from the flat request shape used by /api/fits and /api/coverage.
Json run_config_doc(const Json& body, std::initializer_list<const char*> run_keys) {
  Json doc = Json::object();
  if (body.contains("scenario")) doc["scenario"] = body["scenario"];
  if (body.contains("priors")) doc["priors"] = body["priors"];
  Json engine = body.contains("config") ? body["config"] : Json::object();
  if (!engine.is_object()) bad_request("config must be an object");
  if (body.contains("engine")) engine["name"] = body["engine"];
  doc["engine"] = engine;
  Json run = Json::object();
  for (const char* k : run_keys) {
    if (body.contains(k)) run[k] = body[k];
  }
  doc["run"] = run;
  return doc;
}

void atomic_write(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  write_text_file(tmp.string(), text);
  fs::rename(tmp, path);
}

}  // namespace

std::string to_string(JobStatus status) {
  switch (status) {
    case JobStatus::queued: return "queued";
    case JobStatus::running: return "running";
    case JobStatus::done: return "done";
    case JobStatus::failed: return "failed";
  }
  return "failed";
}

JobStatus parse_job_status(const std::string& text) {
  if (text == "queued") return JobStatus::queued;
  if (text == "running") return JobStatus::running;
  if (text == "done") return JobStatus::done;
  if (text == "failed") return JobStatus::failed;
  throw DataError("unknown job status '" + text + "'");
}

Json to_json(const JobRecord& job) {
  Json doc{{"job_id", job.job_id}, {"kind", job.kind}, {"status", to_string(job.status)},
           {"progress", job.progress}};
  if (!job.dataset_id.empty()) doc["dataset_id"] = job.dataset_id;
  if (!job.error.empty()) doc["error"] = job.error;
  if (job.status == JobStatus::done) {
    doc["result"] = job.kind == "fit" ? "/api/fits/" + job.job_id + "/summary" : "/api/coverage/" + job.job_id;
  }
  return doc;
}

JobRecord job_from_json(const Json& doc) {
  JobRecord job;
  job.job_id = doc.at("job_id").get<std::string>();
  job.kind = doc.at("kind").get<std::string>();
  job.status = parse_job_status(doc.at("status").get<std::string>());
  job.progress = doc.value("progress", 0.0);
  job.dataset_id = doc.value("dataset_id", "");
  job.error = doc.value("error", "");
  return job;
}

// ---------------------------------------------------------------------------

Service::Service(fs::path data_dir) : root_(std::move(data_dir)) {
  fs::create_directories(root_ / "datasets");
  fs::create_directories(root_ / "jobs");
  recover();
}

Service::~Service() { wait_idle(); }

void Service::wait_idle() {
  std::vector<std::jthread> workers;
  {
    std::lock_guard lock(mutex_);
    workers.swap(workers_);
  }
  for (auto& w : workers) {
    if (w.joinable()) w.join();
  }
}

void Service::recover() {
  for (const auto& entry : fs::directory_iterator(root_ / "jobs")) {
    const fs::path file = entry.path() / "job.json";
    if (!entry.is_directory() || !fs::exists(file)) continue;
    JobRecord rec;
    try {
      rec = job_from_json(Json::parse(read_text_file(file.string())));
    } catch (const std::exception&) {
      continue;
    }
    if (rec.status == JobStatus::queued || rec.status == JobStatus::running) {
      rec.status = JobStatus::failed;
      rec.error = "interrupted by a service restart";
      persist(rec);
    }
    auto job = std::make_shared<Job>();
    job->record = rec;
    job->progress = rec.progress;
    jobs_[rec.job_id] = job;
  }
}

std::string Service::new_id(const char* prefix) {
  static thread_local std::mt19937_64 gen{std::random_device{}()};
  for (;;) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s-%012llx", prefix,
                  static_cast<unsigned long long>((gen() ^ ++id_counter_) & 0xffffffffffffULL));
    std::string id(buf);
    if (!jobs_.count(id) && !fs::exists(root_ / "jobs" / id) && !fs::exists(root_ / "datasets" / (id + ".csv"))) {
      return id;
    }
  }
}

std::shared_ptr<Service::Job> Service::find_job(const std::string& id) {
  if (!valid_id(id)) not_found("unknown job '" + id + "'");
  std::lock_guard lock(mutex_);
  auto it = jobs_.find(id);
  if (it == jobs_.end()) not_found("unknown job '" + id + "'");
  return it->second;
}

void Service::persist(const JobRecord& record) {
  const fs::path dir = root_ / "jobs" / record.job_id;
  fs::create_directories(dir);
  atomic_write(dir / "job.json", to_json(record).dump(2));
}

void Service::set_status(const std::shared_ptr<Job>& job, JobStatus status, const std::string& error) {
  std::lock_guard lock(mutex_);
  // only forward transitions
  if (static_cast<int>(status) <= static_cast<int>(job->record.status) && status != JobStatus::failed) return;
  if (job->record.status == JobStatus::done || job->record.status == JobStatus::failed) return;
  job->record.status = status;
  job->record.error = error;
  if (status == JobStatus::done) job->progress = 1.0;
  job->record.progress = job->progress;
  persist(job->record);
}

// ---------------------------------------------------------------------------

HttpResult Service::handle(const std::string& method, const std::string& path,
                           const std::map<std::string, std::string>& query, const std::string& body) {
  try {
    const auto seg = split_path(path);
    if (seg.size() < 2 || seg[0] != "api") not_found("no route for " + method + " " + path);
    const std::string& head = seg[1];
    if (method == "POST") {
      if (seg.size() == 2 && head == "datasets") return post_dataset(body);
      if (seg.size() == 2 && head == "fits") return post_fit(body);
      if (seg.size() == 2 && head == "coverage") return post_coverage(body);
      if (seg.size() == 3 && head == "elicit" && seg[2] == "propensity") return post_propensity(body);
      if (seg.size() == 3 && head == "scenarios" && seg[2] == "generate") return post_generate(body);
    } else if (method == "GET") {
      if (seg.size() == 3 && head == "jobs") return get_job(seg[2]);
      if (seg.size() == 4 && head == "fits" && seg[3] == "summary") return get_fit_summary(seg[2]);
      if (seg.size() == 4 && head == "fits" && seg[3] == "draws") return get_fit_draws(seg[2], query);
      if (seg.size() == 3 && head == "coverage") return get_coverage(seg[2]);
    }
    not_found("no route for " + method + " " + path);
  } catch (const HttpError& e) {
    return {e.status, {{"code", e.code}, {"message", e.message}}};
  } catch (const ConfigError& e) {
    return {400, {{"code", "invalid_config"}, {"message", e.what()}}};
  } catch (const DataError& e) {
    return {400, {{"code", "invalid_data"}, {"message", e.what()}}};
  } catch (const ParameterError& e) {
    return {400, {{"code", "invalid_parameter"}, {"message", e.what()}}};
  } catch (const DomainError& e) {
    return {400, {{"code", "invalid_parameter"}, {"message", e.what()}}};
  } catch (const Json::exception& e) {
    return {400, {{"code", "bad_request"}, {"message", e.what()}}};
  } catch (const std::exception& e) {
    return {500, {{"code", "internal"}, {"message", e.what()}}};
  }
}

HttpResult Service::post_dataset(const std::string& body) {
  const ObservedDataset data = parse_dataset_csv(body);
  std::lock_guard lock(mutex_);
  const std::string id = new_id("ds");
  atomic_write(root_ / "datasets" / (id + ".csv"), format_dataset_csv(data));
  return {201, {{"dataset_id", id}, {"n", data.n()}, {"num_observed", data.num_observed()}}};
}

HttpResult Service::post_generate(const std::string& body) {
  const Json req = parse_body(body);
  allow_keys(req, {"scenario", "n", "seed"});
  Json doc = Json::object();
  if (req.contains("scenario")) doc["scenario"] = req["scenario"];
  const RunConfig cfg = parse_run_config(doc);
  if (!req.contains("n") || !req["n"].is_number_integer() || req["n"].get<long long>() < 1 ||
      req["n"].get<long long>() > 10'000'000) {
    bad_request("n must be an integer in [1, 1e7]");
  }
  if (req.contains("seed") && (!req["seed"].is_number_integer() || req["seed"].get<long long>() < 0)) {
    bad_request("seed must be a nonnegative integer");
  }
  const auto n = req["n"].get<std::size_t>();
  const auto seed = req.value("seed", std::uint64_t{1});
  RngStream rng(seed, 0);
  const ObservedDataset data = generate_dataset(cfg.fit.scenario, n, rng);
  const double c = compute_c(cfg.fit.scenario);
  std::lock_guard lock(mutex_);
  const std::string id = new_id("ds");
  atomic_write(root_ / "datasets" / (id + ".csv"), format_dataset_csv(data));
  return {201,
          {{"dataset_id", id},
           {"n", data.n()},
           {"num_observed", data.num_observed()},
           {"c", c},
           {"eta", true_eta(cfg.fit.scenario, c)},
           {"truth", true_functional(cfg.fit.scenario)}}};
}

HttpResult Service::post_propensity(const std::string& body) {
  const Json req = parse_body(body);
  allow_keys(req, {"eta", "alpha", "c", "y_grid"});
  for (const char* k : {"eta", "alpha"}) {
    if (!req.contains(k) || !req[k].is_number()) bad_request(std::string(k) + " must be a number");
  }
  if (req.contains("c") && !req["c"].is_number()) bad_request("c must be a number");
  if (!req.contains("y_grid") || !req["y_grid"].is_array() || req["y_grid"].empty()) {
    bad_request("y_grid must be a nonempty array");
  }
  if (req["y_grid"].size() > 100000) bad_request("y_grid has more than 100000 points");
  std::vector<double> grid;
  for (const auto& v : req["y_grid"]) {
    if (!v.is_number() || !(v.get<double>() > 0.0) || !std::isfinite(v.get<double>())) {
      bad_request("y_grid entries must be positive finite numbers");
    }
    grid.push_back(v.get<double>());
  }
  const double eta = req["eta"].get<double>();
  const SensitivitySpec spec{req["alpha"].get<double>(), req.value("c", 0.0)};
  if (!std::isfinite(eta) || !std::isfinite(spec.alpha) || !std::isfinite(spec.c)) {
    bad_request("eta, alpha and c must be finite");
  }
  return {200, {{"y_grid", grid}, {"values", propensity_curve(eta, spec, grid)}}};
}

HttpResult Service::post_fit(const std::string& body) {
  const Json req = parse_body(body);
  allow_keys(req, {"dataset_id", "engine", "priors", "config", "scenario", "seed", "functional", "level"});
  if (!req.contains("dataset_id") || !req["dataset_id"].is_string()) bad_request("dataset_id is required");
  const std::string dataset_id = req["dataset_id"].get<std::string>();
  const fs::path data_path = root_ / "datasets" / (dataset_id + ".csv");
  if (!valid_id(dataset_id) || !fs::exists(data_path)) not_found("unknown dataset '" + dataset_id + "'");
  RunConfig cfg = parse_run_config(run_config_doc(req, {"seed", "functional", "level"}));
  if (cfg.fit.engine == EngineKind::egp && (!cfg.fit.priors.eta.fixed || !cfg.fit.priors.alpha.fixed)) {
    bad_request("the egp engine needs fixed eta and alpha");
  }
  ObservedDataset data = read_dataset_csv(data_path.string());
  if (data.num_observed() == 0) bad_request("dataset has no observed outcomes");

  auto job = std::make_shared<Job>();
  {
    std::lock_guard lock(mutex_);
    job->record.job_id = new_id("fit");
    job->record.kind = "fit";
    job->record.dataset_id = dataset_id;
    Json cfg_doc = to_json(cfg);
    cfg_doc["dataset_id"] = dataset_id;
    fs::create_directories(root_ / "jobs" / job->record.job_id);
    atomic_write(root_ / "jobs" / job->record.job_id / "config.json", cfg_doc.dump(2));
    persist(job->record);
    jobs_[job->record.job_id] = job;
  }
  const std::string id = job->record.job_id;
  auto worker = [this, job, cfg = std::move(cfg), data = std::move(data)]() mutable {
    set_status(job, JobStatus::running);
    try {
      cfg.fit.config.progress = [job](double f) { job->progress = f; };
      RngStream rng(cfg.seed, 0);
      const PosteriorDraws draws = fit_dataset(cfg.fit, data, rng);
      const Json summary = summarize_draws(draws, cfg.level);
      {
        std::lock_guard lock(mutex_);
        const fs::path dir = root_ / "jobs" / job->record.job_id;
        atomic_write(dir / "draws.csv", format_draws_csv(draws));
        atomic_write(dir / "summary.json", summary.dump(2));
      }
      set_status(job, JobStatus::done);
    } catch (const std::exception& e) {
      set_status(job, JobStatus::failed, e.what());
    }
  };
  {
    std::lock_guard lock(mutex_);
    workers_.emplace_back(std::move(worker));
  }
  return {202, {{"job_id", id}}};
}

HttpResult Service::post_coverage(const std::string& body) {
  const Json req = parse_body(body);
  allow_keys(req, {"engine", "priors", "config", "scenario", "seed", "functional", "level", "ns", "reps", "threads"});
  RunConfig cfg = parse_run_config(run_config_doc(req, {"seed", "functional", "level", "ns", "reps", "threads"}));
  if (cfg.fit.engine == EngineKind::egp && (!cfg.fit.priors.eta.fixed || !cfg.fit.priors.alpha.fixed)) {
    bad_request("the egp engine needs fixed eta and alpha");
  }
  auto job = std::make_shared<Job>();
  {
    std::lock_guard lock(mutex_);
    job->record.job_id = new_id("cov");
    job->record.kind = "coverage";
    fs::create_directories(root_ / "jobs" / job->record.job_id);
    atomic_write(root_ / "jobs" / job->record.job_id / "config.json", to_json(cfg).dump(2));
    persist(job->record);
    jobs_[job->record.job_id] = job;
  }
  const std::string id = job->record.job_id;
  auto worker = [this, job, cfg = std::move(cfg)]() {
    set_status(job, JobStatus::running);
    try {
      CoverageOptions opt;
      opt.ns = cfg.ns;
      opt.reps = cfg.reps;
      opt.base_seed = cfg.seed;
      opt.level = cfg.level;
      opt.threads = cfg.threads;
      opt.progress = [job](double f) { job->progress = f; };
      const CoverageReport report = run_coverage(cfg.fit, opt);
      {
        std::lock_guard lock(mutex_);
        atomic_write(root_ / "jobs" / job->record.job_id / "report.json", to_json(report).dump(2));
      }
      set_status(job, JobStatus::done);
    } catch (const std::exception& e) {
      set_status(job, JobStatus::failed, e.what());
    }
  };
  {
    std::lock_guard lock(mutex_);
    workers_.emplace_back(std::move(worker));
  }
  return {202, {{"job_id", id}}};
}

HttpResult Service::get_job(const std::string& id) {
  auto job = find_job(id);
  std::lock_guard lock(mutex_);
  JobRecord rec = job->record;
  rec.progress = job->progress;
  return {200, to_json(rec)};
}

namespace {

void require_done(const JobRecord& rec, const char* kind) {
  if (rec.kind != kind) throw HttpError{404, "not_found", "job '" + rec.job_id + "' is not a " + kind + " job"};
  if (rec.status == JobStatus::failed) conflict("job failed: " + rec.error);
  if (rec.status != JobStatus::done) conflict("job is " + to_string(rec.status));
}

}  // namespace

HttpResult Service::get_fit_summary(const std::string& id) {
  auto job = find_job(id);
  std::lock_guard lock(mutex_);
  require_done(job->record, "fit");
  return {200, Json::parse(read_text_file((root_ / "jobs" / id / "summary.json").string()))};
}

HttpResult Service::get_fit_draws(const std::string& id, const std::map<std::string, std::string>& query) {
  auto job = find_job(id);
  const auto it = query.find("param");
  const std::string param = it == query.end() ? "functional" : it->second;
  if (param != "functional" && param != "alpha" && param != "eta") {
    bad_request("param must be functional, alpha or eta");
  }
  std::lock_guard lock(mutex_);
  require_done(job->record, "fit");
  const PosteriorDraws d = read_draws_csv((root_ / "jobs" / id / "draws.csv").string());
  const auto& v = param == "functional" ? d.functional : param == "alpha" ? d.alpha : d.eta;
  return {200, Json(v)};
}

HttpResult Service::get_coverage(const std::string& id) {
  auto job = find_job(id);
  std::lock_guard lock(mutex_);
  require_done(job->record, "coverage");
  return {200, Json::parse(read_text_file((root_ / "jobs" / id / "report.json").string()))};
}

// ---------------------------------------------------------------------------

struct HttpServer::Impl {
  Service& service;
  httplib::Server server;
  std::thread thread;

  explicit Impl(Service& s) : service(s) {
    auto dispatch = [this](const httplib::Request& req, httplib::Response& res) {
      std::map<std::string, std::string> query;
      for (const auto& [k, v] : req.params) query.emplace(k, v);
      const HttpResult r = service.handle(req.method, req.path, query, req.body);
      res.status = r.status;
      res.set_content(r.body.dump(), "application/json");
    };
    server.Get(".*", dispatch);
    server.Post(".*", dispatch);
  }
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port) {
  int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void HttpServer::run(const std::string& host, int port) {
  if (!impl_->server.listen(host, port)) throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port));
}

void HttpServer::stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace mcarsense
