#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "mcarsense/io.hpp"

namespace mcarsense {

enum class JobStatus { queued, running, done, failed };
std::string to_string(JobStatus status);
JobStatus parse_job_status(const std::string& text);

struct JobRecord {
  std::string job_id;
  std::string kind;  // "fit" or "coverage"
  JobStatus status = JobStatus::queued;
  double progress = 0.0;
  std::string dataset_id;
  std::string error;
};

Json to_json(const JobRecord& job);
JobRecord job_from_json(const Json& doc);

struct HttpResult {
  int status = 200;
  Json body;
};

/// Request handling and the flat-file job store, independent of the HTTP transport.
///
/// Layout under the data directory:
///   datasets/<id>.csv
///   jobs/<id>/job.json, config.json, and on success draws.csv + summary.json (fits)
///   or report.json (coverage runs)
class Service {
 public:
  /// Creates the directories if needed. Jobs left queued or running by a
  /// previous process are marked failed.
  explicit Service(std::filesystem::path data_dir);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// query holds the decoded URL parameters.
  HttpResult handle(const std::string& method, const std::string& path,
                    const std::map<std::string, std::string>& query, const std::string& body);

  /// Blocks until every submitted job has finished.
  void wait_idle();

  const std::filesystem::path& data_dir() const noexcept { return root_; }

 private:
  struct Job {
    JobRecord record;
    std::atomic<double> progress{0.0};
  };

  HttpResult post_dataset(const std::string& body);
  HttpResult post_fit(const std::string& body);
  HttpResult post_coverage(const std::string& body);
  HttpResult get_job(const std::string& id);
  HttpResult get_fit_summary(const std::string& id);
  HttpResult get_fit_draws(const std::string& id, const std::map<std::string, std::string>& query);
  HttpResult get_coverage(const std::string& id);
  HttpResult post_propensity(const std::string& body);
  HttpResult post_generate(const std::string& body);

  std::string new_id(const char* prefix);
  std::shared_ptr<Job> find_job(const std::string& id);
  void persist(const JobRecord& record);
  void set_status(const std::shared_ptr<Job>& job, JobStatus status, const std::string& error = {});
  void recover();

  std::filesystem::path root_;
  std::mutex mutex_;  // guards jobs_ and every write into root_
  std::map<std::string, std::shared_ptr<Job>> jobs_;
  std::vector<std::jthread> workers_;
  std::uint64_t id_counter_ = 0;
};

/// HTTP adapter around a Service. start() binds and serves on a background thread.
class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();

  /// Returns the bound port; port 0 picks a free one. Throws std::runtime_error if binding fails.
  int start(const std::string& host, int port);
  /// Serves on the calling thread until stop() is called from elsewhere.
  void run(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace mcarsense
