#pragma once

#include <cstddef>
#include <filesystem>
#include <string>

#include "seizure/mapreduce/job.hpp"

namespace seizure::mr {

struct ClusterConfig {
  std::string master_address = "127.0.0.1:7070";
  int expected_workers = 1;
  int heartbeat_interval_ms = 200;
  int task_timeout_ms = 5000;
  int startup_timeout_ms = 10000;
  std::filesystem::path work_dir;

  /// Throws ParameterError unless timeout > interval > 0.
  void validate() const;
};

/// Reference semantics: map every split in order, group by ascending key,
/// reduce each group in key order.
Records run_serial(const Job& job, const Registry& registry = Registry::global());

/// Same output as run_serial, with map and reduce tasks spread over a pool.
Records run_threaded(const Job& job, std::size_t workers,
                     const Registry& registry = Registry::global());

/// Submits the job to the master at cluster.master_address and waits for
/// the merged output. Split paths are relative to cluster.work_dir.
Records run_distributed(const Job& job, const ClusterConfig& cluster);

class Executor {
 public:
  virtual ~Executor() = default;
  virtual Records run(const Job& job) = 0;
  virtual std::string name() const = 0;
  /// Degree of parallelism, used to size task splits.
  virtual std::size_t parallelism() const = 0;
};

class SerialExecutor final : public Executor {
 public:
  Records run(const Job& job) override { return run_serial(job); }
  std::string name() const override { return "serial"; }
  std::size_t parallelism() const override { return 1; }
};

class ThreadedExecutor final : public Executor {
 public:
  explicit ThreadedExecutor(std::size_t workers) : workers_(workers == 0 ? 1 : workers) {}
  Records run(const Job& job) override { return run_threaded(job, workers_); }
  std::string name() const override { return "threaded"; }
  std::size_t parallelism() const override { return workers_; }

 private:
  std::size_t workers_;
};

class DistributedExecutor final : public Executor {
 public:
  explicit DistributedExecutor(ClusterConfig cluster) : cluster_(std::move(cluster)) {}
  Records run(const Job& job) override { return run_distributed(job, cluster_); }
  std::string name() const override { return "distributed"; }
  std::size_t parallelism() const override {
    return static_cast<std::size_t>(cluster_.expected_workers < 1 ? 1 : cluster_.expected_workers);
  }
  const ClusterConfig& cluster() const noexcept { return cluster_; }

 private:
  ClusterConfig cluster_;
};

}  // namespace seizure::mr
