#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <sys/types.h>

#include "seizure/mapreduce/executor.hpp"
#include "seizure/mapreduce/master.hpp"

namespace seizure::mr {

struct LocalClusterOptions {
  int workers = 2;
  std::filesystem::path work_dir;
  /// Binary providing the `worker` subcommand; empty means this process.
  std::filesystem::path executable;
  int heartbeat_interval_ms = 100;
  int task_timeout_ms = 1500;
  int startup_timeout_ms = 10000;
  /// Extra environment for individual workers, by worker index.
  std::map<int, std::map<std::string, std::string>> worker_env;
};

/// Master on a background thread (loopback, ephemeral port) plus worker
/// child processes. Tears everything down on destruction.
class LocalCluster {
 public:
  explicit LocalCluster(LocalClusterOptions options);
  ~LocalCluster();
  LocalCluster(const LocalCluster&) = delete;
  LocalCluster& operator=(const LocalCluster&) = delete;

  /// Config for run_distributed against this cluster.
  const ClusterConfig& config() const noexcept { return config_; }
  MasterStats stats() const { return master_->stats(); }
  std::size_t worker_count() const noexcept { return pids_.size(); }
  /// SIGKILL one worker process.
  void kill_worker(std::size_t index);

 private:
  LocalClusterOptions options_;
  ClusterConfig config_;
  std::unique_ptr<Master> master_;
  std::jthread thread_;
  std::vector<pid_t> pids_;
};

}  // namespace seizure::mr
