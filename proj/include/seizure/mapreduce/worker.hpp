#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "seizure/mapreduce/job.hpp"
#include "seizure/mapreduce/scheduler.hpp"

namespace seizure::mr {

/// What the master hands a worker, stored as a small text file in the work
/// directory. All paths are relative to the work directory.
struct TaskFile {
  std::string job_path;
  TaskSpec spec;
  std::size_t partitions = 1;
  /// Map: the one split. Reduce: one partition file per map task, in map order.
  std::vector<std::string> inputs;

  friend bool operator==(const TaskFile& a, const TaskFile& b) {
    return a.job_path == b.job_path && a.spec.task_id == b.spec.task_id &&
           a.spec.kind == b.spec.kind && a.spec.job_id == b.spec.job_id &&
           a.spec.index == b.spec.index && a.spec.attempt == b.spec.attempt &&
           a.partitions == b.partitions && a.inputs == b.inputs;
  }
};

std::string encode_task(const TaskFile& task);
TaskFile decode_task(std::string_view text);

// Work directory layout.
std::filesystem::path job_file_path(const std::string& job_id);
std::filesystem::path task_file_path(const std::string& job_id, const TaskSpec& spec);
std::filesystem::path map_output_dir(const std::string& job_id, const TaskSpec& spec);
std::filesystem::path partition_file(const std::filesystem::path& map_dir, std::size_t partition);
std::filesystem::path reduce_output_path(const std::string& job_id, const TaskSpec& spec);
std::filesystem::path result_path(const std::string& job_id);

/// Runs one task from its task file and returns the output path (relative).
/// Map output: one record file per partition, hash(key) mod R. Reduce
/// output: grouped records for every key of that partition.
std::string execute_task(const std::filesystem::path& work_dir, const std::string& task_path,
                         const Registry& registry = Registry::global());

/// Concatenates reduce outputs ordered by group key.
Records merge_reduce_outputs(const std::filesystem::path& work_dir,
                             const std::vector<std::string>& outputs);

struct WorkerOptions {
  std::string master_address = "127.0.0.1:7070";
  std::filesystem::path work_dir;
  int heartbeat_interval_ms = 200;
  int startup_timeout_ms = 10000;
  std::string name;
  /// Test hooks, normally read from SEIZURE_WORKER_EXIT_AFTER and
  /// SEIZURE_WORKER_HANG_AFTER. After this many completed tasks the worker
  /// exits (or stops heartbeating and ignores work) on the next assignment.
  int exit_after = -1;
  int hang_after = -1;

  static WorkerOptions with_env_hooks(WorkerOptions base);
};

/// Connects, registers and serves tasks until SHUTDOWN or the master goes
/// away. Returns the number of completed tasks.
int run_worker(const WorkerOptions& options, const Registry& registry = Registry::global());

}  // namespace seizure::mr
