#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "seizure/mapreduce/job.hpp"

namespace seizure::mr {

enum class TaskKind { map, reduce };
enum class TaskState { pending, running, done };

struct TaskSpec {
  std::string task_id;
  TaskKind kind = TaskKind::map;
  std::string job_id;
  std::size_t index = 0;  // split index for map, partition for reduce
  int attempt = 1;
};

enum class Acceptance { accepted, stale, duplicate, unknown };

/// Bookkeeping for one job on the master. Pure state machine: no I/O, no
/// clock. Map tasks are m00000.., reduce tasks r00000.. (one per partition).
class JobRun {
 public:
  static constexpr int kMaxFailures = 3;

  JobRun(Job job, std::size_t partitions);

  const Job& job() const noexcept { return job_; }
  std::size_t partitions() const noexcept { return partitions_; }

  /// Next pending task, issued to `worker` with a fresh attempt number.
  /// Reduce tasks become available only after every map task is done.
  std::optional<TaskSpec> assign(int worker);

  /// Accepted only when the task is running, `attempt` is the latest issued
  /// attempt and it was issued to `worker`.
  Acceptance on_result(const std::string& task_id, int attempt, int worker,
                       const std::string& output_path);
  /// Explicit task failure. The task is requeued until it has failed
  /// kMaxFailures times, after which the job fails.
  Acceptance on_failure(const std::string& task_id, int attempt, int worker,
                        const std::string& message);
  /// Requeues every task running on `worker`; returns how many.
  std::size_t on_worker_lost(int worker);

  bool complete() const noexcept;
  bool failed() const noexcept { return error_.has_value(); }
  const std::optional<std::string>& error() const noexcept { return error_; }

  /// Accepted map output directories in map order.
  std::vector<std::string> map_outputs() const;
  /// Accepted reduce output files in partition order.
  std::vector<std::string> reduce_outputs() const;

  /// Number of accepted results per task (each is 1 once the job completes).
  std::vector<std::pair<std::string, int>> acceptance_counts() const;

 private:
  struct Entry {
    TaskSpec spec;
    TaskState state = TaskState::pending;
    int worker = -1;
    int issued = 0;
    int failures = 0;
    int accepted = 0;
    std::string output;
  };

  Entry* find(const std::string& task_id);
  bool maps_done() const noexcept;

  Job job_;
  std::size_t partitions_;
  std::vector<Entry> maps_;
  std::vector<Entry> reduces_;
  std::optional<std::string> error_;
};

std::string map_task_id(std::size_t index);
std::string reduce_task_id(std::size_t partition);

}  // namespace seizure::mr
