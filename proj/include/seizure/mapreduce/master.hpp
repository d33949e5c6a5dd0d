#pragma once

#include <map>
#include <mutex>
#include <string>

#include "seizure/mapreduce/executor.hpp"
#include "seizure/mapreduce/protocol.hpp"

namespace seizure::mr {

struct MasterStats {
  int workers_registered = 0;
  int workers_lost = 0;
  int jobs_completed = 0;
  int jobs_failed = 0;
  int tasks_requeued = 0;
  int results_stale = 0;
  int results_duplicate = 0;
  int task_failures = 0;
  /// "<job>/<task>" -> accepted result count.
  std::map<std::string, int> accepted;
};

/// Single-threaded coordinator. Binds in the constructor so port() is known
/// before serve() runs; serve() returns after request_stop() or a SHUTDOWN
/// message from a client connection.
class Master {
 public:
  /// Listens on `config.master_address`; port 0 picks a free port.
  explicit Master(ClusterConfig config);
  ~Master();
  Master(const Master&) = delete;
  Master& operator=(const Master&) = delete;

  int port() const noexcept { return port_; }
  void serve();
  /// Safe from any thread and from signal handlers.
  void request_stop() noexcept;
  /// Write end of the wake pipe; writing one byte stops serve().
  int wake_fd() const noexcept { return wake_write_; }
  MasterStats stats() const;

 private:
  struct State;

  ClusterConfig config_;
  Socket listener_;
  int port_ = 0;
  int wake_read_ = -1;
  int wake_write_ = -1;
  mutable std::mutex stats_mutex_;
  MasterStats stats_;
};

}  // namespace seizure::mr
