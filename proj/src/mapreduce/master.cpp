#include "seizure/mapreduce/master.hpp"

#include <chrono>
#include <cstring>
#include <deque>
#include <map>
#include <optional>

#include <fcntl.h>
#include <poll.h>
#include <unistd.h>

#include "seizure/bytes.hpp"
#include "seizure/error.hpp"
#include "seizure/mapreduce/scheduler.hpp"
#include "seizure/mapreduce/worker.hpp"

namespace seizure::mr {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

enum class Role { unknown, worker, client };

struct Conn {
  Socket sock;
  Role role = Role::unknown;
  std::string name;
  Clock::time_point last_seen;
  bool alive = false;  // registered worker that has not timed out
  bool busy = false;
  bool closed = false;
};

struct PendingJob {
  Job job;
  std::string job_path;
  int client = -1;
  Clock::time_point submitted;
};

}  // namespace

struct Master::State {
  explicit State(Master& m) : self(m) {}

  Master& self;
  std::map<int, Conn> conns;
  int next_id = 0;
  std::deque<PendingJob> queue;
  std::optional<JobRun> run;
  std::string run_path;
  int run_client = -1;
  Clock::time_point started;
  std::optional<Clock::time_point> no_workers_since;
  bool stop = false;

  const ClusterConfig& cfg() const { return self.config_; }

  template <class F>
  void stats(F&& f) {
    std::lock_guard lock(self.stats_mutex_);
    f(self.stats_);
  }

  void send_client(int id, const Message& m) {
    auto it = conns.find(id);
    if (it != conns.end() && !it->second.closed) it->second.sock.send(m);
  }

  void close(Conn& c) {
    c.sock.close();
    c.closed = true;
  }

  std::size_t live_workers() const {
    std::size_t n = 0;
    for (const auto& [id, c] : conns) n += (c.role == Role::worker && c.alive && !c.closed) ? 1 : 0;
    return n;
  }

  void lose_worker(int id, Conn& c) {
    if (!c.alive) return;
    c.alive = false;
    c.busy = false;
    std::size_t requeued = run ? run->on_worker_lost(id) : 0;
    stats([&](MasterStats& s) {
      ++s.workers_lost;
      s.tasks_requeued += static_cast<int>(requeued);
    });
  }

  void fail_run(const std::string& message) {
    // Stats first, so a client that sees the reply also sees the count.
    stats([](MasterStats& s) { ++s.jobs_failed; });
    send_client(run_client, {MessageType::Failed, run->job().job_id, 0, message});
    run.reset();
  }

  void on_disconnect(int id, Conn& c) {
    if (c.role == Role::worker) lose_worker(id, c);
    if (c.role == Role::client) {
      if (run && run_client == id) run.reset();
      std::erase_if(queue, [id](const PendingJob& p) { return p.client == id; });
    }
    close(c);
  }

  void on_message(int id, Conn& c, const Message& m) {
    switch (m.type) {
      case MessageType::Register:
        c.role = Role::worker;
        c.name = m.payload_path;
        c.alive = true;
        c.busy = false;
        stats([](MasterStats& s) { ++s.workers_registered; });
        break;
      case MessageType::Heartbeat:
        break;
      case MessageType::Result:
      case MessageType::Failed: {
        if (c.role != Role::worker) break;
        const bool ok = m.type == MessageType::Result;
        if (c.alive) c.busy = false;
        Acceptance a = Acceptance::stale;
        if (run) {
          a = ok ? run->on_result(m.task_id, m.attempt, id, m.payload_path)
                 : run->on_failure(m.task_id, m.attempt, id, m.payload_path);
        }
        const std::string key = (run ? run->job().job_id : std::string("-")) + "/" + m.task_id;
        stats([&](MasterStats& s) {
          if (a == Acceptance::accepted && ok) ++s.accepted[key];
          if (a == Acceptance::accepted && !ok) ++s.task_failures;
          if (a == Acceptance::stale || a == Acceptance::unknown) ++s.results_stale;
          if (a == Acceptance::duplicate) ++s.results_duplicate;
        });
        break;
      }
      case MessageType::Submit: {
        c.role = Role::client;
        try {
          Job job = decode_job(read_file(cfg().work_dir / m.payload_path), cfg().work_dir);
          if (job.input_splits.empty()) throw ParameterError("job has no input splits");
          queue.push_back({std::move(job), m.payload_path, id, Clock::now()});
        } catch (const std::exception& e) {
          c.sock.send({MessageType::Failed, m.task_id, 0, std::string("bad job: ") + e.what()});
        }
        break;
      }
      case MessageType::Shutdown:
        if (c.role != Role::worker) stop = true;
        break;
      case MessageType::Assign:
      case MessageType::Done:
        break;
    }
  }

  void start_next(Clock::time_point now) {
    if (run || queue.empty()) return;
    const PendingJob& front = queue.front();
    const std::size_t live = live_workers();
    const bool waited = now - front.submitted >= std::chrono::milliseconds(cfg().startup_timeout_ms);
    if (live >= static_cast<std::size_t>(cfg().expected_workers) || (waited && live > 0)) {
      // R is fixed here; result order does not depend on it.
      run.emplace(front.job, live);
      run_path = front.job_path;
      run_client = front.client;
      started = now;
      no_workers_since.reset();
      queue.pop_front();
    } else if (waited) {
      stats([](MasterStats& s) { ++s.jobs_failed; });
      send_client(front.client, {MessageType::Failed, front.job.job_id, 0,
                                 "startup: no workers registered within " +
                                     std::to_string(cfg().startup_timeout_ms) + " ms"});
      queue.pop_front();
    }
  }

  void dispatch(Clock::time_point now) {
    if (!run) return;
    if (run->failed()) return fail_run(*run->error());
    for (auto& [id, c] : conns) {
      if (c.role != Role::worker || !c.alive || c.busy || c.closed) continue;
      auto spec = run->assign(id);
      if (!spec) break;
      TaskFile task{run_path, *spec, run->partitions(), {}};
      if (spec->kind == TaskKind::map) {
        task.inputs.push_back(run->job().input_splits[spec->index]);
      } else {
        for (const auto& dir : run->map_outputs()) {
          task.inputs.push_back(partition_file(dir, spec->index).generic_string());
        }
      }
      const fs::path path = task_file_path(spec->job_id, *spec);
      try {
        fs::create_directories((cfg().work_dir / path).parent_path());
        write_file_atomic(cfg().work_dir / path, encode_task(task));
      } catch (const std::exception& e) {
        return fail_run(std::string("cannot write task file: ") + e.what());
      }
      c.busy = true;
      if (!c.sock.send({MessageType::Assign, spec->task_id, spec->attempt, path.generic_string()})) {
        lose_worker(id, c);
      }
    }
    if (run->complete()) {
      try {
        const Records out = merge_reduce_outputs(cfg().work_dir, run->reduce_outputs());
        const fs::path path = result_path(run->job().job_id);
        fs::create_directories((cfg().work_dir / path).parent_path());
        write_file_atomic(cfg().work_dir / path, encode_records(out));
        stats([](MasterStats& s) { ++s.jobs_completed; });
        send_client(run_client, {MessageType::Done, run->job().job_id, 0, path.generic_string()});
        run.reset();
      } catch (const std::exception& e) {
        fail_run(std::string("cannot merge reduce output: ") + e.what());
      }
      return;
    }
    if (live_workers() == 0) {
      if (!no_workers_since) no_workers_since = now;
      if (now - *no_workers_since >= std::chrono::milliseconds(cfg().startup_timeout_ms)) {
        fail_run("all workers lost");
      }
    } else {
      no_workers_since.reset();
    }
  }

  void check_heartbeats(Clock::time_point now) {
    const auto limit = std::chrono::milliseconds(cfg().task_timeout_ms);
    for (auto& [id, c] : conns) {
      if (c.role == Role::worker && c.alive && now - c.last_seen > limit) lose_worker(id, c);
    }
  }
};

Master::Master(ClusterConfig config) : config_(std::move(config)) {
  config_.validate();
  listener_ = Socket::listen(parse_host_port(config_.master_address));
  port_ = listener_.local_port();
  int fds[2];
  if (::pipe2(fds, O_CLOEXEC | O_NONBLOCK) != 0) throw Error(std::string("pipe: ") + std::strerror(errno));
  wake_read_ = fds[0];
  wake_write_ = fds[1];
}

Master::~Master() {
  ::close(wake_read_);
  ::close(wake_write_);
}

void Master::request_stop() noexcept {
  const char b = 1;
  [[maybe_unused]] auto n = ::write(wake_write_, &b, 1);
}

MasterStats Master::stats() const {
  std::lock_guard lock(stats_mutex_);
  return stats_;
}

void Master::serve() {
  State st(*this);
  const int tick = std::clamp(config_.heartbeat_interval_ms / 2, 5, 100);
  std::vector<pollfd> fds;
  std::vector<int> ids;

  while (!st.stop) {
    fds.clear();
    ids.clear();
    fds.push_back({wake_read_, POLLIN, 0});
    fds.push_back({listener_.fd(), POLLIN, 0});
    for (const auto& [id, c] : st.conns) {
      if (c.closed) continue;
      fds.push_back({c.sock.fd(), POLLIN, 0});
      ids.push_back(id);
    }
    if (::poll(fds.data(), fds.size(), tick) < 0 && errno != EINTR) {
      throw Error(std::string("poll: ") + std::strerror(errno));
    }
    const auto now = Clock::now();
    if (fds[0].revents != 0) break;
    if (fds[1].revents & POLLIN) {
      try {
        Conn c;
        c.sock = listener_.accept();
        c.last_seen = now;
        st.conns.emplace(st.next_id++, std::move(c));
      } catch (const Error&) {
        // Transient accept failure; the peer will retry.
      }
    }
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (fds[i + 2].revents == 0) continue;
      Conn& c = st.conns.at(ids[i]);
      if (!c.sock.fill()) {
        st.on_disconnect(ids[i], c);
        continue;
      }
      c.last_seen = now;
      while (auto line = c.sock.take_line()) {
        try {
          st.on_message(ids[i], c, parse_message(*line));
        } catch (const ParseError&) {
          // Malformed lines are dropped; the connection stays usable.
        }
        if (c.closed) break;
      }
    }
    st.check_heartbeats(now);
    st.start_next(now);
    st.dispatch(now);
    std::erase_if(st.conns, [](const auto& kv) { return kv.second.closed; });
  }

  for (auto& [id, c] : st.conns) {
    if (c.closed) continue;
    if (c.role == Role::worker) c.sock.send({MessageType::Shutdown, "-", 0, "-"});
    if (c.role == Role::client) c.sock.send({MessageType::Failed, "-", 0, "master stopped"});
  }
  char drain[64];
  while (::read(wake_read_, drain, sizeof drain) > 0) {
  }
}

}  // namespace seizure::mr
