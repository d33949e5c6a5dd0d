#include "seizure/mapreduce/worker.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <unistd.h>

#include "seizure/bytes.hpp"
#include "seizure/error.hpp"
#include "seizure/mapreduce/protocol.hpp"

namespace seizure::mr {

namespace fs = std::filesystem;

namespace {

std::size_t to_size(std::string_view s, std::size_t line) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError(line, "expected a non-negative integer, got '" + std::string(s) + "'");
  }
  return v;
}

std::string attempt_dir(int attempt) { return "a" + std::to_string(attempt); }

}  // namespace

std::string encode_task(const TaskFile& task) {
  std::ostringstream out;
  out << "task 1\n";
  out << "job " << task.job_path << '\n';
  out << "id " << task.spec.task_id << '\n';
  out << "job_id " << task.spec.job_id << '\n';
  out << "kind " << (task.spec.kind == TaskKind::map ? "map" : "reduce") << '\n';
  out << "attempt " << task.spec.attempt << '\n';
  out << "index " << task.spec.index << '\n';
  out << "partitions " << task.partitions << '\n';
  for (const auto& in : task.inputs) out << "input " << in << '\n';
  return out.str();
}

TaskFile decode_task(std::string_view text) {
  TaskFile task;
  std::size_t line_no = 0;
  bool header = false;
  std::set<std::string, std::less<>> seen;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty()) continue;
    const std::size_t sp = line.find(' ');
    if (sp == std::string_view::npos) throw ParseError(line_no, "expected 'key value'");
    const auto key = line.substr(0, sp);
    const auto value = line.substr(sp + 1);
    if (line_no == 1) {
      if (key != "task") throw ParseError(line_no, "not a task file");
      if (value != "1") throw UnsupportedVersionError("task file version " + std::string(value));
      header = true;
      continue;
    }
    if (key != "input") seen.emplace(key);
    if (key == "job") {
      task.job_path = value;
    } else if (key == "id") {
      task.spec.task_id = value;
    } else if (key == "job_id") {
      task.spec.job_id = value;
    } else if (key == "kind") {
      if (value == "map") {
        task.spec.kind = TaskKind::map;
      } else if (value == "reduce") {
        task.spec.kind = TaskKind::reduce;
      } else {
        throw ParseError(line_no, "unknown task kind '" + std::string(value) + "'");
      }
    } else if (key == "attempt") {
      task.spec.attempt = static_cast<int>(to_size(value, line_no));
    } else if (key == "index") {
      task.spec.index = to_size(value, line_no);
    } else if (key == "partitions") {
      task.partitions = to_size(value, line_no);
    } else if (key == "input") {
      task.inputs.emplace_back(value);
    } else {
      throw ParseError(line_no, "unknown key '" + std::string(key) + "'");
    }
  }
  if (!header) throw ParseError(1, "empty task file");
  for (const char* required : {"job", "id", "job_id", "kind", "attempt", "index", "partitions"}) {
    if (!seen.count(required)) throw ParseError(line_no, std::string("task file lacks '") + required + "'");
  }
  if (task.partitions == 0) throw ParseError(line_no, "partitions must be positive");
  return task;
}

fs::path job_file_path(const std::string& job_id) { return fs::path("jobs") / (job_id + ".job"); }

fs::path task_file_path(const std::string& job_id, const TaskSpec& spec) {
  return fs::path("tasks") / job_id / (spec.task_id + "." + attempt_dir(spec.attempt) + ".task");
}

fs::path map_output_dir(const std::string& job_id, const TaskSpec& spec) {
  return fs::path("intermediate") / job_id / spec.task_id / attempt_dir(spec.attempt);
}

fs::path partition_file(const fs::path& map_dir, std::size_t partition) {
  return map_dir / ("part-" + std::to_string(partition) + ".rec");
}

fs::path reduce_output_path(const std::string& job_id, const TaskSpec& spec) {
  return fs::path("output") / job_id /
         ("reduce-" + std::to_string(spec.index) + "." + attempt_dir(spec.attempt) + ".rec");
}

fs::path result_path(const std::string& job_id) { return fs::path("output") / job_id / "result.rec"; }

std::string execute_task(const fs::path& work_dir, const std::string& task_path,
                         const Registry& registry) {
  const TaskFile task = decode_task(read_file(work_dir / task_path));
  const Job job = decode_job(read_file(work_dir / task.job_path), work_dir);
  job.validate(registry);
  const TaskContext ctx{work_dir, job.params, job.job_id};

  if (task.spec.kind == TaskKind::map) {
    if (task.inputs.size() != 1) throw FormatError("map task needs exactly one input split");
    Emitter em;
    registry.map(job.map_fn_id)(ctx, task.inputs.front(), em);
    std::vector<Records> parts(task.partitions);
    for (auto& kv : em.records()) {
      parts[key_hash(kv.key) % task.partitions].push_back(std::move(kv));
    }
    const fs::path dir = map_output_dir(job.job_id, task.spec);
    fs::create_directories(work_dir / dir);
    for (std::size_t r = 0; r < parts.size(); ++r) {
      write_file_atomic(work_dir / partition_file(dir, r), encode_records(parts[r]));
    }
    return dir.generic_string();
  }

  Records pairs;
  for (const auto& in : task.inputs) {
    Records part = decode_records(read_file(work_dir / in));
    std::move(part.begin(), part.end(), std::back_inserter(pairs));
  }
  const auto groups = group_by_key(std::move(pairs));
  const auto out = reduce_groups(ctx, registry.reduce(job.reduce_fn_id), groups);
  const fs::path path = reduce_output_path(job.job_id, task.spec);
  fs::create_directories((work_dir / path).parent_path());
  write_file_atomic(work_dir / path, encode_grouped(out));
  return path.generic_string();
}

Records merge_reduce_outputs(const fs::path& work_dir, const std::vector<std::string>& outputs) {
  std::vector<GroupedRecord> all;
  for (const auto& path : outputs) {
    auto part = decode_grouped(read_file(work_dir / path));
    std::move(part.begin(), part.end(), std::back_inserter(all));
  }
  // Each key lives in exactly one partition, so a stable sort restores
  // run_serial's order.
  std::stable_sort(all.begin(), all.end(),
                   [](const GroupedRecord& a, const GroupedRecord& b) { return a.group < b.group; });
  Records out;
  out.reserve(all.size());
  for (auto& g : all) out.push_back(std::move(g.record));
  return out;
}

// ---------------------------------------------------------------------------

WorkerOptions WorkerOptions::with_env_hooks(WorkerOptions base) {
  auto read = [](const char* name, int& slot) {
    if (const char* v = std::getenv(name); v != nullptr && *v != '\0') slot = std::atoi(v);
  };
  read("SEIZURE_WORKER_EXIT_AFTER", base.exit_after);
  read("SEIZURE_WORKER_HANG_AFTER", base.hang_after);
  return base;
}

int run_worker(const WorkerOptions& options, const Registry& registry) {
  if (options.heartbeat_interval_ms <= 0) throw ParameterError("heartbeat interval must be positive");
  const auto deadline =
      std::chrono::steady_clock::now() + std::chrono::milliseconds(options.startup_timeout_ms);
  Socket sock = Socket::connect_until(parse_host_port(options.master_address), deadline);
  std::mutex send_mutex;
  auto send = [&](const Message& m) {
    std::lock_guard lock(send_mutex);
    return sock.send(m);
  };

  const std::string name =
      options.name.empty() ? "worker-" + std::to_string(::getpid()) : options.name;
  if (!send({MessageType::Register, "-", 0, name})) throw Error("master closed the connection");

  std::atomic<bool> beating{true};
  std::jthread heartbeat([&](std::stop_token stop) {
    std::mutex m;
    std::condition_variable_any cv;
    std::unique_lock lock(m);
    while (!stop.stop_requested()) {
      cv.wait_for(lock, stop, std::chrono::milliseconds(options.heartbeat_interval_ms),
                  [] { return false; });
      if (stop.stop_requested()) break;
      if (beating.load()) send({MessageType::Heartbeat, "-", 0, "-"});
    }
  });

  int completed = 0;
  bool hung = false;
  while (auto line = sock.read_line()) {
    Message msg;
    try {
      msg = parse_message(*line);
    } catch (const ParseError&) {
      continue;
    }
    if (msg.type == MessageType::Shutdown) break;
    if (msg.type != MessageType::Assign || hung) continue;

    if (options.exit_after >= 0 && completed >= options.exit_after) {
      // Simulated crash: no reply, no cleanup.
      ::_exit(3);
    }
    if (options.hang_after >= 0 && completed >= options.hang_after) {
      beating = false;
      hung = true;
      continue;
    }
    try {
      const std::string out = execute_task(options.work_dir, msg.payload_path, registry);
      ++completed;
      send({MessageType::Result, msg.task_id, msg.attempt, out});
    } catch (const std::exception& e) {
      send({MessageType::Failed, msg.task_id, msg.attempt, e.what()});
    }
  }
  heartbeat.request_stop();
  return completed;
}

}  // namespace seizure::mr
