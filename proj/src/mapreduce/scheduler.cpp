#include "seizure/mapreduce/scheduler.hpp"

#include <cstdio>

#include "seizure/error.hpp"

namespace seizure::mr {

namespace {

std::string task_id(char prefix, std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%c%05zu", prefix, index);
  return buf;
}

}  // namespace

std::string map_task_id(std::size_t index) { return task_id('m', index); }
std::string reduce_task_id(std::size_t partition) { return task_id('r', partition); }

JobRun::JobRun(Job job, std::size_t partitions) : job_(std::move(job)), partitions_(partitions) {
  if (partitions_ == 0) throw ParameterError("a job needs at least one reduce partition");
  if (job_.input_splits.empty()) throw ParameterError("job " + job_.job_id + " has no input splits");
  for (std::size_t i = 0; i < job_.input_splits.size(); ++i) {
    maps_.push_back({TaskSpec{map_task_id(i), TaskKind::map, job_.job_id, i, 0}});
  }
  for (std::size_t r = 0; r < partitions_; ++r) {
    reduces_.push_back({TaskSpec{reduce_task_id(r), TaskKind::reduce, job_.job_id, r, 0}});
  }
}

bool JobRun::maps_done() const noexcept {
  for (const auto& e : maps_) {
    if (e.state != TaskState::done) return false;
  }
  return true;
}

bool JobRun::complete() const noexcept {
  if (!maps_done()) return false;
  for (const auto& e : reduces_) {
    if (e.state != TaskState::done) return false;
  }
  return true;
}

JobRun::Entry* JobRun::find(const std::string& id) {
  for (auto* tasks : {&maps_, &reduces_}) {
    for (auto& e : *tasks) {
      if (e.spec.task_id == id) return &e;
    }
  }
  return nullptr;
}

std::optional<TaskSpec> JobRun::assign(int worker) {
  if (failed()) return std::nullopt;
  auto& tasks = maps_done() ? reduces_ : maps_;
  for (auto& e : tasks) {
    if (e.state != TaskState::pending) continue;
    e.state = TaskState::running;
    e.worker = worker;
    e.spec.attempt = ++e.issued;
    return e.spec;
  }
  return std::nullopt;
}

Acceptance JobRun::on_result(const std::string& id, int attempt, int worker,
                             const std::string& output_path) {
  Entry* e = find(id);
  if (e == nullptr) return Acceptance::unknown;
  if (e->state == TaskState::done) return Acceptance::duplicate;
  if (e->state != TaskState::running || attempt != e->spec.attempt || worker != e->worker) {
    return Acceptance::stale;
  }
  e->state = TaskState::done;
  e->output = output_path;
  ++e->accepted;
  return Acceptance::accepted;
}

Acceptance JobRun::on_failure(const std::string& id, int attempt, int worker,
                              const std::string& message) {
  Entry* e = find(id);
  if (e == nullptr) return Acceptance::unknown;
  if (e->state == TaskState::done) return Acceptance::duplicate;
  if (e->state != TaskState::running || attempt != e->spec.attempt || worker != e->worker) {
    return Acceptance::stale;
  }
  e->state = TaskState::pending;
  e->worker = -1;
  if (++e->failures >= kMaxFailures && !error_) {
    error_ = "task " + id + " of job " + job_.job_id + " failed " + std::to_string(e->failures) +
             " times; last error: " + message;
  }
  return Acceptance::accepted;
}

std::size_t JobRun::on_worker_lost(int worker) {
  std::size_t requeued = 0;
  for (auto* tasks : {&maps_, &reduces_}) {
    for (auto& e : *tasks) {
      if (e.state == TaskState::running && e.worker == worker) {
        e.state = TaskState::pending;
        e.worker = -1;
        ++requeued;
      }
    }
  }
  return requeued;
}

std::vector<std::string> JobRun::map_outputs() const {
  std::vector<std::string> out;
  for (const auto& e : maps_) out.push_back(e.output);
  return out;
}

std::vector<std::string> JobRun::reduce_outputs() const {
  std::vector<std::string> out;
  for (const auto& e : reduces_) out.push_back(e.output);
  return out;
}

std::vector<std::pair<std::string, int>> JobRun::acceptance_counts() const {
  std::vector<std::pair<std::string, int>> out;
  for (const auto* tasks : {&maps_, &reduces_}) {
    for (const auto& e : *tasks) out.emplace_back(e.spec.task_id, e.accepted);
  }
  return out;
}

}  // namespace seizure::mr
