#include <exception>

#include "seizure/error.hpp"
#include "seizure/mapreduce/executor.hpp"
#include "seizure/thread_pool.hpp"

namespace seizure::mr {

void ClusterConfig::validate() const {
  if (heartbeat_interval_ms <= 0) throw ParameterError("heartbeat interval must be positive");
  if (task_timeout_ms <= heartbeat_interval_ms) {
    throw ParameterError("task timeout must exceed the heartbeat interval");
  }
  if (expected_workers < 1) throw ParameterError("expected worker count must be at least 1");
  if (startup_timeout_ms <= 0) throw ParameterError("startup timeout must be positive");
}

namespace {

Records map_split(const Job& job, const TaskContext& ctx, const MapFn& fn, std::size_t index) {
  Emitter em;
  try {
    fn(ctx, job.input_splits[index], em);
  } catch (const std::exception& e) {
    throw JobError("job " + job.job_id + " map task " + std::to_string(index) + " (split " +
                   job.input_splits[index] + "): " + e.what());
  }
  return std::move(em.records());
}

std::vector<GroupedRecord> reduce_one(const Job& job, const TaskContext& ctx, const ReduceFn& fn,
                                      const std::pair<std::string, std::vector<std::string>>& group) {
  try {
    return reduce_groups(ctx, fn, {group});
  } catch (const std::exception& e) {
    throw JobError("job " + job.job_id + " reduce of key '" + group.first + "': " + e.what());
  }
}

Records flatten(std::vector<std::vector<GroupedRecord>> parts) {
  Records out;
  for (auto& part : parts) {
    for (auto& g : part) out.push_back(std::move(g.record));
  }
  return out;
}

}  // namespace

Records run_serial(const Job& job, const Registry& registry) {
  job.validate(registry);
  const TaskContext ctx{job.work_dir, job.params, job.job_id};
  const MapFn& map = registry.map(job.map_fn_id);
  const ReduceFn& reduce = registry.reduce(job.reduce_fn_id);

  Records pairs;
  for (std::size_t i = 0; i < job.input_splits.size(); ++i) {
    Records part = map_split(job, ctx, map, i);
    std::move(part.begin(), part.end(), std::back_inserter(pairs));
  }
  const auto groups = group_by_key(std::move(pairs));
  std::vector<std::vector<GroupedRecord>> out;
  for (const auto& g : groups) out.push_back(reduce_one(job, ctx, reduce, g));
  return flatten(std::move(out));
}

Records run_threaded(const Job& job, std::size_t workers, const Registry& registry) {
  job.validate(registry);
  const TaskContext ctx{job.work_dir, job.params, job.job_id};
  const MapFn& map = registry.map(job.map_fn_id);
  const ReduceFn& reduce = registry.reduce(job.reduce_fn_id);
  ThreadPool pool(workers);

  std::vector<Records> parts(job.input_splits.size());
  pool.parallel_for(parts.size(), [&](std::size_t i) { parts[i] = map_split(job, ctx, map, i); });

  // Shuffle barrier: concatenating in split order reproduces run_serial.
  Records pairs;
  for (auto& part : parts) std::move(part.begin(), part.end(), std::back_inserter(pairs));
  const auto groups = group_by_key(std::move(pairs));

  std::vector<std::vector<GroupedRecord>> out(groups.size());
  pool.parallel_for(groups.size(), [&](std::size_t g) { out[g] = reduce_one(job, ctx, reduce, groups[g]); });
  return flatten(std::move(out));
}

}  // namespace seizure::mr
