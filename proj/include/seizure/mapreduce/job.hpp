#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace seizure::mr {

struct KeyValue {
  std::string key;
  std::string value;
  friend bool operator==(const KeyValue&, const KeyValue&) = default;
};

using Records = std::vector<KeyValue>;
using Params = std::map<std::string, std::string>;

class Emitter {
 public:
  void emit(std::string key, std::string value) {
    out_.push_back({std::move(key), std::move(value)});
  }
  Records& records() noexcept { return out_; }

 private:
  Records out_;
};

struct TaskContext {
  std::filesystem::path work_dir;
  const Params& params;
  std::string job_id;

  /// Parameter lookup; throws ParameterError naming the key when absent.
  const std::string& param(const std::string& key) const;
  std::filesystem::path resolve(std::string_view relative) const { return work_dir / relative; }
};

/// User functions must be pure over their file inputs and safe to call
/// concurrently.
using MapFn = std::function<void(const TaskContext&, const std::string& split, Emitter&)>;
using ReduceFn = std::function<void(const TaskContext&, const std::string& key,
                                    std::span<const std::string> values, Emitter&)>;

class Registry {
 public:
  static Registry& global();

  void add_map(const std::string& name, MapFn fn);
  void add_reduce(const std::string& name, ReduceFn fn);
  bool has_map(const std::string& name) const { return maps_.contains(name); }
  bool has_reduce(const std::string& name) const { return reduces_.contains(name); }
  const MapFn& map(const std::string& name) const;
  const ReduceFn& reduce(const std::string& name) const;

 private:
  std::map<std::string, MapFn> maps_;
  std::map<std::string, ReduceFn> reduces_;
};

/// Work description shared by every executor. Splits are paths relative to
/// the work directory.
struct Job {
  std::string job_id;
  std::string map_fn_id;
  std::string reduce_fn_id;
  std::vector<std::string> input_splits;
  Params params;
  std::filesystem::path work_dir;

  void validate(const Registry& registry) const;
};

std::string encode_job(const Job& job);
/// Work directory is not part of the encoding; the caller supplies it.
Job decode_job(std::string_view text, const std::filesystem::path& work_dir);

/// Stable 64-bit FNV-1a, identical in every process.
std::uint64_t key_hash(std::string_view key) noexcept;

// Binary record files.
std::string encode_records(const Records& records);
Records decode_records(std::string_view bytes);

struct GroupedRecord {
  std::string group;
  KeyValue record;
};
std::string encode_grouped(const std::vector<GroupedRecord>& records);
std::vector<GroupedRecord> decode_grouped(std::string_view bytes);

/// Pairs grouped by key in ascending order; within a key, values keep input
/// order.
std::vector<std::pair<std::string, std::vector<std::string>>> group_by_key(Records pairs);

/// Reduces each group in order, tagging outputs with their group key.
std::vector<GroupedRecord> reduce_groups(
    const TaskContext& ctx, const ReduceFn& fn,
    const std::vector<std::pair<std::string, std::vector<std::string>>>& groups);

}  // namespace seizure::mr
