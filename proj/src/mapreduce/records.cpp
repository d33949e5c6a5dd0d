#include <algorithm>
#include <sstream>

#include "seizure/bytes.hpp"
#include "seizure/error.hpp"
#include "seizure/mapreduce/job.hpp"

namespace seizure::mr {

const std::string& TaskContext::param(const std::string& key) const {
  const auto it = params.find(key);
  if (it == params.end()) throw ParameterError("job " + job_id + " is missing parameter '" + key + "'");
  return it->second;
}

void Job::validate(const Registry& registry) const {
  if (job_id.empty() || job_id.find_first_of(" \t\n/") != std::string::npos) {
    throw ParameterError("job id '" + job_id + "' must be non-empty without spaces or slashes");
  }
  if (input_splits.empty()) throw ParameterError("job " + job_id + " has no input splits");
  if (!registry.has_map(map_fn_id)) throw ParameterError("unknown map function '" + map_fn_id + "'");
  if (!registry.has_reduce(reduce_fn_id)) {
    throw ParameterError("unknown reduce function '" + reduce_fn_id + "'");
  }
  for (const auto& [k, v] : params) {
    if (k.empty() || k.find_first_of(" \t\n") != std::string::npos || v.find('\n') != std::string::npos) {
      throw ParameterError("job parameter '" + k + "' cannot be encoded");
    }
  }
  for (const auto& s : input_splits) {
    if (s.empty() || s.find('\n') != std::string::npos) throw ParameterError("bad split path");
  }
}

std::string encode_job(const Job& job) {
  std::string out = "job_id " + job.job_id + "\nmap_fn " + job.map_fn_id + "\nreduce_fn " +
                    job.reduce_fn_id + "\n";
  for (const auto& [k, v] : job.params) {
    if (k.empty() || k.find_first_of(" \n") != std::string::npos || v.find('\n') != std::string::npos) {
      throw ParameterError("job parameter '" + k + "' cannot be encoded");
    }
    out += "param " + k + " " + v + "\n";
  }
  for (const auto& s : job.input_splits) out += "split " + s + "\n";
  return out;
}

Job decode_job(std::string_view text, const std::filesystem::path& work_dir) {
  Job job;
  job.work_dir = work_dir;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    ++line_no;
    const std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) throw ParseError(line_no, "unterminated job line");
    const std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    const std::size_t sp = line.find(' ');
    if (sp == std::string_view::npos) throw ParseError(line_no, "job line without value");
    const std::string_view tag = line.substr(0, sp);
    const std::string value(line.substr(sp + 1));
    if (tag == "job_id") {
      job.job_id = value;
    } else if (tag == "map_fn") {
      job.map_fn_id = value;
    } else if (tag == "reduce_fn") {
      job.reduce_fn_id = value;
    } else if (tag == "split") {
      job.input_splits.push_back(value);
    } else if (tag == "param") {
      const std::size_t ksp = value.find(' ');
      if (ksp == std::string::npos) throw ParseError(line_no, "param without value");
      job.params[value.substr(0, ksp)] = value.substr(ksp + 1);
    } else {
      throw ParseError(line_no, "unknown job field '" + std::string(tag) + "'");
    }
  }
  return job;
}

std::uint64_t key_hash(std::string_view key) noexcept {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : key) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string encode_records(const Records& records) {
  ByteWriter w;
  w.raw("SZREC001");
  w.u64(records.size());
  for (const auto& r : records) {
    w.str(r.key);
    w.str(r.value);
  }
  return w.take();
}

Records decode_records(std::string_view bytes) {
  ByteReader r(bytes);
  r.expect("SZREC001");
  const std::uint64_t n = r.u64();
  Records out;
  for (std::uint64_t i = 0; i < n; ++i) {
    KeyValue kv;
    kv.key = std::string(r.str());
    kv.value = std::string(r.str());
    out.push_back(std::move(kv));
  }
  if (!r.done()) throw FormatError("trailing bytes in record file at offset " + std::to_string(r.offset()));
  return out;
}

std::string encode_grouped(const std::vector<GroupedRecord>& records) {
  ByteWriter w;
  w.raw("SZRED001");
  w.u64(records.size());
  for (const auto& r : records) {
    w.str(r.group);
    w.str(r.record.key);
    w.str(r.record.value);
  }
  return w.take();
}

std::vector<GroupedRecord> decode_grouped(std::string_view bytes) {
  ByteReader r(bytes);
  r.expect("SZRED001");
  const std::uint64_t n = r.u64();
  std::vector<GroupedRecord> out;
  for (std::uint64_t i = 0; i < n; ++i) {
    GroupedRecord g;
    g.group = std::string(r.str());
    g.record.key = std::string(r.str());
    g.record.value = std::string(r.str());
    out.push_back(std::move(g));
  }
  if (!r.done()) throw FormatError("trailing bytes in reduce output at offset " + std::to_string(r.offset()));
  return out;
}

std::vector<std::pair<std::string, std::vector<std::string>>> group_by_key(Records pairs) {
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const KeyValue& a, const KeyValue& b) { return a.key < b.key; });
  std::vector<std::pair<std::string, std::vector<std::string>>> groups;
  for (auto& kv : pairs) {
    if (groups.empty() || groups.back().first != kv.key) groups.emplace_back(kv.key, std::vector<std::string>{});
    groups.back().second.push_back(std::move(kv.value));
  }
  return groups;
}

std::vector<GroupedRecord> reduce_groups(
    const TaskContext& ctx, const ReduceFn& fn,
    const std::vector<std::pair<std::string, std::vector<std::string>>>& groups) {
  std::vector<GroupedRecord> out;
  for (const auto& [key, values] : groups) {
    Emitter em;
    fn(ctx, key, values, em);
    for (auto& kv : em.records()) out.push_back({key, std::move(kv)});
  }
  return out;
}

}  // namespace seizure::mr
