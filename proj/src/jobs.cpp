#include "seizure/jobs.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <mutex>
#include <sstream>

#include "seizure/bytes.hpp"
#include "seizure/error.hpp"

namespace seizure {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kChunkMagic = "SZCHUNK1";

std::string fmt_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <class T>
T parse_number(const std::string& s, const char* what) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParameterError(std::string("bad ") + what + " '" + s + "'");
  }
  return v;
}

FeatureConfig feature_config(const mr::TaskContext& ctx) {
  FeatureConfig cfg;
  cfg.filter = FilterPair::by_name(ctx.param("filter"));
  cfg.wpd_level = parse_number<int>(ctx.param("wpd_level"), "wpd_level");
  cfg.mspca_levels = parse_number<int>(ctx.param("mspca_levels"), "mspca_levels");
  return cfg;
}

RotationForestConfig forest_config(const mr::TaskContext& ctx) {
  RotationForestConfig cfg;
  cfg.ensemble_size = parse_number<int>(ctx.param("ensemble_size"), "ensemble_size");
  cfg.features_per_subset = parse_number<int>(ctx.param("features_per_subset"), "features_per_subset");
  cfg.pca_sample_fraction = parse_number<double>(ctx.param("pca_sample_fraction"), "pca_sample_fraction");
  const std::string& depth = ctx.param("max_depth");
  if (depth != "none") cfg.tree.max_depth = parse_number<int>(depth, "max_depth");
  cfg.tree.min_leaf = parse_number<int>(ctx.param("min_leaf"), "min_leaf");
  cfg.seed = parse_number<std::uint64_t>(ctx.param("seed"), "seed");
  cfg.validate();
  return cfg;
}

void signal_map(const mr::TaskContext& ctx, const std::string& split, mr::Emitter& out) {
  std::size_t ordinal = 0;
  const SegmentMatrix chunk = decode_chunk(read_file(ctx.resolve(split)), &ordinal);
  char key[64];
  std::snprintf(key, sizeof key, "%08zu/%s/%06zu", ordinal,
                std::string(to_string(chunk.source_phase)).c_str(), chunk.chunk_index);
  out.emit(key, encode_table(chunk_features(chunk, feature_config(ctx))));
}

void passthrough_reduce(const mr::TaskContext&, const std::string& key,
                        std::span<const std::string> values, mr::Emitter& out) {
  for (const auto& v : values) out.emit(key, v);
}

void ensemble_map(const mr::TaskContext& ctx, const std::string& split, mr::Emitter& out) {
  std::istringstream range(read_file(ctx.resolve(split)));
  std::size_t begin = 0;
  std::size_t end = 0;
  if (!(range >> begin >> end) || begin > end) throw FormatError("bad member range in " + split);
  const RotationForestConfig cfg = forest_config(ctx);
  if (end > static_cast<std::size_t>(cfg.ensemble_size)) {
    throw FormatError("member range " + split + " exceeds ensemble size");
  }
  const FeatureTable table = load_table(ctx.resolve(ctx.param("table")));
  for (std::size_t i = begin; i < end; ++i) {
    char prefix[32];
    std::snprintf(prefix, sizeof prefix, "%08zu\n", i);
    out.emit("model", prefix + serialize_member(train_member(table, cfg, i)));
  }
}

void ensemble_reduce(const mr::TaskContext& ctx, const std::string& key,
                     std::span<const std::string> values, mr::Emitter& out) {
  const RotationForestConfig cfg = forest_config(ctx);
  std::vector<std::pair<std::size_t, std::string_view>> parts;
  for (const auto& v : values) {
    const std::size_t nl = v.find('\n');
    if (nl == std::string::npos) throw FormatError("member record without index");
    parts.emplace_back(parse_number<std::size_t>(v.substr(0, nl), "member index"),
                       std::string_view(v).substr(nl + 1));
  }
  std::sort(parts.begin(), parts.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  if (parts.size() != static_cast<std::size_t>(cfg.ensemble_size)) {
    throw TrainingError("expected " + std::to_string(cfg.ensemble_size) + " members, got " +
                        std::to_string(parts.size()));
  }
  std::vector<RotationMember> members;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (parts[i].first != i) throw TrainingError("member " + std::to_string(i) + " missing");
    members.push_back(parse_member(parts[i].second));
  }
  const FeatureTable table = load_table(ctx.resolve(ctx.param("table")));
  out.emit(key, serialize_model(RotationForestModel(cfg, table.names(), std::move(members))));
}

void wordcount_map(const mr::TaskContext& ctx, const std::string& split, mr::Emitter& out) {
  std::istringstream in(read_file(ctx.resolve(split)));
  std::string word;
  while (in >> word) out.emit(word, "1");
}

void wordcount_reduce(const mr::TaskContext&, const std::string& key,
                      std::span<const std::string> values, mr::Emitter& out) {
  long total = 0;
  for (const auto& v : values) total += parse_number<long>(v, "count");
  out.emit(key, std::to_string(total));
}

fs::path split_dir(const fs::path& work_dir, const std::string& job_id) {
  const fs::path dir = fs::path("splits") / job_id;
  fs::create_directories(work_dir / dir);
  return dir;
}

std::string split_name(const char* stem, std::size_t i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s-%06zu%s", stem, i, ext);
  return buf;
}

}  // namespace

void register_jobs(mr::Registry& registry) {
  registry.add_map(kSignalMap, signal_map);
  registry.add_reduce(kSignalReduce, passthrough_reduce);
  registry.add_map(kEnsembleMap, ensemble_map);
  registry.add_reduce(kEnsembleReduce, ensemble_reduce);
  registry.add_map(kWordCountMap, wordcount_map);
  registry.add_reduce(kWordCountReduce, wordcount_reduce);
}

std::string encode_chunk(const SegmentMatrix& chunk, std::size_t ordinal) {
  if (chunk.values.rows() != chunk.segment_length ||
      chunk.values.cols() != static_cast<Eigen::Index>(chunk.channel_count) * chunk.segments_per_chunk) {
    throw ShapeError("chunk matrix does not match its declared geometry");
  }
  ByteWriter w;
  w.raw(kChunkMagic);
  w.u64(ordinal);
  w.u64(chunk.chunk_index);
  w.u8(static_cast<std::uint8_t>(chunk.source_phase));
  w.u32(static_cast<std::uint32_t>(chunk.segment_length));
  w.u32(static_cast<std::uint32_t>(chunk.segments_per_chunk));
  w.u32(static_cast<std::uint32_t>(chunk.channel_count));
  const double* p = chunk.values.data();
  for (Eigen::Index i = 0; i < chunk.values.size(); ++i) w.f64(p[i]);
  return w.take();
}

SegmentMatrix decode_chunk(std::string_view bytes, std::size_t* ordinal) {
  ByteReader r(bytes);
  r.expect(kChunkMagic);
  const std::uint64_t ord = r.u64();
  SegmentMatrix chunk;
  chunk.chunk_index = r.u64();
  const std::uint8_t phase = r.u8();
  if (phase > static_cast<std::uint8_t>(Phase::mixed)) throw FormatError("bad phase in chunk file");
  chunk.source_phase = static_cast<Phase>(phase);
  chunk.segment_length = static_cast<int>(r.u32());
  chunk.segments_per_chunk = static_cast<int>(r.u32());
  chunk.channel_count = static_cast<int>(r.u32());
  if (chunk.segment_length <= 0 || chunk.segments_per_chunk <= 0 || chunk.channel_count <= 0) {
    throw FormatError("bad chunk geometry");
  }
  const auto cols = static_cast<Eigen::Index>(chunk.channel_count) * chunk.segments_per_chunk;
  const std::size_t count = static_cast<std::size_t>(chunk.segment_length) * static_cast<std::size_t>(cols);
  if (count > bytes.size() / 8) throw FormatError("chunk file shorter than its geometry");
  chunk.values.resize(chunk.segment_length, cols);
  double* p = chunk.values.data();
  for (std::size_t i = 0; i < count; ++i) p[i] = r.f64();
  if (!r.done()) throw FormatError("trailing bytes in chunk file");
  if (ordinal != nullptr) *ordinal = ord;
  return chunk;
}

mr::Job make_signal_job(const std::string& job_id, const fs::path& work_dir,
                        std::span<const SegmentMatrix> chunks, const FeatureConfig& config) {
  mr::Job job{job_id, kSignalMap, kSignalReduce, {}, {}, work_dir};
  job.params["filter"] = config.filter.name;
  job.params["wpd_level"] = std::to_string(config.wpd_level);
  job.params["mspca_levels"] = std::to_string(config.mspca_levels);
  const fs::path dir = split_dir(work_dir, job_id);
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    const fs::path rel = dir / split_name("chunk", i, ".szc");
    write_file_atomic(work_dir / rel, encode_chunk(chunks[i], i));
    job.input_splits.push_back(rel.generic_string());
  }
  return job;
}

FeatureTable signal_job_table(const mr::Records& output) {
  FeatureTable table;
  for (const auto& kv : output) table.append(decode_table(kv.value));
  return table;
}

mr::Job make_ensemble_job(const std::string& job_id, const fs::path& work_dir,
                          const FeatureTable& table, const RotationForestConfig& config,
                          std::size_t map_tasks) {
  config.validate();
  mr::Job job{job_id, kEnsembleMap, kEnsembleReduce, {}, {}, work_dir};
  const fs::path dir = split_dir(work_dir, job_id);
  const fs::path table_path = dir / "table.sztab";
  save_table(table, work_dir / table_path);
  job.params["table"] = table_path.generic_string();
  job.params["ensemble_size"] = std::to_string(config.ensemble_size);
  job.params["features_per_subset"] = std::to_string(config.features_per_subset);
  job.params["pca_sample_fraction"] = fmt_double(config.pca_sample_fraction);
  job.params["max_depth"] = config.tree.max_depth ? std::to_string(*config.tree.max_depth) : "none";
  job.params["min_leaf"] = std::to_string(config.tree.min_leaf);
  job.params["seed"] = std::to_string(config.seed);

  const auto total = static_cast<std::size_t>(config.ensemble_size);
  const std::size_t tasks = std::clamp<std::size_t>(map_tasks, 1, total);
  for (std::size_t t = 0; t < tasks; ++t) {
    const std::size_t begin = total * t / tasks;
    const std::size_t end = total * (t + 1) / tasks;
    const fs::path rel = dir / split_name("members", t, ".txt");
    write_file_atomic(work_dir / rel, std::to_string(begin) + " " + std::to_string(end) + "\n");
    job.input_splits.push_back(rel.generic_string());
  }
  return job;
}

RotationForestModel ensemble_job_model(const mr::Records& output) {
  if (output.size() != 1) {
    throw TrainingError("ensemble job produced " + std::to_string(output.size()) + " records");
  }
  return parse_model(output.front().value);
}

mr::Job make_wordcount_job(const std::string& job_id, const fs::path& work_dir,
                           std::span<const std::string> texts) {
  mr::Job job{job_id, kWordCountMap, kWordCountReduce, {}, {}, work_dir};
  const fs::path dir = split_dir(work_dir, job_id);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const fs::path rel = dir / split_name("text", i, ".txt");
    write_file_atomic(work_dir / rel, texts[i]);
    job.input_splits.push_back(rel.generic_string());
  }
  return job;
}

}  // namespace seizure
