#include "seizure/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "seizure/bytes.hpp"
#include "seizure/error.hpp"
#include "seizure/mspca.hpp"

namespace seizure {

std::string_view to_string(ClassLabel label) noexcept {
  return label == ClassLabel::preictal ? "preictal" : "interictal";
}

ClassLabel parse_label(std::string_view word) {
  if (word == "interictal") return ClassLabel::interictal;
  if (word == "preictal") return ClassLabel::preictal;
  throw ParameterError("unknown class label '" + std::string(word) + "'");
}

ClassLabel label_for(Phase phase) noexcept {
  return phase == Phase::interictal ? ClassLabel::interictal : ClassLabel::preictal;
}

std::vector<std::string> feature_names(std::size_t channels, int level) {
  static constexpr const char* stats[kStatisticsPerLeaf] = {"mav", "power", "std", "ratio"};
  const std::size_t leaves = std::size_t{1} << level;
  std::vector<std::string> names;
  names.reserve(channels * leaves * kStatisticsPerLeaf);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t b = 0; b < leaves; ++b) {
      for (const char* s : stats) {
        names.push_back("ch" + std::to_string(c) + "_b" + std::to_string(b) + "_" + s);
      }
    }
  }
  return names;
}

FeatureVector extract_segment_features(std::span<const std::span<const double>> channels,
                                       const FilterPair& filter, int level,
                                       std::size_t segment_length) {
  if (channels.empty()) throw ShapeError("segment has no channels");
  const std::size_t leaves = std::size_t{1} << level;
  FeatureVector fv;
  fv.names = feature_names(channels.size(), level);
  fv.values.reserve(fv.names.size());

  std::vector<double> mav(leaves);
  for (const auto& ch : channels) {
    if (ch.size() != segment_length) {
      throw ShapeError("segment channel has " + std::to_string(ch.size()) + " samples, expected " +
                       std::to_string(segment_length));
    }
    const WpdTree tree = wpd(ch, filter, level);
    const std::size_t base = fv.values.size();
    for (std::size_t b = 0; b < leaves; ++b) {
      const auto& leaf = tree.leaves[b];
      const double n = static_cast<double>(leaf.size());
      double abs_sum = 0.0;
      double sq_sum = 0.0;
      double sum = 0.0;
      for (double v : leaf) {
        abs_sum += std::abs(v);
        sq_sum += v * v;
        sum += v;
      }
      const double mean = sum / n;
      double var = 0.0;
      for (double v : leaf) var += (v - mean) * (v - mean);
      mav[b] = abs_sum / n;
      fv.values.push_back(mav[b]);
      fv.values.push_back(sq_sum / n);
      fv.values.push_back(std::sqrt(var / n));
      fv.values.push_back(0.0);  // ratio, filled below
    }
    for (std::size_t b = 0; b < leaves; ++b) {
      const double next = mav[(b + 1) % leaves];
      fv.values[base + b * kStatisticsPerLeaf + 3] = next == 0.0 ? 0.0 : mav[b] / next;
    }
  }
  return fv;
}

// ---------------------------------------------------------------------------

void FeatureTable::add_row(std::span<const double> values, ClassLabel label) {
  if (values.size() != names_.size()) {
    throw ShapeError("row has " + std::to_string(values.size()) + " values, table has " +
                     std::to_string(names_.size()) + " features");
  }
  values_.insert(values_.end(), values.begin(), values.end());
  labels_.push_back(label);
}

void FeatureTable::append(const FeatureTable& other) {
  if (names_.empty() && empty()) names_ = other.names_;
  if (other.names_ != names_) throw ShapeError("feature tables have different schemas");
  values_.insert(values_.end(), other.values_.begin(), other.values_.end());
  labels_.insert(labels_.end(), other.labels_.begin(), other.labels_.end());
}

FeatureTable FeatureTable::subset(std::span<const std::size_t> rows) const {
  FeatureTable out(names_);
  out.values_.reserve(rows.size() * names_.size());
  for (std::size_t r : rows) out.add_row(row(r), labels_.at(r));
  return out;
}

std::size_t FeatureTable::count(ClassLabel label) const noexcept {
  return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), label));
}

FeatureTable chunk_features(const SegmentMatrix& chunk, const FeatureConfig& config) {
  const Eigen::MatrixXd clean = mspca_denoise(chunk.values, config.filter, config.mspca_levels);
  const auto channels = static_cast<std::size_t>(chunk.channel_count);
  FeatureTable table(feature_names(channels, config.wpd_level));
  const ClassLabel label = label_for(chunk.source_phase);
  std::vector<std::span<const double>> views(channels);
  for (int s = 0; s < chunk.segments_per_chunk; ++s) {
    for (int c = 0; c < chunk.channel_count; ++c) {
      views[static_cast<std::size_t>(c)] = std::span<const double>(
          clean.col(chunk.column(c, s)).data(), static_cast<std::size_t>(clean.rows()));
    }
    const FeatureVector fv = extract_segment_features(
        views, config.filter, config.wpd_level, static_cast<std::size_t>(chunk.segment_length));
    table.add_row(fv.values, label);
  }
  return table;
}

FeatureTable build_feature_table(std::span<const SegmentMatrix> chunks, const FeatureConfig& config) {
  FeatureTable table;
  for (const auto& chunk : chunks) {
    if (chunk.segment_length != chunks.front().segment_length ||
        chunk.segments_per_chunk != chunks.front().segments_per_chunk ||
        chunk.channel_count != chunks.front().channel_count) {
      throw ShapeError("chunks do not share geometry");
    }
    table.append(chunk_features(chunk, config));
  }
  return table;
}

// ---------------------------------------------------------------------------
// IO

void write_feature_csv(const FeatureTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& name : table.names()) out << name << ',';
  out << "label\n";
  char buf[32];
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (double v : table.row(r)) {
      auto res = std::to_chars(buf, buf + sizeof buf, v);
      out.write(buf, res.ptr - buf);
      out << ',';
    }
    out << to_string(table.label(r)) << '\n';
  }
}

FeatureTable read_feature_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "missing header");
  std::vector<std::string> names;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) names.push_back(cell);
  }
  if (names.empty() || names.back() != "label") throw ParseError(1, "last column must be 'label'");
  names.pop_back();
  FeatureTable table(names);
  std::vector<double> row(names.size());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t start = 0;
    for (std::size_t c = 0; c <= names.size(); ++c) {
      const std::size_t comma = line.find(',', start);
      const bool last = c == names.size();
      if (last != (comma == std::string::npos)) throw ParseError(line_no, "wrong cell count");
      const std::string_view cell =
          std::string_view(line).substr(start, last ? std::string::npos : comma - start);
      if (last) {
        try {
          table.add_row(row, parse_label(cell));
        } catch (const ParameterError& e) {
          throw ParseError(line_no, e.what());
        }
      } else {
        auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), row[c]);
        if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty()) {
          throw ParseError(line_no, "non-numeric cell");
        }
        start = comma + 1;
      }
    }
  }
  return table;
}

std::string encode_table(const FeatureTable& table) {
  ByteWriter w;
  w.raw("SZTABLE1");
  w.u32(static_cast<std::uint32_t>(table.feature_count()));
  for (const auto& n : table.names()) w.str(n);
  w.u64(table.rows());
  for (std::size_t r = 0; r < table.rows(); ++r) {
    w.u8(static_cast<std::uint8_t>(table.label(r)));
    for (double v : table.row(r)) w.f64(v);
  }
  return w.take();
}

FeatureTable decode_table(std::string_view bytes) {
  ByteReader r(bytes);
  r.expect("SZTABLE1");
  const std::uint32_t p = r.u32();
  std::vector<std::string> names;
  names.reserve(p);
  for (std::uint32_t i = 0; i < p; ++i) names.emplace_back(r.str());
  FeatureTable table(std::move(names));
  const std::uint64_t rows = r.u64();
  std::vector<double> row(p);
  for (std::uint64_t i = 0; i < rows; ++i) {
    const std::uint8_t label = r.u8();
    if (label > 1) throw FormatError("bad label at offset " + std::to_string(r.offset() - 1));
    for (auto& v : row) v = r.f64();
    table.add_row(row, static_cast<ClassLabel>(label));
  }
  if (!r.done()) throw FormatError("trailing bytes at offset " + std::to_string(r.offset()));
  return table;
}

void save_table(const FeatureTable& table, const std::filesystem::path& path) {
  write_file_atomic(path, encode_table(table));
}

FeatureTable load_table(const std::filesystem::path& path) { return decode_table(read_file(path)); }

}  // namespace seizure
