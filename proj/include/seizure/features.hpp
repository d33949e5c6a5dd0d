#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "seizure/signal.hpp"
#include "seizure/wavelet.hpp"

namespace seizure {

enum class ClassLabel : std::uint8_t { interictal = 0, preictal = 1 };

std::string_view to_string(ClassLabel label) noexcept;
ClassLabel parse_label(std::string_view word);
/// Training label of a source phase; every non-interictal phase is preictal.
ClassLabel label_for(Phase phase) noexcept;

inline constexpr int kStatisticsPerLeaf = 4;

struct FeatureConfig {
  FilterPair filter = FilterPair::db4();
  int wpd_level = 4;
  int mspca_levels = 4;
};

struct FeatureVector {
  std::vector<double> values;
  std::vector<std::string> names;
};

/// Names in extraction order: ch<c>_b<leaf>_{mav,power,std,ratio}.
std::vector<std::string> feature_names(std::size_t channels, int level);

/// Per channel and WPD leaf: mean absolute value, mean power, standard
/// deviation, and MAV divided by the next leaf's MAV (wrapping; 0 when that
/// MAV is 0). Layout is channel-major, then leaf, then statistic.
FeatureVector extract_segment_features(std::span<const std::span<const double>> channels,
                                       const FilterPair& filter, int level = 4,
                                       std::size_t segment_length = kSegmentLength);

/// Rectangular labelled rows, stored row-major.
class FeatureTable {
 public:
  FeatureTable() = default;
  explicit FeatureTable(std::vector<std::string> names) : names_(std::move(names)) {}

  const std::vector<std::string>& names() const noexcept { return names_; }
  std::size_t feature_count() const noexcept { return names_.size(); }
  std::size_t rows() const noexcept { return labels_.size(); }
  bool empty() const noexcept { return labels_.empty(); }

  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * names_.size(), names_.size()};
  }
  ClassLabel label(std::size_t i) const { return labels_.at(i); }
  std::span<const ClassLabel> labels() const noexcept { return labels_; }
  std::span<const double> data() const noexcept { return values_; }

  void add_row(std::span<const double> values, ClassLabel label);
  /// Appends all rows of `other`; names must match.
  void append(const FeatureTable& other);
  FeatureTable subset(std::span<const std::size_t> rows) const;
  std::size_t count(ClassLabel label) const noexcept;

  friend bool operator==(const FeatureTable&, const FeatureTable&) = default;

 private:
  std::vector<std::string> names_;
  std::vector<double> values_;
  std::vector<ClassLabel> labels_;
};

/// MSPCA-denoises each chunk, then emits one row per segment, in
/// (chunk, segment) order, labelled from the chunk's source phase.
FeatureTable build_feature_table(std::span<const SegmentMatrix> chunks, const FeatureConfig& config);
/// Rows for a single chunk.
FeatureTable chunk_features(const SegmentMatrix& chunk, const FeatureConfig& config);

/// Header of feature names plus `label`; one row per segment.
void write_feature_csv(const FeatureTable& table, const std::filesystem::path& path);
FeatureTable read_feature_csv(const std::filesystem::path& path);

/// Exact binary form used to hand tables between processes.
std::string encode_table(const FeatureTable& table);
FeatureTable decode_table(std::string_view bytes);
void save_table(const FeatureTable& table, const std::filesystem::path& path);
FeatureTable load_table(const std::filesystem::path& path);

}  // namespace seizure
