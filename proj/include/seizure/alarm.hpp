#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "seizure/features.hpp"

namespace seizure {

inline constexpr double kChunkThreshold = 0.5;
inline constexpr std::size_t kAlarmRun = 3;

struct ChunkPrediction {
  std::size_t chunk_index = 0;
  double positive_fraction = 0.0;
  ClassLabel chunk_label = ClassLabel::interictal;
  double wall_clock_offset_min = 0.0;
};

/// Preictal iff the preictal fraction is strictly above `threshold`.
/// Throws ShapeError unless there are exactly `segments_per_chunk` labels.
ChunkPrediction classify_chunk(std::span<const ClassLabel> segment_predictions,
                               std::size_t chunk_index = 0, double offset_min = 0.0,
                               std::size_t segments_per_chunk = kSegmentsPerChunk,
                               double threshold = kChunkThreshold);

/// Fires on the third consecutive preictal label; further preictal labels in
/// the same run do not fire again until an interictal label resets it.
class AlarmScanner {
 public:
  /// Returns true when an alarm fires at this label.
  bool push(ClassLabel label) noexcept;
  void reset() noexcept { run_ = 0; }

 private:
  std::size_t run_ = 0;
};

/// Indices at which AlarmScanner fires.
std::vector<std::size_t> alarm_scan(std::span<const ClassLabel> labels);

struct AlarmTimeline {
  std::vector<ChunkPrediction> chunks;
  std::vector<std::size_t> alarms;
  std::optional<double> seizure_onset_min;
  double chunk_minutes = 8.0;

  /// Onset minus the end minute of the first alarm's chunk; absent without
  /// an onset or an alarm.
  std::optional<double> lead_time_min() const;
};

/// Columns: chunk_index,offset_min,positive_fraction,label,alarm
void write_timeline_csv(const AlarmTimeline& timeline, const std::filesystem::path& path);

}  // namespace seizure
