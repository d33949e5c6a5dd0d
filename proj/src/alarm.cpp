#include "seizure/alarm.hpp"

#include <algorithm>
#include <fstream>

#include "seizure/error.hpp"

namespace seizure {

ChunkPrediction classify_chunk(std::span<const ClassLabel> segment_predictions,
                               std::size_t chunk_index, double offset_min,
                               std::size_t segments_per_chunk, double threshold) {
  if (segment_predictions.size() != segments_per_chunk) {
    throw ShapeError("chunk has " + std::to_string(segment_predictions.size()) +
                     " segment predictions, expected " + std::to_string(segments_per_chunk));
  }
  const auto positives =
      std::count(segment_predictions.begin(), segment_predictions.end(), ClassLabel::preictal);
  ChunkPrediction p;
  p.chunk_index = chunk_index;
  p.positive_fraction = static_cast<double>(positives) / static_cast<double>(segments_per_chunk);
  p.chunk_label = p.positive_fraction > threshold ? ClassLabel::preictal : ClassLabel::interictal;
  p.wall_clock_offset_min = offset_min;
  return p;
}

bool AlarmScanner::push(ClassLabel label) noexcept {
  if (label != ClassLabel::preictal) {
    run_ = 0;
    return false;
  }
  return ++run_ == kAlarmRun;
}

std::vector<std::size_t> alarm_scan(std::span<const ClassLabel> labels) {
  AlarmScanner scanner;
  std::vector<std::size_t> alarms;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (scanner.push(labels[i])) alarms.push_back(i);
  }
  return alarms;
}

std::optional<double> AlarmTimeline::lead_time_min() const {
  if (!seizure_onset_min || alarms.empty()) return std::nullopt;
  const auto first = std::find_if(chunks.begin(), chunks.end(), [&](const ChunkPrediction& c) {
    return c.chunk_index == alarms.front();
  });
  if (first == chunks.end()) return std::nullopt;
  return *seizure_onset_min - (first->wall_clock_offset_min + chunk_minutes);
}

void write_timeline_csv(const AlarmTimeline& timeline, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "chunk_index,offset_min,positive_fraction,label,alarm\n";
  for (const auto& c : timeline.chunks) {
    const bool alarm = std::find(timeline.alarms.begin(), timeline.alarms.end(), c.chunk_index) !=
                       timeline.alarms.end();
    out << c.chunk_index << ',' << c.wall_clock_offset_min << ',' << c.positive_fraction << ','
        << to_string(c.chunk_label) << ',' << (alarm ? 1 : 0) << '\n';
  }
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace seizure
