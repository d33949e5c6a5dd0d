#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace seizure {

enum class Phase : std::uint8_t { interictal, preictal, ictal, mixed };

std::string_view to_string(Phase phase) noexcept;
/// Throws ParameterError on an unknown word.
Phase parse_phase(std::string_view word);

inline constexpr int kSampleRateHz = 256;
inline constexpr int kSegmentLength = 2048;    // 8 s at 256 Hz
inline constexpr int kSegmentsPerChunk = 60;   // 8 min per chunk
inline constexpr double kPreictalMinutes = 48.0;

/// Multi-channel EEG. Immutable once built; every channel has the same length.
class Recording {
 public:
  Recording(std::string patient_id, int sample_rate_hz,
            std::vector<std::vector<double>> channels, Phase phase,
            std::optional<std::size_t> onset_index = std::nullopt);

  const std::string& patient_id() const noexcept { return patient_id_; }
  int sample_rate_hz() const noexcept { return sample_rate_hz_; }
  Phase phase() const noexcept { return phase_; }
  std::optional<std::size_t> onset_index() const noexcept { return onset_index_; }

  std::size_t channel_count() const noexcept { return channels_.size(); }
  std::size_t length() const noexcept { return channels_.front().size(); }
  double duration_s() const noexcept {
    return static_cast<double>(length()) / sample_rate_hz_;
  }
  std::span<const double> channel(std::size_t c) const { return channels_.at(c); }
  const std::vector<std::vector<double>>& channels() const noexcept { return channels_; }

  /// Samples [begin, begin + count) of every channel. Onset is kept when it
  /// falls inside the slice.
  Recording slice(std::size_t begin, std::size_t count) const;

  friend bool operator==(const Recording&, const Recording&) = default;

 private:
  std::string patient_id_;
  int sample_rate_hz_;
  std::vector<std::vector<double>> channels_;
  Phase phase_;
  std::optional<std::size_t> onset_index_;
};

/// One chunk laid out as segment_length rows by segments*channels columns.
/// Column c * segments_per_chunk + s holds segment s of channel c.
struct SegmentMatrix {
  Eigen::MatrixXd values;
  int segment_length = kSegmentLength;
  int segments_per_chunk = kSegmentsPerChunk;
  int channel_count = 0;
  std::size_t chunk_index = 0;
  Phase source_phase = Phase::interictal;

  Eigen::Index column(int channel, int seg) const noexcept {
    return static_cast<Eigen::Index>(channel) * segments_per_chunk + seg;
  }
  /// Absolute index (in the source recording) of the chunk's first sample.
  std::size_t first_sample() const noexcept {
    return chunk_index * static_cast<std::size_t>(segment_length) * segments_per_chunk;
  }
};

struct Oscillator {
  double center_hz = 10.0;
  double amplitude = 1.0;
  double phase_rad = 0.0;
};

/// Oscillator whose amplitude ramps linearly from 0 at start_s to
/// max_amplitude at onset_s, and stays at max_amplitude afterwards.
/// Times are relative to the start of the synthesized recording and may be
/// negative or beyond its end.
struct PreictalSignature {
  double center_hz = 2.0;
  double max_amplitude = 1.0;
  double start_s = 0.0;
  double onset_s = 0.0;
};

struct SynthConfig {
  double duration_s = 60.0;
  int sample_rate_hz = kSampleRateHz;
  int channel_count = 3;
  std::vector<Oscillator> background_bands;
  double noise_sigma = 0.0;
  /// Draw an independent phase offset per (channel, oscillator).
  bool jitter_channel_phase = false;
  std::optional<PreictalSignature> preictal_signature;
  Phase phase = Phase::interictal;
  std::string patient_id = "synthetic";
  std::uint64_t seed = 0;
};

Recording load_csv(const std::filesystem::path& path);
void save_csv(const Recording& rec, const std::filesystem::path& path);

Recording synthesize_eeg(const SynthConfig& config);

/// Final `preictal_minutes` of `preictal` followed by all of `ictal`.
Recording build_preictal(const Recording& preictal, const Recording& ictal,
                         double preictal_minutes = kPreictalMinutes);

/// Contiguous window of `minutes`, start drawn uniformly among offsets that
/// are multiples of `align` samples.
Recording sample_training_window(const Recording& rec, double minutes, std::uint64_t seed,
                                 std::size_t align = kSegmentLength);

/// Recordings joined end to end (same rate and channel count). The first
/// onset encountered is kept, shifted to its position in the result.
Recording concatenate(std::span<const Recording> parts);

/// Whole chunks only; trailing samples are dropped.
std::vector<SegmentMatrix> segment(const Recording& rec, int segment_length = kSegmentLength,
                                   int segments_per_chunk = kSegmentsPerChunk);

}  // namespace seizure
