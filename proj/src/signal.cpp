#include "seizure/signal.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "seizure/error.hpp"
#include "seizure/rng.hpp"

namespace seizure {

std::string_view to_string(Phase phase) noexcept {
  switch (phase) {
    case Phase::interictal: return "interictal";
    case Phase::preictal: return "preictal";
    case Phase::ictal: return "ictal";
    case Phase::mixed: return "mixed";
  }
  return "interictal";
}

Phase parse_phase(std::string_view word) {
  if (word == "interictal") return Phase::interictal;
  if (word == "preictal") return Phase::preictal;
  if (word == "ictal") return Phase::ictal;
  if (word == "mixed") return Phase::mixed;
  throw ParameterError("unknown phase '" + std::string(word) + "'");
}

Recording::Recording(std::string patient_id, int sample_rate_hz,
                     std::vector<std::vector<double>> channels, Phase phase,
                     std::optional<std::size_t> onset_index)
    : patient_id_(std::move(patient_id)),
      sample_rate_hz_(sample_rate_hz),
      channels_(std::move(channels)),
      phase_(phase),
      onset_index_(onset_index) {
  if (sample_rate_hz_ <= 0) throw ParameterError("sample rate must be positive");
  if (channels_.empty()) throw ShapeError("recording needs at least one channel");
  const std::size_t n = channels_.front().size();
  if (n == 0) throw ShapeError("recording channels must be non-empty");
  for (const auto& ch : channels_) {
    if (ch.size() != n) throw ShapeError("recording channels differ in length");
  }
  if (onset_index_ && *onset_index_ >= n) {
    throw ParameterError("onset index " + std::to_string(*onset_index_) +
                         " outside recording of length " + std::to_string(n));
  }
}

Recording Recording::slice(std::size_t begin, std::size_t count) const {
  if (count == 0 || begin + count > length()) {
    throw ShapeError("slice [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                     ") outside recording of length " + std::to_string(length()));
  }
  std::vector<std::vector<double>> out;
  out.reserve(channels_.size());
  for (const auto& ch : channels_) {
    out.emplace_back(ch.begin() + static_cast<std::ptrdiff_t>(begin),
                     ch.begin() + static_cast<std::ptrdiff_t>(begin + count));
  }
  std::optional<std::size_t> onset;
  if (onset_index_ && *onset_index_ >= begin && *onset_index_ < begin + count) {
    onset = *onset_index_ - begin;
  }
  return Recording(patient_id_, sample_rate_hz_, std::move(out), phase_, onset);
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && first != last;
}

}  // namespace

Recording load_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "missing header in " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();

  int rate = 0;
  std::size_t channels = 0;
  std::optional<Phase> phase;
  std::optional<std::size_t> onset;
  std::string patient = "unknown";
  for (std::string_view field : split_commas(line)) {
    const std::size_t eq = field.find('=');
    if (eq == std::string_view::npos) throw ParseError(1, "header field without '='");
    const std::string_view key = field.substr(0, eq);
    const std::string_view value = field.substr(eq + 1);
    if (key == "sample_rate_hz") {
      if (!parse_number(value, rate) || rate <= 0) throw ParseError(1, "bad sample_rate_hz");
    } else if (key == "channels") {
      if (!parse_number(value, channels) || channels == 0) throw ParseError(1, "bad channels");
    } else if (key == "phase") {
      try {
        phase = parse_phase(value);
      } catch (const ParameterError& e) {
        throw ParseError(1, e.what());
      }
    } else if (key == "onset_index") {
      std::size_t v = 0;
      if (!parse_number(value, v)) throw ParseError(1, "bad onset_index");
      onset = v;
    } else if (key == "patient") {
      patient = std::string(value);
    } else {
      throw ParseError(1, "unknown header field '" + std::string(key) + "'");
    }
  }
  if (rate == 0 || channels == 0 || !phase) {
    throw ParseError(1, "header needs sample_rate_hz, channels and phase");
  }

  std::vector<std::vector<double>> data(channels);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto cells = split_commas(line);
    if (cells.size() != channels) {
      throw ParseError(line_no, "expected " + std::to_string(channels) + " cells, found " +
                                    std::to_string(cells.size()));
    }
    for (std::size_t c = 0; c < channels; ++c) {
      double v = 0.0;
      if (!parse_number(cells[c], v)) {
        throw ParseError(line_no, "non-numeric cell '" + std::string(cells[c]) + "'");
      }
      data[c].push_back(v);
    }
  }
  if (data.front().empty()) throw ParseError(line_no, "no samples");
  try {
    return Recording(std::move(patient), rate, std::move(data), *phase, onset);
  } catch (const Error& e) {
    throw ParseError(1, e.what());
  }
}

void save_csv(const Recording& rec, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "sample_rate_hz=" << rec.sample_rate_hz() << ",channels=" << rec.channel_count()
      << ",phase=" << to_string(rec.phase());
  if (rec.onset_index()) out << ",onset_index=" << *rec.onset_index();
  out << ",patient=" << rec.patient_id() << '\n';

  std::string row;
  char buf[32];
  for (std::size_t i = 0; i < rec.length(); ++i) {
    row.clear();
    for (std::size_t c = 0; c < rec.channel_count(); ++c) {
      if (c) row.push_back(',');
      auto res = std::to_chars(buf, buf + sizeof buf, rec.channel(c)[i]);
      row.append(buf, res.ptr);
    }
    row.push_back('\n');
    out.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw DataError("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Synthesis

Recording synthesize_eeg(const SynthConfig& config) {
  if (!(config.duration_s > 0.0)) throw ParameterError("duration_s must be positive");
  if (!(config.noise_sigma >= 0.0)) throw ParameterError("noise_sigma must be non-negative");
  if (config.sample_rate_hz <= 0) throw ParameterError("sample rate must be positive");
  if (config.channel_count <= 0) throw ParameterError("channel count must be positive");
  if (config.preictal_signature &&
      !(config.preictal_signature->onset_s > config.preictal_signature->start_s)) {
    throw ParameterError("signature onset must follow its start");
  }

  const double rate = config.sample_rate_hz;
  const auto n = static_cast<std::size_t>(std::llround(config.duration_s * rate));
  if (n == 0) throw ParameterError("duration shorter than one sample");
  constexpr double two_pi = 2.0 * std::numbers::pi;

  std::vector<std::vector<double>> channels(static_cast<std::size_t>(config.channel_count));
  for (std::size_t c = 0; c < channels.size(); ++c) {
    Rng phase_rng = derive_rng(config.seed, 0x70686173, c);
    Rng noise_rng = derive_rng(config.seed, 0x6e6f6973, c);
    std::vector<double> phases;
    for (const auto& osc : config.background_bands) {
      phases.push_back(osc.phase_rad +
                       (config.jitter_channel_phase ? two_pi * uniform_unit(phase_rng) : 0.0));
    }
    double sig_phase = 0.0;
    if (config.jitter_channel_phase) sig_phase = two_pi * uniform_unit(phase_rng);

    auto& out = channels[c];
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / rate;
      double v = 0.0;
      for (std::size_t k = 0; k < config.background_bands.size(); ++k) {
        const auto& osc = config.background_bands[k];
        v += osc.amplitude * std::sin(two_pi * osc.center_hz * t + phases[k]);
      }
      if (const auto& sig = config.preictal_signature) {
        double gain = 0.0;
        if (t >= sig->onset_s) {
          gain = 1.0;
        } else if (t > sig->start_s) {
          gain = (t - sig->start_s) / (sig->onset_s - sig->start_s);
        }
        if (gain > 0.0) v += gain * sig->max_amplitude * std::sin(two_pi * sig->center_hz * t + sig_phase);
      }
      if (config.noise_sigma > 0.0) v += config.noise_sigma * standard_normal(noise_rng);
      out[i] = v;
    }
  }

  std::optional<std::size_t> onset;
  if (const auto& sig = config.preictal_signature) {
    const double idx = std::ceil(sig->onset_s * rate);
    if (idx >= 0.0 && idx < static_cast<double>(n)) onset = static_cast<std::size_t>(idx);
  }
  return Recording(config.patient_id, config.sample_rate_hz, std::move(channels), config.phase,
                   onset);
}

// ---------------------------------------------------------------------------
// Protocol helpers

Recording build_preictal(const Recording& preictal, const Recording& ictal,
                         double preictal_minutes) {
  if (preictal.sample_rate_hz() != ictal.sample_rate_hz()) {
    throw ShapeError("preictal and ictal sample rates differ");
  }
  if (preictal.channel_count() != ictal.channel_count()) {
    throw ShapeError("preictal and ictal channel counts differ");
  }
  const auto keep =
      static_cast<std::size_t>(std::llround(preictal_minutes * 60.0 * preictal.sample_rate_hz()));
  if (preictal.length() < keep) {
    throw InsufficientDataError("preictal recording has " + std::to_string(preictal.length()) +
                                " samples, needs " + std::to_string(keep));
  }
  const std::size_t skip = preictal.length() - keep;
  std::vector<std::vector<double>> out(preictal.channel_count());
  for (std::size_t c = 0; c < out.size(); ++c) {
    const auto pre = preictal.channel(c);
    const auto ict = ictal.channel(c);
    out[c].reserve(keep + ict.size());
    out[c].insert(out[c].end(), pre.begin() + static_cast<std::ptrdiff_t>(skip), pre.end());
    out[c].insert(out[c].end(), ict.begin(), ict.end());
  }
  return Recording(preictal.patient_id(), preictal.sample_rate_hz(), std::move(out), Phase::mixed,
                   keep);
}

Recording sample_training_window(const Recording& rec, double minutes, std::uint64_t seed,
                                 std::size_t align) {
  if (!(minutes > 0.0)) throw ParameterError("window length must be positive");
  if (align == 0) throw ParameterError("alignment must be positive");
  const auto window = static_cast<std::size_t>(std::llround(minutes * 60.0 * rec.sample_rate_hz()));
  if (window > rec.length()) {
    throw InsufficientDataError("recording of " + std::to_string(rec.length()) +
                                " samples is shorter than a window of " + std::to_string(window));
  }
  if (window == rec.length()) return rec;
  const std::size_t starts = (rec.length() - window) / align + 1;
  Rng rng = derive_rng(seed, 0x77696e64, 0);
  const std::size_t start = uniform_index(rng, starts) * align;
  return rec.slice(start, window);
}

Recording concatenate(std::span<const Recording> parts) {
  if (parts.empty()) throw ParameterError("nothing to concatenate");
  const Recording& first = parts.front();
  std::vector<std::vector<double>> out(first.channel_count());
  std::optional<std::size_t> onset;
  Phase phase = first.phase();
  std::size_t offset = 0;
  for (const auto& part : parts) {
    if (part.sample_rate_hz() != first.sample_rate_hz() ||
        part.channel_count() != first.channel_count()) {
      throw ShapeError("cannot concatenate recordings of different geometry");
    }
    if (part.phase() != phase) phase = Phase::mixed;
    if (!onset && part.onset_index()) onset = offset + *part.onset_index();
    for (std::size_t c = 0; c < out.size(); ++c) {
      const auto ch = part.channel(c);
      out[c].insert(out[c].end(), ch.begin(), ch.end());
    }
    offset += part.length();
  }
  return Recording(first.patient_id(), first.sample_rate_hz(), std::move(out), phase, onset);
}

std::vector<SegmentMatrix> segment(const Recording& rec, int segment_length,
                                   int segments_per_chunk) {
  if (segment_length <= 0 || segments_per_chunk <= 0) {
    throw ParameterError("segment geometry must be positive");
  }
  const auto chunk_samples = static_cast<std::size_t>(segment_length) * segments_per_chunk;
  const std::size_t chunks = rec.length() / chunk_samples;
  const auto channels = static_cast<int>(rec.channel_count());

  std::vector<SegmentMatrix> out;
  out.reserve(chunks);
  for (std::size_t k = 0; k < chunks; ++k) {
    SegmentMatrix m;
    m.segment_length = segment_length;
    m.segments_per_chunk = segments_per_chunk;
    m.channel_count = channels;
    m.chunk_index = k;
    m.source_phase = rec.phase();
    m.values.resize(segment_length, static_cast<Eigen::Index>(segments_per_chunk) * channels);
    for (int c = 0; c < channels; ++c) {
      const double* src = rec.channel(static_cast<std::size_t>(c)).data() + k * chunk_samples;
      for (int s = 0; s < segments_per_chunk; ++s) {
        std::copy_n(src + static_cast<std::size_t>(s) * segment_length, segment_length,
                    m.values.col(m.column(c, s)).data());
      }
    }
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace seizure
