#include "seizure/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <thread>

#include "seizure/error.hpp"
#include "seizure/jobs.hpp"

namespace seizure {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::size_t local_threads(const mr::Executor& executor) {
  if (executor.name() != "threaded") return 1;
  const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  return std::min(executor.parallelism(), hw);
}

FeatureTable run_signal_job(mr::Executor& executor, const std::string& job_id,
                            const std::filesystem::path& work_dir,
                            std::span<const SegmentMatrix> chunks, const FeatureConfig& features) {
  const mr::Job job = make_signal_job(job_id, work_dir, chunks, features);
  return signal_job_table(executor.run(job));
}

std::string numbered(const char* stem, std::size_t i) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%03zu.csv", stem, i);
  return buf;
}

}  // namespace

Dataset synthesize_patient(int interictal_hours, int seizures, std::uint64_t seed,
                           const PatientProfile& profile) {
  if (interictal_hours < 0 || seizures < 0) throw ParameterError("counts must be non-negative");
  SynthConfig base;
  base.channel_count = profile.channel_count;
  base.background_bands = profile.background;
  base.noise_sigma = profile.noise_sigma;
  base.jitter_channel_phase = true;
  base.patient_id = "synthetic-" + std::to_string(seed);

  Dataset data;
  for (int h = 0; h < interictal_hours; ++h) {
    SynthConfig cfg = base;
    cfg.duration_s = 3600.0;
    cfg.phase = Phase::interictal;
    cfg.seed = mix64(seed ^ mix64(0x100000u + static_cast<std::uint64_t>(h)));
    data.interictal.push_back(synthesize_eeg(cfg));
  }
  const double ramp_s = kPreictalMinutes * 60.0;
  for (int k = 0; k < seizures; ++k) {
    SynthConfig pre = base;
    pre.duration_s = profile.preictal_file_minutes * 60.0;
    pre.phase = Phase::preictal;
    pre.seed = mix64(seed ^ mix64(0x200000u + static_cast<std::uint64_t>(k)));
    pre.preictal_signature =
        PreictalSignature{profile.signature_hz, profile.signature_amplitude, pre.duration_s - ramp_s,
                          pre.duration_s};
    SynthConfig ict = base;
    ict.duration_s = profile.ictal_minutes * 60.0;
    ict.phase = Phase::ictal;
    ict.seed = mix64(seed ^ mix64(0x300000u + static_cast<std::uint64_t>(k)));
    ict.preictal_signature = PreictalSignature{profile.signature_hz, profile.signature_amplitude, -ramp_s, 0.0};
    data.events.push_back({synthesize_eeg(pre), synthesize_eeg(ict)});
  }
  return data;
}

void save_dataset(const Dataset& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < data.interictal.size(); ++i) {
    save_csv(data.interictal[i], dir / numbered("interictal", i));
  }
  for (std::size_t i = 0; i < data.events.size(); ++i) {
    save_csv(data.events[i].preictal, dir / numbered("preictal", i));
    save_csv(data.events[i].ictal, dir / numbered("ictal", i));
  }
}

Dataset load_dataset(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError(dir.string() + " is not a directory");
  Dataset data;
  for (std::size_t i = 0; std::filesystem::exists(dir / numbered("interictal", i)); ++i) {
    data.interictal.push_back(load_csv(dir / numbered("interictal", i)));
  }
  for (std::size_t i = 0; std::filesystem::exists(dir / numbered("preictal", i)); ++i) {
    const auto ictal = dir / numbered("ictal", i);
    if (!std::filesystem::exists(ictal)) throw DataError("missing " + ictal.string());
    data.events.push_back({load_csv(dir / numbered("preictal", i)), load_csv(ictal)});
  }
  return data;
}

TrainingChunks training_chunks(const TrainSpec& spec) {
  if (spec.interictal.empty()) throw InsufficientDataError("training needs at least one interictal recording");
  if (spec.events.empty()) throw InsufficientDataError("training needs at least one seizure event");
  if (!(spec.interictal_minutes > 0.0)) throw ParameterError("interictal window must be positive");

  TrainingChunks out;
  std::vector<Recording> windows;
  for (std::size_t i = 0; i < spec.interictal.size(); ++i) {
    const Recording& rec = spec.interictal[i];
    const double want = spec.interictal_minutes * 60.0 * rec.sample_rate_hz();
    if (want >= static_cast<double>(rec.length())) {
      windows.push_back(rec);
    } else {
      windows.push_back(
          sample_training_window(rec, spec.interictal_minutes, mix64(spec.seed + mix64(i + 1))));
    }
  }
  // Windows are joined before segmentation so short windows still fill chunks.
  out.interictal = segment(concatenate(windows));
  for (auto& c : out.interictal) c.source_phase = Phase::interictal;
  for (const auto& event : spec.events) {
    auto chunks = segment(build_preictal(event.preictal, event.ictal));
    std::move(chunks.begin(), chunks.end(), std::back_inserter(out.preictal));
  }
  if (out.interictal.empty()) throw InsufficientDataError("interictal data is shorter than one chunk");
  if (out.preictal.empty()) throw InsufficientDataError("preictal data is shorter than one chunk");
  return out;
}

TrainResult train_pipeline(const TrainSpec& spec, mr::Executor& executor) {
  const auto t0 = Clock::now();
  const TrainingChunks chunks = training_chunks(spec);
  TrainResult result;
  result.report.executor = executor.name();

  auto t = Clock::now();
  result.table = run_signal_job(executor, spec.job_prefix + "-interictal", spec.work_dir,
                                chunks.interictal, spec.features);
  result.report.interictal_s = seconds_since(t);

  t = Clock::now();
  result.table.append(run_signal_job(executor, spec.job_prefix + "-preictal", spec.work_dir,
                                     chunks.preictal, spec.features));
  result.report.preictal_s = seconds_since(t);
  result.report.table_rows = result.table.rows();

  if (spec.cv_folds >= 2) {
    t = Clock::now();
    result.cv = cross_validate(result.table, spec.forest, spec.cv_folds, local_threads(executor));
    result.report.cv_accuracy = result.cv.mean_accuracy;
    result.report.cv_s = seconds_since(t);
  }

  t = Clock::now();
  const mr::Job job = make_ensemble_job(spec.job_prefix + "-ensemble", spec.work_dir, result.table,
                                        spec.forest, executor.parallelism());
  result.model = ensemble_job_model(executor.run(job));
  result.report.ensemble_s = seconds_since(t);
  result.report.total_s = seconds_since(t0);
  return result;
}

Recording build_test_stream(std::span<const Recording> interictal,
                            std::span<const SeizureEvent> events) {
  std::vector<Recording> parts(interictal.begin(), interictal.end());
  for (const auto& e : events) parts.push_back(build_preictal(e.preictal, e.ictal));
  return concatenate(parts);
}

TestResult test_pipeline(const RotationForestModel& model, const Recording& stream,
                         mr::Executor& executor, const FeatureConfig& features,
                         const std::filesystem::path& work_dir, const std::string& job_id) {
  const auto t0 = Clock::now();
  const std::vector<SegmentMatrix> chunks = segment(stream);
  if (chunks.empty()) throw InsufficientDataError("test stream is shorter than one chunk");
  const FeatureTable table = run_signal_job(executor, job_id, work_dir, chunks, features);
  if (table.names() != model.feature_names()) {
    throw DataError("feature schema mismatch: model expects " +
                    std::to_string(model.feature_count()) + " features, stream yields " +
                    std::to_string(table.feature_count()));
  }

  TestResult result;
  AlarmTimeline& tl = result.timeline;
  const auto spc = static_cast<std::size_t>(chunks.front().segments_per_chunk);
  tl.chunk_minutes = static_cast<double>(chunks.front().segment_length) * static_cast<double>(spc) /
                     stream.sample_rate_hz() / 60.0;
  if (const auto onset = stream.onset_index()) {
    tl.seizure_onset_min = static_cast<double>(*onset) / stream.sample_rate_hz() / 60.0;
  }
  AlarmScanner scanner;
  std::vector<ClassLabel> labels(spc);
  for (std::size_t k = 0; k < chunks.size(); ++k) {
    for (std::size_t s = 0; s < spc; ++s) labels[s] = predict(model, table.row(k * spc + s)).label;
    tl.chunks.push_back(classify_chunk(labels, k, static_cast<double>(k) * tl.chunk_minutes, spc));
    if (scanner.push(tl.chunks.back().chunk_label)) tl.alarms.push_back(k);
  }

  result.report.executor = executor.name();
  result.report.test_s = seconds_since(t0);
  result.report.table_rows = table.rows();
  result.report.alarms = tl.alarms;
  result.report.lead_time_min = tl.lead_time_min();
  return result;
}

std::string format_report_table(std::span<const RunReport> reports) {
  std::string out;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-24s", "phase (seconds)");
  out += buf;
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof buf, "%14s", r.executor.c_str());
    out += buf;
  }
  out += '\n';
  auto row = [&](const char* label, auto get) {
    std::snprintf(buf, sizeof buf, "%-24s", label);
    out += buf;
    for (const auto& r : reports) {
      const std::optional<double> v = get(r);
      if (v) {
        std::snprintf(buf, sizeof buf, "%14.3f", *v);
      } else {
        std::snprintf(buf, sizeof buf, "%14s", "-");
      }
      out += buf;
    }
    out += '\n';
  };
  row("interictal processing", [](const RunReport& r) { return std::optional(r.interictal_s); });
  row("preictal processing", [](const RunReport& r) { return std::optional(r.preictal_s); });
  row("total", [](const RunReport& r) { return std::optional(r.total_s); });
  row("test", [](const RunReport& r) { return r.test_s; });
  if (reports.size() > 1) {
    const RunReport& base = reports.front();
    row("total / baseline", [&](const RunReport& r) -> std::optional<double> {
      if (base.total_s <= 0.0) return std::nullopt;
      return r.total_s / base.total_s;
    });
    row("test / baseline", [&](const RunReport& r) -> std::optional<double> {
      if (!r.test_s || !base.test_s || *base.test_s <= 0.0) return std::nullopt;
      return *r.test_s / *base.test_s;
    });
  }
  return out;
}

void write_report_csv(std::span<const RunReport> reports, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "phase,executor,seconds\n";
  for (const auto& r : reports) {
    out << "interictal," << r.executor << ',' << r.interictal_s << '\n';
    out << "preictal," << r.executor << ',' << r.preictal_s << '\n';
    out << "total," << r.executor << ',' << r.total_s << '\n';
    if (r.test_s) out << "test," << r.executor << ',' << *r.test_s << '\n';
  }
  if (!out) throw DataError("failed writing " + path.string());
}

std::vector<RunReport> benchmark(const TrainSpec& spec, const std::optional<Recording>& test_stream,
                                 std::span<const BenchTarget> targets, int repeats) {
  if (repeats < 1) throw ParameterError("repeats must be at least 1");
  if (targets.empty()) throw ParameterError("no executors to benchmark");
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  };

  std::optional<std::string> reference;
  std::vector<RunReport> out;
  for (const BenchTarget& target : targets) {
    mr::Executor* ex = target.executor;
    TrainSpec run_spec = spec;
    if (!target.work_dir.empty()) run_spec.work_dir = target.work_dir;
    std::vector<double> inter, pre, total, test;
    RunReport last;
    for (int rep = 0; rep < repeats; ++rep) {
      TrainResult tr = train_pipeline(run_spec, *ex);
      const std::string bytes = serialize_model(tr.model);
      if (!reference) reference = bytes;
      if (bytes != *reference) {
        throw JobError("executor " + ex->name() + " produced a different model");
      }
      last = tr.report;
      inter.push_back(tr.report.interictal_s);
      pre.push_back(tr.report.preictal_s);
      total.push_back(tr.report.total_s);
      if (test_stream) {
        TestResult te = test_pipeline(tr.model, *test_stream, *ex, spec.features, run_spec.work_dir,
                                      spec.job_prefix + "-test");
        test.push_back(*te.report.test_s);
        last.alarms = te.report.alarms;
        last.lead_time_min = te.report.lead_time_min;
      }
    }
    last.interictal_s = median(inter);
    last.preictal_s = median(pre);
    last.total_s = median(total);
    if (!test.empty()) last.test_s = median(test);
    out.push_back(std::move(last));
  }
  return out;
}

}  // namespace seizure
