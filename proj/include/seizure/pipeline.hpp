#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "seizure/alarm.hpp"
#include "seizure/features.hpp"
#include "seizure/mapreduce/executor.hpp"
#include "seizure/rotforest.hpp"
#include "seizure/signal.hpp"

namespace seizure {

struct SeizureEvent {
  Recording preictal;  // recording that ends at seizure onset
  Recording ictal;     // recording that starts at seizure onset
};

/// Synthetic patient: background rhythms plus noise, and before each seizure
/// a low-frequency oscillation ramping up over the final 48 minutes.
struct PatientProfile {
  int channel_count = 3;
  std::vector<Oscillator> background{{10.0, 3.0, 0.0}, {21.0, 1.5, 0.0}};
  double noise_sigma = 2.0;
  double signature_hz = 2.0;
  double signature_amplitude = 8.0;
  double preictal_file_minutes = 60.0;
  double ictal_minutes = 8.0;
};

struct Dataset {
  std::vector<Recording> interictal;  // one recording per hour
  std::vector<SeizureEvent> events;
};

Dataset synthesize_patient(int interictal_hours, int seizures, std::uint64_t seed,
                           const PatientProfile& profile = {});
/// interictal_NNN.csv, preictal_NNN.csv, ictal_NNN.csv
void save_dataset(const Dataset& data, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

struct TrainSpec {
  std::vector<Recording> interictal;
  std::vector<SeizureEvent> events;
  /// Window drawn from each interictal recording; 60 uses the full hour.
  double interictal_minutes = 10.0;
  FeatureConfig features;
  RotationForestConfig forest;
  int cv_folds = 10;
  std::uint64_t seed = 1;
  std::filesystem::path work_dir;
  std::string job_prefix = "train";
};

struct RunReport {
  std::string executor;
  double interictal_s = 0.0;
  double preictal_s = 0.0;
  double cv_s = 0.0;
  double ensemble_s = 0.0;
  double total_s = 0.0;
  std::optional<double> test_s;
  std::optional<double> cv_accuracy;
  std::size_t table_rows = 0;
  std::vector<std::size_t> alarms;
  std::optional<double> lead_time_min;
};

struct TrainResult {
  RotationForestModel model;
  FeatureTable table;
  CvResult cv;
  RunReport report;
};

/// The two halves of the training table, before any MapReduce work.
struct TrainingChunks {
  std::vector<SegmentMatrix> interictal;
  std::vector<SegmentMatrix> preictal;
};
TrainingChunks training_chunks(const TrainSpec& spec);

/// Windows -> chunks -> signal job -> table -> cross-validation -> ensemble
/// job. `cv_folds` < 2 skips cross-validation.
TrainResult train_pipeline(const TrainSpec& spec, mr::Executor& executor);

struct TestResult {
  AlarmTimeline timeline;
  RunReport report;
};

/// Interictal hours followed by each event (final 48 preictal minutes, then
/// the ictal recording).
Recording build_test_stream(std::span<const Recording> interictal,
                            std::span<const SeizureEvent> events);

/// Chunks the stream in temporal order, classifies every segment, then each
/// chunk, and scans for alarms.
TestResult test_pipeline(const RotationForestModel& model, const Recording& stream,
                         mr::Executor& executor, const FeatureConfig& features,
                         const std::filesystem::path& work_dir,
                         const std::string& job_id = "test");

/// Aligned text table: one column per report, rows interictal / preictal /
/// total / test, followed by speedups relative to the first report.
std::string format_report_table(std::span<const RunReport> reports);
/// phase,executor,seconds
void write_report_csv(std::span<const RunReport> reports, const std::filesystem::path& path);

struct BenchTarget {
  mr::Executor* executor = nullptr;
  std::filesystem::path work_dir;  // overrides TrainSpec::work_dir
};

/// Median of `repeats` runs per executor and phase. Every executor's model
/// must equal the first one's; a mismatch throws JobError.
std::vector<RunReport> benchmark(const TrainSpec& spec, const std::optional<Recording>& test_stream,
                                 std::span<const BenchTarget> targets, int repeats);

}  // namespace seizure
