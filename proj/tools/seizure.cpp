// seizure: synthesis, training, prediction, benchmarking and cluster roles.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <CLI11.hpp>

#include "seizure/error.hpp"
#include "seizure/jobs.hpp"
#include "seizure/mapreduce/executor.hpp"
#include "seizure/mapreduce/local_cluster.hpp"
#include "seizure/mapreduce/master.hpp"
#include "seizure/mapreduce/worker.hpp"
#include "seizure/pipeline.hpp"

namespace fs = std::filesystem;
using namespace seizure;

namespace {

struct ExecutorOptions {
  std::string kind = "serial";
  int workers = 4;
  std::string master;
  std::string work_dir;
  int heartbeat_ms = 100;
  int task_timeout_ms = 2000;
  int startup_timeout_ms = 10000;
};

void add_executor_flags(CLI::App* cmd, ExecutorOptions& o) {
  cmd->add_option("--executor", o.kind, "serial, threaded or distributed")
      ->check(CLI::IsMember({"serial", "threaded", "distributed"}))
      ->capture_default_str();
  cmd->add_option("--workers", o.workers, "Threads, or worker processes for a local cluster")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--master", o.master,
                  "HOST:PORT of a running master; without it, distributed mode starts a local cluster");
  cmd->add_option("--work-dir", o.work_dir,
                  "Shared work directory (required with --master; default: a temporary directory)");
  cmd->add_option("--heartbeat-ms", o.heartbeat_ms, "Local cluster heartbeat interval")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--task-timeout-ms", o.task_timeout_ms, "Local cluster worker timeout")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--startup-timeout-ms", o.startup_timeout_ms, "Wait for workers this long")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

/// Owns the work directory, and the local cluster when one is needed.
class Runtime {
 public:
  explicit Runtime(const ExecutorOptions& o) {
    if (!o.master.empty() && o.kind != "distributed") {
      throw ParameterError("--master only applies to --executor distributed");
    }
    if (!o.master.empty() && o.work_dir.empty()) {
      throw ParameterError("--master needs --work-dir naming the master's work directory");
    }
    if (o.work_dir.empty()) {
      work_dir_ = fs::temp_directory_path() / ("seizure-" + std::to_string(::getpid()));
      temporary_ = true;
    } else {
      work_dir_ = fs::absolute(o.work_dir);
    }
    fs::create_directories(work_dir_);
    if (o.kind == "serial") {
      executor_ = std::make_unique<mr::SerialExecutor>();
    } else if (o.kind == "threaded") {
      executor_ = std::make_unique<mr::ThreadedExecutor>(static_cast<std::size_t>(o.workers));
    } else if (!o.master.empty()) {
      mr::ClusterConfig cfg;
      cfg.master_address = o.master;
      cfg.expected_workers = o.workers;
      cfg.heartbeat_interval_ms = o.heartbeat_ms;
      cfg.task_timeout_ms = o.task_timeout_ms;
      cfg.startup_timeout_ms = o.startup_timeout_ms;
      cfg.work_dir = work_dir_;
      executor_ = std::make_unique<mr::DistributedExecutor>(cfg);
    } else {
      mr::LocalClusterOptions lo;
      lo.workers = o.workers;
      lo.work_dir = work_dir_;
      lo.heartbeat_interval_ms = o.heartbeat_ms;
      lo.task_timeout_ms = o.task_timeout_ms;
      lo.startup_timeout_ms = o.startup_timeout_ms;
      cluster_ = std::make_unique<mr::LocalCluster>(lo);
      executor_ = std::make_unique<mr::DistributedExecutor>(cluster_->config());
    }
  }
  ~Runtime() {
    executor_.reset();
    cluster_.reset();
    if (temporary_) {
      std::error_code ec;
      fs::remove_all(work_dir_, ec);
    }
  }
  Runtime(const Runtime&) = delete;
  Runtime& operator=(const Runtime&) = delete;

  mr::Executor& executor() { return *executor_; }
  const fs::path& work_dir() const { return work_dir_; }

 private:
  fs::path work_dir_;
  bool temporary_ = false;
  std::unique_ptr<mr::LocalCluster> cluster_;
  std::unique_ptr<mr::Executor> executor_;
};

void print_timeline(const AlarmTimeline& tl) {
  std::printf("chunks: %zu  alarms: %zu\n", tl.chunks.size(), tl.alarms.size());
  for (std::size_t a : tl.alarms) {
    std::printf("  alarm at chunk %zu (minute %.1f)\n", a, tl.chunks.at(a).wall_clock_offset_min);
  }
  if (const auto lead = tl.lead_time_min()) {
    std::printf("lead time: %.1f min\n", *lead);
  } else {
    std::printf("lead time: n/a\n");
  }
}

int g_wake_fd = -1;

extern "C" void on_stop_signal(int) {
  if (g_wake_fd >= 0) {
    const char b = 1;
    [[maybe_unused]] auto n = ::write(g_wake_fd, &b, 1);
  }
}

}  // namespace

int main(int argc, char** argv) {
  register_jobs();

  CLI::App app{"EEG seizure prediction with Rotation Forest on a miniature MapReduce runtime"};
  app.set_config("--config", "", "TOML/INI file supplying flag values");
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Write a synthetic patient as CSV recordings");
  std::string synth_out;
  int hours = 4;
  int seizures = 2;
  std::uint64_t synth_seed = 1;
  PatientProfile profile;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--hours", hours, "Interictal hours")->check(CLI::NonNegativeNumber)->capture_default_str();
  synth->add_option("--seizures", seizures, "Seizure events (preictal + ictal pairs)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  synth->add_option("--seed", synth_seed, "Random seed")->capture_default_str();
  synth->add_option("--channels", profile.channel_count, "EEG channels")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  synth->add_option("--signature-amplitude", profile.signature_amplitude,
                    "Peak amplitude of the preictal oscillation")
      ->capture_default_str();

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a model from a data directory");
  std::string data_dir;
  std::string model_out;
  std::string train_report;
  std::string table_out;
  ExecutorOptions train_ex;
  TrainSpec spec;
  std::string max_depth = "none";
  train_cmd->add_option("--data", data_dir, "Directory written by synth")->required();
  train_cmd->add_option("--out", model_out, "Model file to write")->required();
  add_executor_flags(train_cmd, train_ex);
  train_cmd->add_option("--seed", spec.forest.seed, "Seed for windows, subsets and folds")->capture_default_str();
  train_cmd->add_option("--interictal-minutes", spec.interictal_minutes,
                        "Interictal window per hour: 10, or 60 for the full hour")
      ->check(CLI::IsMember({10.0, 60.0}))
      ->capture_default_str();
  train_cmd->add_option("--ensemble-size", spec.forest.ensemble_size, "Trees in the forest")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train_cmd->add_option("--subset-size", spec.forest.features_per_subset, "Features per rotation subset")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train_cmd->add_option("--sample-fraction", spec.forest.pca_sample_fraction,
                        "Fraction of rows used for each subset PCA")
      ->capture_default_str();
  train_cmd->add_option("--max-depth", max_depth, "Tree depth limit or 'none'")->capture_default_str();
  train_cmd->add_option("--min-leaf", spec.forest.tree.min_leaf, "Minimum rows per leaf")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train_cmd->add_option("--cv-folds", spec.cv_folds, "Cross-validation folds (0 skips)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  train_cmd->add_option("--report", train_report, "Write phase timings as CSV");
  train_cmd->add_option("--table", table_out, "Write the feature table as CSV");

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "Scan a recording stream for alarms");
  std::string model_in;
  std::string stream_dir;
  std::string predict_out;
  ExecutorOptions predict_ex;
  predict_cmd->add_option("--model", model_in, "Model file")->required();
  predict_cmd->add_option("--stream", stream_dir,
                          "Directory written by synth; interictal hours then each event form the stream")
      ->required();
  predict_cmd->add_option("--out", predict_out, "Alarm timeline CSV")->required();
  add_executor_flags(predict_cmd, predict_ex);

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "Compare executors on the same training data");
  std::string bench_data;
  std::string executors_list = "serial,threaded";
  int repeats = 3;
  std::string bench_out;
  ExecutorOptions bench_ex;
  int bench_folds = 0;
  bench_cmd->add_option("--data", bench_data, "Directory written by synth")->required();
  bench_cmd->add_option("--executors", executors_list, "Comma-separated executors")->capture_default_str();
  bench_cmd->add_option("--repeats", repeats, "Runs per executor (median reported)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench_cmd->add_option("--out", bench_out, "CSV output (phase,executor,seconds)")->required();
  bench_cmd->add_option("--workers", bench_ex.workers, "Threads or local worker processes")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench_cmd->add_option("--work-dir", bench_ex.work_dir, "Work directory (default: temporary)");
  bench_cmd->add_option("--cv-folds", bench_folds, "Cross-validation folds per run (0 skips)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();

  // master
  auto* master_cmd = app.add_subcommand("master", "Run the MapReduce master");
  mr::ClusterConfig master_cfg;
  std::string master_dir;
  master_cmd->add_option("--listen", master_cfg.master_address, "HOST:PORT to listen on")->required();
  master_cmd->add_option("--work-dir", master_dir, "Shared work directory")->required();
  master_cmd->add_option("--workers", master_cfg.expected_workers, "Workers to wait for before a job starts")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  master_cmd->add_option("--heartbeat-ms", master_cfg.heartbeat_interval_ms, "Expected heartbeat interval")
      ->capture_default_str();
  master_cmd->add_option("--task-timeout-ms", master_cfg.task_timeout_ms,
                         "Silence after which a worker is declared lost")
      ->capture_default_str();
  master_cmd->add_option("--startup-timeout-ms", master_cfg.startup_timeout_ms,
                         "How long a job waits for workers")
      ->capture_default_str();

  // worker
  auto* worker_cmd = app.add_subcommand("worker", "Run a MapReduce worker");
  mr::WorkerOptions worker_opts;
  std::string worker_dir;
  worker_cmd->add_option("--master", worker_opts.master_address, "Master HOST:PORT")->required();
  worker_cmd->add_option("--work-dir", worker_dir, "Shared work directory")->required();
  worker_cmd->add_option("--heartbeat-ms", worker_opts.heartbeat_interval_ms, "Heartbeat interval")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  worker_cmd->add_option("--startup-timeout-ms", worker_opts.startup_timeout_ms,
                         "How long to keep retrying the master")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  worker_cmd->add_option("--name", worker_opts.name, "Name reported at registration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*synth) {
      save_dataset(synthesize_patient(hours, seizures, synth_seed, profile), synth_out);
      std::printf("wrote %d interictal hours and %d events to %s\n", hours, seizures, synth_out.c_str());
      return 0;
    }

    if (*train_cmd) {
      if (max_depth != "none") spec.forest.tree.max_depth = std::stoi(max_depth);
      spec.forest.validate();
      spec.seed = spec.forest.seed;
      Dataset data = load_dataset(data_dir);
      spec.interictal = std::move(data.interictal);
      spec.events = std::move(data.events);
      Runtime rt(train_ex);
      spec.work_dir = rt.work_dir();
      const TrainResult result = train_pipeline(spec, rt.executor());
      save_model(result.model, model_out);
      if (!table_out.empty()) write_feature_csv(result.table, table_out);
      const std::vector<RunReport> reports{result.report};
      if (!train_report.empty()) write_report_csv(reports, train_report);
      std::printf("rows: %zu (interictal %zu, preictal %zu)\n", result.table.rows(),
                  result.table.count(ClassLabel::interictal), result.table.count(ClassLabel::preictal));
      if (result.report.cv_accuracy) {
        std::printf("%d-fold CV accuracy: %.4f\n", spec.cv_folds, *result.report.cv_accuracy);
      }
      std::fputs(format_report_table(reports).c_str(), stdout);
      return 0;
    }

    if (*predict_cmd) {
      const RotationForestModel model = load_model(model_in);
      const Dataset data = load_dataset(stream_dir);
      const Recording stream = build_test_stream(data.interictal, data.events);
      Runtime rt(predict_ex);
      const TestResult result = test_pipeline(model, stream, rt.executor(), FeatureConfig{},
                                              rt.work_dir(), "predict");
      write_timeline_csv(result.timeline, predict_out);
      print_timeline(result.timeline);
      return 0;
    }

    if (*bench_cmd) {
      Dataset data = load_dataset(bench_data);
      TrainSpec bspec;
      bspec.cv_folds = bench_folds;
      const Recording stream = build_test_stream(data.interictal, data.events);
      bspec.interictal = std::move(data.interictal);
      bspec.events = std::move(data.events);
      std::vector<std::unique_ptr<Runtime>> runtimes;
      std::vector<mr::Executor*> executors;
      std::stringstream list(executors_list);
      for (std::string name; std::getline(list, name, ',');) {
        ExecutorOptions o = bench_ex;
        o.kind = name;
        if (name != "serial" && name != "threaded" && name != "distributed") {
          std::cerr << "seizure bench: unknown executor '" << name << "'\n";
          return 1;
        }
        if (!o.work_dir.empty()) o.work_dir = (fs::path(o.work_dir) / name).string();
        runtimes.push_back(std::make_unique<Runtime>(o));
        executors.push_back(&runtimes.back()->executor());
      }
      std::vector<BenchTarget> targets;
      for (std::size_t i = 0; i < executors.size(); ++i) {
        targets.push_back({executors[i], runtimes[i]->work_dir()});
      }
      const auto reports = benchmark(bspec, stream, targets, repeats);
      write_report_csv(reports, bench_out);
      std::fputs(format_report_table(reports).c_str(), stdout);
      return 0;
    }

    if (*master_cmd) {
      master_cfg.work_dir = fs::absolute(master_dir);
      fs::create_directories(master_cfg.work_dir);
      mr::Master master(master_cfg);
      g_wake_fd = master.wake_fd();
      std::signal(SIGINT, on_stop_signal);
      std::signal(SIGTERM, on_stop_signal);
      std::printf("master listening on port %d\n", master.port());
      std::fflush(stdout);
      master.serve();
      g_wake_fd = -1;
      return 0;
    }

    if (*worker_cmd) {
      worker_opts.work_dir = fs::absolute(worker_dir);
      mr::run_worker(mr::WorkerOptions::with_env_hooks(worker_opts));
      return 0;
    }
  } catch (const ParameterError& e) {
    std::cerr << "seizure: invalid argument: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "seizure: error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
