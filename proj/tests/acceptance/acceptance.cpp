// Acceptance run: one PASS/FAIL/SKIP line per criterion.
//
//   acceptance [--only N] [--skip N]...
//
// Exit status is 1 if anything failed, 77 if everything selected was
// skipped, 0 otherwise.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <future>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "pca_oracle.hpp"
#include "seizure/alarm.hpp"
#include "seizure/error.hpp"
#include "seizure/jobs.hpp"
#include "seizure/mapreduce/executor.hpp"
#include "seizure/mapreduce/local_cluster.hpp"
#include "seizure/mspca.hpp"
#include "seizure/pipeline.hpp"
#include "seizure/rotforest.hpp"
#include "seizure/wavelet.hpp"
#include "test_util.hpp"

using namespace seizure;
using Clock = std::chrono::steady_clock;

namespace {

enum class Status { pass, fail, skip };

struct Outcome {
  Status status = Status::fail;
  std::string detail;
};

Outcome verdict(bool ok, std::string detail) { return {ok ? Status::pass : Status::fail, std::move(detail)}; }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double rel_error(const std::vector<double>& a, std::span<const double> b) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num / den);
}

double leaf_energy(const std::vector<std::vector<double>>& parts) {
  double e = 0.0;
  for (const auto& p : parts) e += testutil::energy(p);
  return e;
}

Outcome wavelet_round_trip() {
  const auto t0 = Clock::now();
  double worst_rt = 0.0;
  double worst_energy = 0.0;
  for (const FilterPair& f : {FilterPair::haar(), FilterPair::db4()}) {
    for (std::uint64_t s = 0; s < 100; ++s) {
      const std::vector<double> x = testutil::random_signal(2048, 1000 + s);
      const double ex = testutil::energy(x);
      for (int level = 1; level <= 4; ++level) {
        const DwtDecomposition d = dwt(x, f, level);
        worst_rt = std::max(worst_rt, rel_error(idwt(d, f), x));
        const double ed = leaf_energy(d.details) + testutil::energy(d.approximation);
        worst_energy = std::max(worst_energy, std::abs(ed - ex) / ex);

        const WpdTree w = wpd(x, f, level);
        worst_rt = std::max(worst_rt, rel_error(iwpd(w, f), x));
        worst_energy = std::max(worst_energy, std::abs(leaf_energy(w.leaves) - ex) / ex);
      }
    }
  }
  const double t = seconds_since(t0);
  return verdict(worst_rt < 1e-8 && worst_energy < 1e-8 && t < 5.0,
                 "round trip " + fmt("%.2e", worst_rt) + ", energy " + fmt("%.2e", worst_energy) + ", " +
                     fmt("%.2f", t) + " s");
}

Outcome wpd_structure() {
  const std::vector<double> x = testutil::random_signal(2048, 7);
  std::string counts;
  bool ok = true;
  for (int k = 1; k <= 6; ++k) {
    const WpdTree w = wpd(x, FilterPair::db4(), k);
    const std::size_t expected = std::size_t{1} << k;
    ok = ok && w.leaves.size() == expected;
    for (const auto& leaf : w.leaves) ok = ok && leaf.size() == 2048 / expected;
    counts += (k > 1 ? "," : "") + std::to_string(w.leaves.size());
  }
  return verdict(ok, "leaves " + counts);
}

double oracle_gap(const Eigen::MatrixXd& x) {
  const testutil::OracleEigen o = testutil::oracle_pca(x);
  const PcaModel m = fit_pca(x);
  if (o.values.size() != static_cast<std::size_t>(x.cols()) || m.retained() != o.values.size()) return INFINITY;
  double gap = 0.0;
  for (std::size_t k = 0; k < o.values.size(); ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    gap = std::max(gap, std::abs(m.eigenvalues(kk) - o.values[k]));
    for (std::size_t i = 0; i < o.vectors[k].size(); ++i) {
      gap = std::max(gap, std::abs(m.loadings(static_cast<Eigen::Index>(i), kk) - o.vectors[k][i]));
    }
  }
  return gap;
}

Outcome pca_correctness() {
  Eigen::MatrixXd a(5, 3);
  a << 2.0, 0.5, -1.0,
       1.0, 1.5, 0.25,
       -0.5, 2.0, 3.0,
       4.0, -1.0, 0.5,
       0.0, 0.75, -2.0;
  Eigen::MatrixXd b(8, 4);
  b << 1.2, -0.4, 3.1, 0.0,
       0.7, 2.2, -1.5, 1.1,
       -2.3, 0.9, 0.4, 2.6,
       3.3, -1.8, 1.0, -0.7,
       0.1, 0.5, -2.2, 1.9,
       -1.1, 3.0, 0.8, -2.4,
       2.5, 1.4, -0.3, 0.6,
       -0.6, -2.7, 2.0, 1.3;
  const double gap = std::max(oracle_gap(a), oracle_gap(b));

  Rng shape_rng(77);
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const auto n = static_cast<Eigen::Index>(2 + uniform_index(shape_rng, 40));
    const auto p = static_cast<Eigen::Index>(1 + uniform_index(shape_rng, 10));
    const PcaModel m = fit_pca(testutil::random_matrix(n, p, s));
    const Eigen::MatrixXd gram = m.loadings.transpose() * m.loadings;
    worst = std::max(worst, (gram - Eigen::MatrixXd::Identity(p, p)).cwiseAbs().maxCoeff());
  }
  return verdict(gap < 1e-8 && worst < 1e-8,
                 "oracle gap " + fmt("%.2e", gap) + ", orthonormality " + fmt("%.2e", worst));
}

Outcome mspca_quality() {
  const auto t0 = Clock::now();
  const auto probe = testutil::noisy_rank_one(99);
  const Eigen::MatrixXd kept = mspca_denoise(probe.noisy, FilterPair::db4(), 4, retain_all_components);
  const double identity_err = (kept - probe.noisy).cwiseAbs().maxCoeff();
  double gain = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto bench = testutil::noisy_rank_one(s);
    const Eigen::MatrixXd y = mspca_denoise(bench.noisy, FilterPair::db4(), 4);
    gain += testutil::snr_db(bench.clean, y) - testutil::snr_db(bench.clean, bench.noisy);
  }
  gain /= 20.0;
  const double t = seconds_since(t0);
  return verdict(identity_err < 1e-6 && gain >= 3.0 && t < 30.0,
                 "retain-all " + fmt("%.2e", identity_err) + ", SNR gain " + fmt("%.2f", gain) + " dB, " +
                     fmt("%.2f", t) + " s");
}

Outcome rotation_forest() {
  double worst = 0.0;
  bool deterministic = true;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const FeatureTable table = testutil::two_gaussians(seed);
    RotationForestConfig cfg;
    cfg.seed = seed;
    const std::string ref = serialize_model(train(table, cfg, 1));
    for (std::size_t threads : {2u, 4u, 8u}) {
      const RotationForestModel m = train(table, cfg, threads);
      deterministic = deterministic && serialize_model(m) == ref;
      for (const auto& member : m.members()) {
        const auto p = member.rotation.cols();
        worst = std::max(worst, (member.rotation.transpose() * member.rotation -
                                 Eigen::MatrixXd::Identity(p, p)).cwiseAbs().maxCoeff());
      }
    }
  }
  double ensemble = 0.0;
  double single = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const FeatureTable table = testutil::two_gaussians(seed);
    RotationForestConfig cfg;
    cfg.seed = seed;
    ensemble += cross_validate(table, cfg, 10).mean_accuracy / 5.0;
    cfg.ensemble_size = 1;
    single += cross_validate(table, cfg, 10).mean_accuracy / 5.0;
  }
  return verdict(worst < 1e-8 && deterministic && ensemble >= single,
                 "orthonormality " + fmt("%.2e", worst) + (deterministic ? ", deterministic" : ", NOT deterministic") +
                     ", CV L=10 " + fmt("%.4f", ensemble) + " vs L=1 " + fmt("%.4f", single));
}

std::vector<SegmentMatrix> random_chunks(std::size_t n, std::uint64_t seed) {
  std::vector<SegmentMatrix> out;
  for (std::size_t i = 0; i < n; ++i) {
    SegmentMatrix m;
    m.channel_count = 3;
    m.chunk_index = i;
    m.source_phase = i % 2 ? Phase::preictal : Phase::interictal;
    m.values = testutil::random_matrix(kSegmentLength, 3 * kSegmentsPerChunk, seed + i);
    out.push_back(std::move(m));
  }
  return out;
}

Outcome mapreduce_equivalence() {
  const auto t0 = Clock::now();
  testutil::TempDir dir("acceptance-mr");
  const std::vector<std::string> texts{"a b a", "c a d", "b b d", "e"};
  const auto chunks = random_chunks(4, 500);
  RotationForestConfig cfg;
  const std::vector<mr::Job> jobs{
      make_wordcount_job("wc", dir.path(), texts),
      make_signal_job("sig", dir.path(), chunks, FeatureConfig{}),
      make_ensemble_job("ens", dir.path(), testutil::two_gaussians(4), cfg, 4),
  };
  std::vector<mr::Records> refs;
  for (const auto& j : jobs) refs.push_back(mr::run_serial(j));

  std::vector<std::string> mismatches;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    for (std::size_t w : {1u, 2u, 4u, 8u}) {
      if (mr::run_threaded(jobs[j], w) != refs[j]) mismatches.push_back(jobs[j].job_id + "/threaded" + std::to_string(w));
    }
  }
  for (int workers = 2; workers <= 4; ++workers) {
    mr::LocalClusterOptions o;
    o.workers = workers;
    o.work_dir = dir.path();
    o.executable = SEIZURE_CLI_PATH;
    mr::LocalCluster cluster(o);
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      if (mr::run_distributed(jobs[j], cluster.config()) != refs[j]) {
        mismatches.push_back(jobs[j].job_id + "/distributed" + std::to_string(workers));
      }
    }
  }

  // One worker killed while the signal job is running.
  const auto more = random_chunks(8, 900);
  const mr::Job sig = make_signal_job("sig-kill", dir.path(), more, FeatureConfig{});
  const mr::Records ref = mr::run_serial(sig);
  mr::LocalClusterOptions o;
  o.workers = 3;
  o.work_dir = dir.path();
  o.executable = SEIZURE_CLI_PATH;
  mr::LocalCluster cluster(o);
  auto running = std::async(std::launch::async, [&] { return mr::run_distributed(sig, cluster.config()); });
  std::this_thread::sleep_for(std::chrono::milliseconds(300));
  cluster.kill_worker(1);
  if (running.get() != ref) mismatches.push_back("sig/killed-worker");
  const int lost = cluster.stats().workers_lost;

  const double t = seconds_since(t0);
  std::string detail = mismatches.empty() ? "all outputs identical" : "mismatch:";
  for (const auto& m : mismatches) detail += " " + m;
  detail += ", workers lost " + std::to_string(lost) + ", " + fmt("%.1f", t) + " s";
  return verdict(mismatches.empty() && t < 60.0, detail);
}

Outcome speedup() {
  const unsigned cores = std::thread::hardware_concurrency();
  if (cores < 4) {
    return {Status::skip, "host reports " + std::to_string(cores) + " core(s); needs at least 4"};
  }
  testutil::TempDir dir("acceptance-speedup");
  const auto chunks = random_chunks(64, 2000);
  const mr::Job job = make_signal_job("speed", dir.path(), chunks, FeatureConfig{});
  auto median_of_5 = [&](const std::function<mr::Records()>& run) {
    std::vector<double> t;
    for (int i = 0; i < 5; ++i) {
      const auto t0 = Clock::now();
      run();
      t.push_back(seconds_since(t0));
    }
    std::sort(t.begin(), t.end());
    return t[2];
  };
  const double serial = median_of_5([&] { return mr::run_serial(job); });
  const double threaded = median_of_5([&] { return mr::run_threaded(job, 4); });
  const double ratio = threaded / serial;
  return verdict(ratio <= 0.6, "serial " + fmt("%.2f", serial) + " s, threaded(4) " + fmt("%.2f", threaded) +
                                   " s, ratio " + fmt("%.3f", ratio));
}

Outcome alarm_end_to_end() {
  const auto t0 = Clock::now();
  testutil::TempDir dir("acceptance-e2e");
  const unsigned cores = std::max(1u, std::thread::hardware_concurrency());
  mr::ThreadedExecutor exec(cores);
  int good = 0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Dataset train_data = synthesize_patient(4, 2, seed);
    const Dataset test_data = synthesize_patient(2, 1, 1000 + seed);
    TrainSpec spec;
    spec.interictal = train_data.interictal;
    spec.events = train_data.events;
    // All four training hours, rather than one 10-minute window from each.
    spec.interictal_minutes = 60.0;
    spec.cv_folds = 0;
    spec.seed = seed;
    spec.forest.seed = seed;
    spec.work_dir = dir.path();
    spec.job_prefix = "train" + std::to_string(seed);
    const TrainResult trained = train_pipeline(spec, exec);
    const Recording stream = build_test_stream(test_data.interictal, test_data.events);
    const TestResult result = test_pipeline(trained.model, stream, exec, spec.features, dir.path(),
                                            "test" + std::to_string(seed));
    // Two signature-free hours are the first 15 whole chunks.
    const std::size_t clean_chunks = static_cast<std::size_t>(2 * 60 / 8);
    const auto& alarms = result.timeline.alarms;
    const bool quiet = std::none_of(alarms.begin(), alarms.end(), [&](std::size_t a) { return a < clean_chunks; });
    const auto lead = result.timeline.lead_time_min();
    const bool ok = quiet && lead && *lead >= 24.0;
    good += ok ? 1 : 0;
    detail += " s" + std::to_string(seed) + "=" + (lead ? fmt("%.0f", *lead) : std::string("none")) +
              (quiet ? "" : "(false alarm)");
  }
  const double t = seconds_since(t0);
  return verdict(good >= 4 && t < 180.0,
                 std::to_string(good) + "/5 seeds; lead min:" + detail + ", " + fmt("%.1f", t) + " s");
}

Outcome alarm_rule() {
  const ClassLabel I = ClassLabel::interictal;
  const ClassLabel P = ClassLabel::preictal;
  auto with = [](std::size_t preictal) {
    std::vector<ClassLabel> v(kSegmentsPerChunk, ClassLabel::interictal);
    std::fill_n(v.begin(), preictal, ClassLabel::preictal);
    return v;
  };
  bool ok = classify_chunk(with(31)).chunk_label == P && classify_chunk(with(30)).chunk_label == I &&
            classify_chunk(with(0)).chunk_label == I;
  try {
    classify_chunk(std::vector<ClassLabel>(59, P));
    ok = false;
  } catch (const ShapeError&) {
  }
  ok = ok && alarm_scan(std::vector<ClassLabel>{I, I, P, P, P}) == std::vector<std::size_t>{4};
  ok = ok && alarm_scan(std::vector<ClassLabel>{P, I, P, I, P}).empty();
  ok = ok && alarm_scan(std::vector<ClassLabel>{P, P, P, P}) == std::vector<std::size_t>{2};
  return verdict(ok, "classify 31/30/0 of 60, scan [IIPPP] [PIPIP] [PPPP]");
}

Outcome serialization() {
  testutil::TempDir dir("acceptance-model");
  RotationForestConfig cfg;
  cfg.seed = 3;
  const RotationForestModel m = train(testutil::two_gaussians(3), cfg);
  save_model(m, dir / "m.model");
  const RotationForestModel back = load_model(dir / "m.model");
  Rng rng(11);
  std::vector<double> x(m.feature_count());
  int differing = 0;
  for (int i = 0; i < 1000; ++i) {
    for (auto& v : x) v = 3.0 * standard_normal(rng);
    const Prediction a = predict(m, x);
    const Prediction b = predict(back, x);
    if (a.label != b.label || std::memcmp(&a.confidence, &b.confidence, sizeof(double)) != 0 ||
        std::memcmp(a.distribution.data(), b.distribution.data(), sizeof(ClassDistribution)) != 0) {
      ++differing;
    }
  }

  const std::string text = serialize_model(m);
  int clean = 0;
  int cases = 0;
  auto rejects = [&](std::string_view bad) {
    ++cases;
    try {
      parse_model(bad);
    } catch (const FormatError&) {
      ++clean;
    }
  };
  rejects("");
  rejects("not a model\n");
  rejects(std::string_view(text).substr(0, text.size() / 2));
  rejects(std::string_view(text).substr(0, text.size() - 1));
  rejects(text + "trailing\n");
  std::string newer = text;
  newer.replace(0, std::strlen("rotforest 1"), "rotforest 9");
  rejects(newer);
  return verdict(differing == 0 && clean == cases, std::to_string(differing) + " of 1000 predictions differ, " +
                                                       std::to_string(clean) + "/" + std::to_string(cases) +
                                                       " corrupt inputs rejected");
}

struct Criterion {
  int id;
  const char* name;
  Outcome (*run)();
};

const Criterion kCriteria[] = {
    {1, "wavelet round trip and energy", wavelet_round_trip},
    {2, "packet tree structure", wpd_structure},
    {3, "PCA against brute-force oracle", pca_correctness},
    {4, "MSPCA identity and denoising", mspca_quality},
    {5, "rotation forest", rotation_forest},
    {6, "MapReduce equivalence", mapreduce_equivalence},
    {7, "threaded speedup", speedup},
    {8, "end-to-end alarms", alarm_end_to_end},
    {9, "alarm unit rule", alarm_rule},
    {10, "model serialization", serialization},
};

}  // namespace

int main(int argc, char** argv) {
  std::set<int> skip;
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if ((arg == "--skip" || arg == "--only") && i + 1 < argc) {
      (arg == "--skip" ? skip : only).insert(std::atoi(argv[++i]));
    } else {
      std::fprintf(stderr, "usage: acceptance [--only N] [--skip N]...\n");
      return 2;
    }
  }
  register_jobs();

  int failed = 0;
  int passed = 0;
  for (const Criterion& c : kCriteria) {
    if (skip.count(c.id) || (!only.empty() && !only.count(c.id))) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {Status::fail, std::string("exception: ") + e.what()};
    }
    const char* tag = o.status == Status::pass ? "PASS" : o.status == Status::fail ? "FAIL" : "SKIP";
    std::printf("%s  %2d  %-32s %s\n", tag, c.id, c.name, o.detail.c_str());
    std::fflush(stdout);
    failed += o.status == Status::fail;
    passed += o.status == Status::pass;
  }
  if (failed > 0) return 1;
  return passed == 0 ? 77 : 0;
}
