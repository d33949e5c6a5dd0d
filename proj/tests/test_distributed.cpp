#include <chrono>
#include <future>
#include <thread>

#include <gtest/gtest.h>

#include "seizure/error.hpp"
#include "seizure/jobs.hpp"
#include "seizure/mapreduce/executor.hpp"
#include "seizure/mapreduce/local_cluster.hpp"
#include "seizure/mapreduce/master.hpp"
#include "seizure/mapreduce/protocol.hpp"
#include "seizure/mapreduce/worker.hpp"
#include "test_util.hpp"

using namespace seizure;
using namespace seizure::mr;
using namespace std::chrono_literals;

namespace {

class DistributedTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { register_jobs(); }

  LocalClusterOptions options(int workers) const {
    LocalClusterOptions o;
    o.workers = workers;
    o.work_dir = dir_.path();
    o.executable = SEIZURE_CLI_PATH;
    return o;
  }

  std::vector<SegmentMatrix> chunks(std::size_t n) const {
    std::vector<SegmentMatrix> out;
    for (std::size_t i = 0; i < n; ++i) {
      SegmentMatrix m;
      m.channel_count = 3;
      m.chunk_index = i;
      m.source_phase = i % 2 ? Phase::preictal : Phase::interictal;
      m.values = testutil::random_matrix(kSegmentLength, 3 * kSegmentsPerChunk, 100 + i);
      out.push_back(std::move(m));
    }
    return out;
  }

  testutil::TempDir dir_{"dist"};
};

bool wait_for(const std::function<bool()>& cond, std::chrono::milliseconds limit = 5000ms) {
  const auto deadline = std::chrono::steady_clock::now() + limit;
  while (std::chrono::steady_clock::now() < deadline) {
    if (cond()) return true;
    std::this_thread::sleep_for(10ms);
  }
  return cond();
}

Message next_message(Socket& s) {
  auto line = s.read_line();
  if (!line) throw Error("connection closed");
  return parse_message(*line);
}

}  // namespace

TEST_F(DistributedTest, MatchesSerialForEveryJob) {
  const std::vector<std::string> texts{"a b a", "c a", "b b d"};
  const Job wc = make_wordcount_job("wc", dir_.path(), texts);
  const auto sig_chunks = chunks(3);
  const Job sig = make_signal_job("sig", dir_.path(), sig_chunks, FeatureConfig{});
  RotationForestConfig cfg;
  cfg.ensemble_size = 10;
  const Job ens = make_ensemble_job("ens", dir_.path(), testutil::two_gaussians(3), cfg, 4);
  const Records wc_ref = run_serial(wc);
  const Records sig_ref = run_serial(sig);
  const Records ens_ref = run_serial(ens);

  for (int workers : {2, 4}) {
    LocalCluster cluster(options(workers));
    EXPECT_EQ(run_distributed(wc, cluster.config()), wc_ref) << workers;
    EXPECT_EQ(run_distributed(sig, cluster.config()), sig_ref) << workers;
    EXPECT_EQ(run_distributed(ens, cluster.config()), ens_ref) << workers;
    EXPECT_EQ(cluster.stats().jobs_completed, 3);
    EXPECT_EQ(cluster.stats().workers_registered, workers);
  }
}

TEST_F(DistributedTest, ExecutorInterface) {
  LocalCluster cluster(options(3));
  DistributedExecutor exec(cluster.config());
  EXPECT_EQ(exec.name(), "distributed");
  EXPECT_EQ(exec.parallelism(), 3u);
  const std::vector<std::string> texts{"x y", "y"};
  const Job wc = make_wordcount_job("wc", dir_.path(), texts);
  EXPECT_EQ(exec.run(wc), (Records{{"x", "1"}, {"y", "2"}}));
}

TEST_F(DistributedTest, SurvivesAWorkerExitingMidJob) {
  auto o = options(3);
  o.worker_env[0] = {{"SEIZURE_WORKER_EXIT_AFTER", "1"}};
  const auto in = chunks(6);
  const Job sig = make_signal_job("sig", dir_.path(), in, FeatureConfig{});
  const Records ref = run_serial(sig);
  LocalCluster cluster(o);
  EXPECT_EQ(run_distributed(sig, cluster.config()), ref);
  const MasterStats s = cluster.stats();
  EXPECT_GE(s.workers_lost, 1);
  EXPECT_GE(s.tasks_requeued, 1);
  for (const auto& [task, count] : s.accepted) EXPECT_EQ(count, 1) << task;
}

TEST_F(DistributedTest, SurvivesAHungWorker) {
  auto o = options(2);
  o.worker_env[1] = {{"SEIZURE_WORKER_HANG_AFTER", "1"}};
  const std::vector<std::string> texts{"a", "b", "c", "d", "e", "f"};
  const Job wc = make_wordcount_job("wc", dir_.path(), texts);
  LocalCluster cluster(o);
  EXPECT_EQ(run_distributed(wc, cluster.config()), run_serial(wc));
  EXPECT_GE(cluster.stats().workers_lost, 1);
}

TEST_F(DistributedTest, SurvivesAKilledWorker) {
  const auto in = chunks(8);
  const Job sig = make_signal_job("sig", dir_.path(), in, FeatureConfig{});
  const Records ref = run_serial(sig);
  LocalCluster cluster(options(3));
  auto result = std::async(std::launch::async, [&] { return run_distributed(sig, cluster.config()); });
  std::this_thread::sleep_for(300ms);
  cluster.kill_worker(1);
  EXPECT_EQ(result.get(), ref);
}

TEST_F(DistributedTest, LateResultFromTimedOutWorkerIsStale) {
  ClusterConfig cfg;
  cfg.master_address = "127.0.0.1:0";
  cfg.expected_workers = 1;
  cfg.heartbeat_interval_ms = 100;
  cfg.task_timeout_ms = 400;
  cfg.startup_timeout_ms = 10000;
  cfg.work_dir = dir_.path();
  Master master(cfg);
  std::jthread serving([&] { master.serve(); });
  cfg.master_address = "127.0.0.1:" + std::to_string(master.port());
  const HostPort at{"127.0.0.1", master.port()};

  Socket a = Socket::connect(at);
  ASSERT_TRUE(a.send({MessageType::Register, "-", 0, "fake-a"}));
  const std::vector<std::string> texts{"p q p"};
  const Job wc = make_wordcount_job("wc", dir_.path(), texts);
  auto result = std::async(std::launch::async, [&] { return run_distributed(wc, cfg); });

  const Message first = next_message(a);
  ASSERT_EQ(first.type, MessageType::Assign);
  EXPECT_EQ(first.task_id, "m00000");
  EXPECT_EQ(first.attempt, 1);
  // A goes silent until the master gives up on it.
  ASSERT_TRUE(wait_for([&] { return master.stats().workers_lost == 1; }));
  EXPECT_EQ(master.stats().tasks_requeued, 1);

  Socket b = Socket::connect(at);
  ASSERT_TRUE(b.send({MessageType::Register, "-", 0, "fake-b"}));
  const Message retry = next_message(b);
  ASSERT_EQ(retry.type, MessageType::Assign);
  EXPECT_EQ(retry.task_id, "m00000");
  EXPECT_EQ(retry.attempt, 2);
  ASSERT_TRUE(b.send({MessageType::Result, retry.task_id, retry.attempt,
                      execute_task(dir_.path(), retry.payload_path)}));

  // A finally finishes its copy and reports it.
  ASSERT_TRUE(a.send({MessageType::Result, first.task_id, first.attempt,
                      execute_task(dir_.path(), first.payload_path)}));

  const Message reduce = next_message(b);
  ASSERT_EQ(reduce.type, MessageType::Assign);
  EXPECT_EQ(reduce.task_id, "r00000");
  ASSERT_TRUE(b.send({MessageType::Result, reduce.task_id, reduce.attempt,
                      execute_task(dir_.path(), reduce.payload_path)}));

  EXPECT_EQ(result.get(), (Records{{"p", "2"}, {"q", "1"}}));
  ASSERT_TRUE(wait_for([&] { return master.stats().results_stale >= 1; }));
  const MasterStats s = master.stats();
  EXPECT_EQ(s.accepted.at("wc/m00000"), 1);
  EXPECT_EQ(s.accepted.at("wc/r00000"), 1);
  EXPECT_EQ(s.jobs_completed, 1);
  master.request_stop();
  EXPECT_EQ(next_message(b).type, MessageType::Shutdown);
}

TEST_F(DistributedTest, NoWorkersIsAStartupError) {
  ClusterConfig cfg;
  cfg.master_address = "127.0.0.1:0";
  cfg.heartbeat_interval_ms = 50;
  cfg.task_timeout_ms = 200;
  cfg.startup_timeout_ms = 300;
  cfg.work_dir = dir_.path();
  Master master(cfg);
  std::jthread serving([&] { master.serve(); });
  cfg.master_address = "127.0.0.1:" + std::to_string(master.port());
  const std::vector<std::string> texts{"a"};
  const Job wc = make_wordcount_job("wc", dir_.path(), texts);
  EXPECT_THROW(run_distributed(wc, cfg), StartupError);
  master.request_stop();
}

TEST_F(DistributedTest, NoMasterIsAStartupError) {
  ClusterConfig cfg;
  cfg.master_address = "127.0.0.1:1";
  cfg.startup_timeout_ms = 300;
  cfg.work_dir = dir_.path();
  const std::vector<std::string> texts{"a"};
  EXPECT_THROW(run_distributed(make_wordcount_job("wc", dir_.path(), texts), cfg), StartupError);
}

TEST_F(DistributedTest, RepeatedTaskFailureFailsTheJob) {
  const std::vector<std::string> texts{"a", "b"};
  Job wc = make_wordcount_job("wc", dir_.path(), texts);
  std::filesystem::remove(dir_.path() / wc.input_splits[1]);
  LocalCluster cluster(options(2));
  try {
    run_distributed(wc, cluster.config());
    FAIL() << "expected JobError";
  } catch (const JobError& e) {
    EXPECT_NE(std::string(e.what()).find(wc.input_splits[1]), std::string::npos) << e.what();
  }
  EXPECT_EQ(cluster.stats().task_failures, 3);
  EXPECT_EQ(cluster.stats().jobs_failed, 1);
  // The cluster stays usable.
  const std::vector<std::string> ok{"z"};
  EXPECT_EQ(run_distributed(make_wordcount_job("wc2", dir_.path(), ok), cluster.config()), (Records{{"z", "1"}}));
}

TEST_F(DistributedTest, WorkDirMustMatchTheCluster) {
  ClusterConfig cfg;
  cfg.work_dir = dir_.path();
  const std::vector<std::string> texts{"a"};
  testutil::TempDir other("other");
  const Job wc = make_wordcount_job("wc", other.path(), texts);
  EXPECT_THROW(run_distributed(wc, cfg), ParameterError);
}
