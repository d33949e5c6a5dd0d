#include "seizure/mapreduce/local_cluster.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>

#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include "seizure/error.hpp"

extern char** environ;

namespace seizure::mr {

namespace fs = std::filesystem;

namespace {

pid_t spawn(const fs::path& exe, const std::vector<std::string>& args,
            const std::map<std::string, std::string>& extra_env) {
  std::vector<std::string> env_store;
  for (char** e = environ; *e != nullptr; ++e) {
    const std::string entry(*e);
    const auto key = entry.substr(0, entry.find('='));
    if (!extra_env.contains(key)) env_store.push_back(entry);
  }
  for (const auto& [k, v] : extra_env) env_store.push_back(k + "=" + v);

  std::vector<char*> argv;
  std::string exe_str = exe.string();
  argv.push_back(exe_str.data());
  std::vector<std::string> arg_store = args;
  for (auto& a : arg_store) argv.push_back(a.data());
  argv.push_back(nullptr);
  std::vector<char*> envp;
  for (auto& e : env_store) envp.push_back(e.data());
  envp.push_back(nullptr);

  pid_t pid = 0;
  const int rc = ::posix_spawn(&pid, exe_str.c_str(), nullptr, nullptr, argv.data(), envp.data());
  if (rc != 0) throw Error("cannot spawn " + exe_str + ": " + std::strerror(rc));
  return pid;
}

}  // namespace

LocalCluster::LocalCluster(LocalClusterOptions options) : options_(std::move(options)) {
  if (options_.workers < 1) throw ParameterError("a local cluster needs at least one worker");
  if (options_.work_dir.empty()) throw ParameterError("a local cluster needs a work directory");
  fs::create_directories(options_.work_dir);
  const fs::path exe =
      options_.executable.empty() ? fs::read_symlink("/proc/self/exe") : options_.executable;

  config_.master_address = "127.0.0.1:0";
  config_.expected_workers = options_.workers;
  config_.heartbeat_interval_ms = options_.heartbeat_interval_ms;
  config_.task_timeout_ms = options_.task_timeout_ms;
  config_.startup_timeout_ms = options_.startup_timeout_ms;
  config_.work_dir = options_.work_dir;
  master_ = std::make_unique<Master>(config_);
  config_.master_address = "127.0.0.1:" + std::to_string(master_->port());
  thread_ = std::jthread([m = master_.get()] { m->serve(); });

  for (int i = 0; i < options_.workers; ++i) {
    const auto env = options_.worker_env.contains(i) ? options_.worker_env.at(i)
                                                     : std::map<std::string, std::string>{};
    pids_.push_back(spawn(exe,
                          {"worker", "--master", config_.master_address, "--work-dir",
                           options_.work_dir.string(), "--heartbeat-ms",
                           std::to_string(options_.heartbeat_interval_ms), "--startup-timeout-ms",
                           std::to_string(options_.startup_timeout_ms), "--name",
                           "local-" + std::to_string(i)},
                          env));
  }
}

void LocalCluster::kill_worker(std::size_t index) {
  if (index >= pids_.size() || pids_[index] <= 0) return;
  ::kill(pids_[index], SIGKILL);
  ::waitpid(pids_[index], nullptr, 0);
  pids_[index] = -1;
}

LocalCluster::~LocalCluster() {
  master_->request_stop();
  if (thread_.joinable()) thread_.join();
  // Workers exit on SHUTDOWN; anything still alive after a grace period is killed.
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(2);
  for (pid_t& pid : pids_) {
    if (pid <= 0) continue;
    while (true) {
      const pid_t r = ::waitpid(pid, nullptr, WNOHANG);
      if (r == pid || (r < 0 && errno != EINTR)) break;
      if (std::chrono::steady_clock::now() >= deadline) {
        ::kill(pid, SIGKILL);
        ::waitpid(pid, nullptr, 0);
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    pid = -1;
  }
}

}  // namespace seizure::mr
