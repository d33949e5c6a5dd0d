#include <chrono>
#include <system_error>

#include "seizure/bytes.hpp"
#include "seizure/error.hpp"
#include "seizure/mapreduce/executor.hpp"
#include "seizure/mapreduce/protocol.hpp"
#include "seizure/mapreduce/worker.hpp"

namespace seizure::mr {

namespace fs = std::filesystem;

Records run_distributed(const Job& job, const ClusterConfig& cluster) {
  cluster.validate();
  if (cluster.work_dir.empty()) throw ParameterError("distributed execution needs a work directory");
  if (!job.work_dir.empty()) {
    std::error_code ec;
    if (!fs::equivalent(job.work_dir, cluster.work_dir, ec)) {
      throw ParameterError("job work directory " + job.work_dir.string() +
                           " differs from the cluster work directory " + cluster.work_dir.string());
    }
  }
  job.validate(Registry::global());

  const fs::path job_path = job_file_path(job.job_id);
  fs::create_directories((cluster.work_dir / job_path).parent_path());
  write_file_atomic(cluster.work_dir / job_path, encode_job(job));

  const auto deadline =
      std::chrono::steady_clock::now() + std::chrono::milliseconds(cluster.startup_timeout_ms);
  Socket sock = Socket::connect_until(parse_host_port(cluster.master_address), deadline);
  if (!sock.send({MessageType::Submit, job.job_id, 0, job_path.generic_string()})) {
    throw JobError("job " + job.job_id + ": master closed the connection");
  }
  while (auto line = sock.read_line()) {
    const Message msg = parse_message(*line);
    if (msg.type == MessageType::Done) {
      return decode_records(read_file(cluster.work_dir / msg.payload_path));
    }
    if (msg.type == MessageType::Failed) {
      if (msg.payload_path.starts_with("startup:")) {
        throw StartupError("job " + job.job_id + ": " + msg.payload_path);
      }
      throw JobError("job " + job.job_id + ": " + msg.payload_path);
    }
  }
  throw JobError("job " + job.job_id + ": master closed the connection");
}

}  // namespace seizure::mr
