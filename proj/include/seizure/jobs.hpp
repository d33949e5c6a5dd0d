#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>

#include "seizure/features.hpp"
#include "seizure/mapreduce/job.hpp"
#include "seizure/rotforest.hpp"

namespace seizure {

// Registered function ids.
inline constexpr const char* kSignalMap = "signal.map";
inline constexpr const char* kSignalReduce = "signal.reduce";
inline constexpr const char* kEnsembleMap = "ensemble.map";
inline constexpr const char* kEnsembleReduce = "ensemble.reduce";
inline constexpr const char* kWordCountMap = "wordcount.map";
inline constexpr const char* kWordCountReduce = "wordcount.reduce";

/// Adds the signal, ensemble and word-count jobs. Safe to call repeatedly.
void register_jobs(mr::Registry& registry = mr::Registry::global());

/// Binary chunk file ("SZCHUNK1"). `ordinal` fixes the chunk's position in
/// the job output independently of its index inside its source recording.
std::string encode_chunk(const SegmentMatrix& chunk, std::size_t ordinal);
SegmentMatrix decode_chunk(std::string_view bytes, std::size_t* ordinal = nullptr);

/// Writes one split file per chunk under splits/<job_id>/ and returns the job.
/// Output keys are <ordinal>/<phase>/<chunk_index>, so key order is input order.
mr::Job make_signal_job(const std::string& job_id, const std::filesystem::path& work_dir,
                        std::span<const SegmentMatrix> chunks, const FeatureConfig& config);
/// Concatenates the reduce output back into one table.
FeatureTable signal_job_table(const mr::Records& output);

/// Saves `table` into the work directory and splits the L members into
/// `map_tasks` contiguous index ranges.
mr::Job make_ensemble_job(const std::string& job_id, const std::filesystem::path& work_dir,
                          const FeatureTable& table, const RotationForestConfig& config,
                          std::size_t map_tasks);
RotationForestModel ensemble_job_model(const mr::Records& output);

/// One split file per text.
mr::Job make_wordcount_job(const std::string& job_id, const std::filesystem::path& work_dir,
                           std::span<const std::string> texts);

}  // namespace seizure
