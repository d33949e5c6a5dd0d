#include "seizure/rotforest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "seizure/error.hpp"
#include "seizure/mspca.hpp"
#include "seizure/thread_pool.hpp"

namespace seizure {

void RotationForestConfig::validate() const {
  if (ensemble_size < 1) throw ParameterError("ensemble_size must be at least 1");
  if (features_per_subset < 1) throw ParameterError("features_per_subset must be at least 1");
  if (!(pca_sample_fraction > 0.0 && pca_sample_fraction <= 1.0)) {
    throw ParameterError("pca_sample_fraction must lie in (0, 1]");
  }
  if (tree.min_leaf < 1) throw ParameterError("min_leaf must be at least 1");
  if (tree.max_depth && *tree.max_depth < 0) throw ParameterError("max_depth must be >= 0");
}

RotationForestModel::RotationForestModel(RotationForestConfig config,
                                         std::vector<std::string> feature_names,
                                         std::vector<RotationMember> members)
    : config_(config), feature_names_(std::move(feature_names)), members_(std::move(members)) {
  const auto p = static_cast<Eigen::Index>(feature_names_.size());
  for (const auto& m : members_) {
    if (m.rotation.rows() != p || m.rotation.cols() != p) {
      throw ShapeError("member rotation is not " + std::to_string(p) + "x" + std::to_string(p));
    }
  }
}

Rng tree_rng(std::uint64_t seed, std::size_t tree_index) {
  return derive_rng(seed, 0x726f7466, tree_index);
}

Eigen::MatrixXd build_rotation(const FeatureTable& table, const RotationForestConfig& config,
                               Rng& rng) {
  config.validate();
  const std::size_t p = table.feature_count();
  if (p < 1) throw ParameterError("rotation needs at least one feature");
  if (table.rows() < 2) throw ParameterError("rotation needs at least two rows");
  const auto m = static_cast<std::size_t>(config.features_per_subset);

  std::vector<std::size_t> order(p);
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle(std::span<std::size_t>(order), rng);

  std::vector<ClassLabel> present;
  for (ClassLabel c : {ClassLabel::interictal, ClassLabel::preictal}) {
    if (table.count(c) > 0) present.push_back(c);
  }

  Eigen::MatrixXd rotation = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  const std::size_t subsets = (p + m - 1) / m;
  for (std::size_t k = 0; k < subsets; ++k) {
    const std::span<const std::size_t> cols(order.data() + k * m, std::min(m, p - k * m));

    // Non-empty class subset, encoded as a bit mask over `present`.
    const std::size_t mask = 1 + uniform_index(rng, (std::size_t{1} << present.size()) - 1);
    std::vector<std::size_t> pool;
    for (std::size_t r = 0; r < table.rows(); ++r) {
      for (std::size_t c = 0; c < present.size(); ++c) {
        if ((mask >> c & 1U) && table.label(r) == present[c]) pool.push_back(r);
      }
    }
    // Subsample without replacement, then restore table order.
    const auto take = static_cast<std::size_t>(
        std::ceil(config.pca_sample_fraction * static_cast<double>(pool.size())));
    shuffle(std::span<std::size_t>(pool), rng);
    pool.resize(std::min(take, pool.size()));
    std::sort(pool.begin(), pool.end());

    Eigen::MatrixXd block = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(cols.size()),
                                                      static_cast<Eigen::Index>(cols.size()));
    if (pool.size() >= 2) {
      Eigen::MatrixXd sample(static_cast<Eigen::Index>(pool.size()), static_cast<Eigen::Index>(cols.size()));
      for (std::size_t i = 0; i < pool.size(); ++i) {
        const auto row = table.row(pool[i]);
        for (std::size_t j = 0; j < cols.size(); ++j) {
          sample(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[cols[j]];
        }
      }
      const PcaModel pca = fit_pca(sample);
      if (pca.eigenvalues.sum() > 0.0) block = pca.loadings;
    }
    for (std::size_t a = 0; a < cols.size(); ++a) {
      for (std::size_t b = 0; b < cols.size(); ++b) {
        rotation(static_cast<Eigen::Index>(cols[a]), static_cast<Eigen::Index>(cols[b])) =
            block(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
      }
    }
  }
  return rotation;
}

namespace {

Eigen::Map<const RowMatrix> table_matrix(const FeatureTable& table) {
  return {table.data().data(), static_cast<Eigen::Index>(table.rows()),
          static_cast<Eigen::Index>(table.feature_count())};
}

void require_trainable(const FeatureTable& table) {
  if (table.rows() < 2) throw TrainingError("training needs at least two rows");
  if (table.count(ClassLabel::interictal) == 0 || table.count(ClassLabel::preictal) == 0) {
    throw TrainingError("training table must contain both classes");
  }
}

}  // namespace

RotationMember train_member(const FeatureTable& table, const RotationForestConfig& config,
                            std::size_t index) {
  require_trainable(table);
  Rng rng = tree_rng(config.seed, index);
  RotationMember member;
  member.rotation = build_rotation(table, config, rng);
  const RowMatrix rotated = table_matrix(table) * member.rotation;
  member.tree = tree_train(rotated, table.labels(), config.tree);
  return member;
}

RotationForestModel train(const FeatureTable& table, const RotationForestConfig& config,
                          std::size_t threads) {
  config.validate();
  require_trainable(table);
  std::vector<RotationMember> members(static_cast<std::size_t>(config.ensemble_size));
  if (threads <= 1) {
    for (std::size_t i = 0; i < members.size(); ++i) members[i] = train_member(table, config, i);
  } else {
    ThreadPool pool(std::min(threads, members.size()));
    pool.parallel_for(members.size(),
                      [&](std::size_t i) { members[i] = train_member(table, config, i); });
  }
  return RotationForestModel(config, table.names(), std::move(members));
}

Prediction predict(const RotationForestModel& model, std::span<const double> features) {
  if (features.size() != model.feature_count()) {
    throw ShapeError("model expects " + std::to_string(model.feature_count()) +
                     " features, got " + std::to_string(features.size()));
  }
  if (model.members().empty()) throw ParameterError("model has no members");
  const Eigen::Map<const Eigen::RowVectorXd> x(features.data(),
                                               static_cast<Eigen::Index>(features.size()));
  Prediction out;
  Eigen::RowVectorXd z;
  for (const auto& m : model.members()) {
    z.noalias() = x * m.rotation;
    const auto& d = m.tree.distribution(std::span<const double>(z.data(), static_cast<std::size_t>(z.size())));
    out.distribution[0] += d[0];
    out.distribution[1] += d[1];
  }
  const double l = static_cast<double>(model.members().size());
  out.distribution[0] /= l;
  out.distribution[1] /= l;
  out.label = out.distribution[1] > out.distribution[0] ? ClassLabel::preictal : ClassLabel::interictal;
  out.confidence = out.distribution[static_cast<std::size_t>(out.label)];
  return out;
}

std::vector<int> stratified_folds(std::span<const ClassLabel> labels, int folds, std::uint64_t seed) {
  if (folds < 2) throw ParameterError("cross-validation needs at least two folds");
  if (labels.size() < static_cast<std::size_t>(folds)) {
    throw ParameterError("cannot split " + std::to_string(labels.size()) + " rows into " +
                         std::to_string(folds) + " folds");
  }
  std::vector<int> assignment(labels.size(), 0);
  Rng rng = derive_rng(seed, 0x63766661, 0);
  std::size_t next = 0;
  for (ClassLabel c : {ClassLabel::interictal, ClassLabel::preictal}) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == c) rows.push_back(i);
    }
    shuffle(std::span<std::size_t>(rows), rng);
    for (std::size_t r : rows) assignment[r] = static_cast<int>(next++ % static_cast<std::size_t>(folds));
  }
  return assignment;
}

CvResult cross_validate(const FeatureTable& table, const RotationForestConfig& config, int folds,
                        std::size_t threads) {
  config.validate();
  const std::vector<int> assignment = stratified_folds(table.labels(), folds, config.seed);
  CvResult result;
  result.fold_accuracies.assign(static_cast<std::size_t>(folds), 0.0);
  auto run_fold = [&](std::size_t f) {
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> test_rows;
    for (std::size_t i = 0; i < assignment.size(); ++i) {
      (assignment[i] == static_cast<int>(f) ? test_rows : train_rows).push_back(i);
    }
    const RotationForestModel model = train(table.subset(train_rows), config);
    std::size_t correct = 0;
    for (std::size_t r : test_rows) {
      if (predict(model, table.row(r)).label == table.label(r)) ++correct;
    }
    result.fold_accuracies[f] = static_cast<double>(correct) / static_cast<double>(test_rows.size());
  };
  if (threads <= 1) {
    for (std::size_t f = 0; f < result.fold_accuracies.size(); ++f) run_fold(f);
  } else {
    ThreadPool pool(threads);
    pool.parallel_for(result.fold_accuracies.size(), run_fold);
  }
  result.mean_accuracy = std::accumulate(result.fold_accuracies.begin(), result.fold_accuracies.end(), 0.0) /
                         static_cast<double>(folds);
  return result;
}

}  // namespace seizure
