#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "seizure/features.hpp"
#include "seizure/rng.hpp"

namespace seizure {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct TreeParams {
  std::optional<int> max_depth;
  int min_leaf = 2;
};

struct RotationForestConfig {
  int ensemble_size = 10;
  int features_per_subset = 3;
  double pca_sample_fraction = 0.75;
  TreeParams tree;
  std::uint64_t seed = 1;

  void validate() const;
  friend bool operator==(const RotationForestConfig& a, const RotationForestConfig& b) {
    return a.ensemble_size == b.ensemble_size && a.features_per_subset == b.features_per_subset &&
           a.pca_sample_fraction == b.pca_sample_fraction && a.tree.max_depth == b.tree.max_depth &&
           a.tree.min_leaf == b.tree.min_leaf && a.seed == b.seed;
  }
};

using ClassDistribution = std::array<double, 2>;  // indexed by ClassLabel

/// Binary CART tree. Nodes are stored in preorder; node 0 is the root.
class DecisionTree {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    ClassDistribution distribution{1.0, 0.0};

    bool is_leaf() const noexcept { return feature < 0; }
    friend bool operator==(const Node&, const Node&) = default;
  };

  DecisionTree() = default;
  /// Validates structure: children in range, leaves sum to one.
  explicit DecisionTree(std::vector<Node> nodes);

  /// Rows go left when value <= threshold.
  const ClassDistribution& distribution(std::span<const double> x) const;
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  std::size_t depth() const;

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

 private:
  std::vector<Node> nodes_;
};

/// Greedy Gini induction. Thresholds are midpoints between consecutive
/// distinct values; ties prefer the lower feature, then the lower threshold.
DecisionTree tree_train(const RowMatrix& x, std::span<const ClassLabel> labels,
                        const TreeParams& params);

/// Per-tree random stream; depends only on (seed, tree index).
Rng tree_rng(std::uint64_t seed, std::size_t tree_index);

/// Block-diagonal (up to feature permutation) rotation from per-subset PCA.
/// Rows and columns are indexed by original feature position.
Eigen::MatrixXd build_rotation(const FeatureTable& table, const RotationForestConfig& config,
                               Rng& rng);

struct RotationMember {
  Eigen::MatrixXd rotation;
  DecisionTree tree;

  friend bool operator==(const RotationMember& a, const RotationMember& b) {
    return a.rotation == b.rotation && a.tree == b.tree;
  }
};

class RotationForestModel {
 public:
  static constexpr int kFormatVersion = 1;

  RotationForestModel() = default;
  RotationForestModel(RotationForestConfig config, std::vector<std::string> feature_names,
                      std::vector<RotationMember> members);

  const RotationForestConfig& config() const noexcept { return config_; }
  const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
  const std::vector<RotationMember>& members() const noexcept { return members_; }
  std::size_t feature_count() const noexcept { return feature_names_.size(); }

  friend bool operator==(const RotationForestModel&, const RotationForestModel&) = default;

 private:
  RotationForestConfig config_;
  std::vector<std::string> feature_names_;
  std::vector<RotationMember> members_;
};

/// Member `index` of the ensemble; identical whichever process builds it.
RotationMember train_member(const FeatureTable& table, const RotationForestConfig& config,
                            std::size_t index);

/// `threads` > 1 builds members concurrently; the result is identical.
RotationForestModel train(const FeatureTable& table, const RotationForestConfig& config,
                          std::size_t threads = 1);

struct Prediction {
  ClassLabel label = ClassLabel::interictal;
  double confidence = 0.0;
  ClassDistribution distribution{0.0, 0.0};
};

/// Averages member leaf distributions; ties go to interictal.
Prediction predict(const RotationForestModel& model, std::span<const double> features);

struct CvResult {
  std::vector<double> fold_accuracies;
  double mean_accuracy = 0.0;
};

/// Stratified fold ids (0..folds-1) for each row; deterministic given seed.
std::vector<int> stratified_folds(std::span<const ClassLabel> labels, int folds, std::uint64_t seed);

CvResult cross_validate(const FeatureTable& table, const RotationForestConfig& config,
                        int folds = 10, std::size_t threads = 1);

// Serialization (format documented in docs/model-format.md).
std::string serialize_member(const RotationMember& member);
RotationMember parse_member(std::string_view text);
std::string serialize_model(const RotationForestModel& model);
RotationForestModel parse_model(std::string_view text);
void save_model(const RotationForestModel& model, const std::filesystem::path& path);
RotationForestModel load_model(const std::filesystem::path& path);

}  // namespace seizure
