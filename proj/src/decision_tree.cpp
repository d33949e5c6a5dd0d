#include "seizure/rotforest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "seizure/error.hpp"

namespace seizure {

DecisionTree::DecisionTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw FormatError("tree has no nodes");
  const int n = static_cast<int>(nodes_.size());
  for (int i = 0; i < n; ++i) {
    const Node& node = nodes_[static_cast<std::size_t>(i)];
    if (node.is_leaf()) {
      const double sum = node.distribution[0] + node.distribution[1];
      if (std::abs(sum - 1.0) > 1e-12) throw FormatError("leaf " + std::to_string(i) + " does not sum to 1");
    } else if (node.left <= i || node.right <= i || node.left >= n || node.right >= n) {
      throw FormatError("node " + std::to_string(i) + " has children out of range");
    }
  }
}

const ClassDistribution& DecisionTree::distribution(std::span<const double> x) const {
  std::size_t at = 0;
  for (;;) {
    const Node& node = nodes_[at];
    if (node.is_leaf()) return node.distribution;
    if (static_cast<std::size_t>(node.feature) >= x.size()) {
      throw ShapeError("tree splits on feature " + std::to_string(node.feature) +
                       " but input has " + std::to_string(x.size()));
    }
    at = static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature)] <= node.threshold
                                      ? node.left
                                      : node.right);
  }
}

std::size_t DecisionTree::depth() const {
  std::vector<std::size_t> d(nodes_.size(), 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    best = std::max(best, d[i]);
    if (!nodes_[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes_[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes_[i].right)] = d[i] + 1;
    }
  }
  return best;
}

namespace {

double gini(double c0, double c1) {
  const double n = c0 + c1;
  if (n <= 0.0) return 0.0;
  const double p0 = c0 / n;
  const double p1 = c1 / n;
  return 1.0 - p0 * p0 - p1 * p1;
}

class TreeBuilder {
 public:
  TreeBuilder(const RowMatrix& x, std::span<const ClassLabel> labels, const TreeParams& params)
      : x_(x), labels_(labels), params_(params) {}

  std::vector<DecisionTree::Node> run() {
    std::vector<std::size_t> rows(static_cast<std::size_t>(x_.rows()));
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    grow(rows, 0);
    return std::move(nodes_);
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = -1.0;
  };

  int grow(std::vector<std::size_t>& rows, int depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    double c1 = 0.0;
    for (std::size_t r : rows) c1 += labels_[r] == ClassLabel::preictal ? 1.0 : 0.0;
    const double n = static_cast<double>(rows.size());
    const double c0 = n - c1;
    nodes_[static_cast<std::size_t>(id)].distribution = {c0 / n, c1 / n};

    const auto min_leaf = static_cast<std::size_t>(std::max(1, params_.min_leaf));
    const bool pure = c0 == 0.0 || c1 == 0.0;
    const bool too_small = rows.size() < 2 * min_leaf;
    const bool too_deep = params_.max_depth && depth >= *params_.max_depth;
    if (pure || too_small || too_deep) return id;

    const Split best = find_split(rows, c0, c1, min_leaf);
    if (best.feature < 0) return id;

    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    for (std::size_t r : rows) {
      (x_(static_cast<Eigen::Index>(r), best.feature) <= best.threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    nodes_[static_cast<std::size_t>(id)].feature = best.feature;
    nodes_[static_cast<std::size_t>(id)].threshold = best.threshold;
    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    nodes_[static_cast<std::size_t>(id)].left = l;
    nodes_[static_cast<std::size_t>(id)].right = r;
    return id;
  }

  Split find_split(const std::vector<std::size_t>& rows, double c0, double c1,
                   std::size_t min_leaf) {
    const double n = static_cast<double>(rows.size());
    const double parent = gini(c0, c1);
    Split best;
    sorted_.resize(rows.size());
    for (Eigen::Index f = 0; f < x_.cols(); ++f) {
      for (std::size_t i = 0; i < rows.size(); ++i) {
        sorted_[i] = {x_(static_cast<Eigen::Index>(rows[i]), f), labels_[rows[i]] == ClassLabel::preictal};
      }
      std::sort(sorted_.begin(), sorted_.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      double left1 = 0.0;
      for (std::size_t k = 1; k < sorted_.size(); ++k) {
        left1 += sorted_[k - 1].second ? 1.0 : 0.0;
        if (k < min_leaf || sorted_.size() - k < min_leaf) continue;
        const double lo = sorted_[k - 1].first;
        const double hi = sorted_[k].first;
        if (!(lo < hi)) continue;
        const double nl = static_cast<double>(k);
        const double nr = n - nl;
        const double left0 = nl - left1;
        const double gain = parent - (nl / n) * gini(left0, left1) -
                            (nr / n) * gini(c0 - left0, c1 - left1);
        // Scan order is (feature, threshold) ascending, so a strict
        // improvement keeps the earliest candidate on ties.
        if (gain > best.gain + 1e-12) {
          double mid = lo + (hi - lo) / 2.0;
          if (!(mid < hi)) mid = lo;
          best = {static_cast<int>(f), mid, gain};
        }
      }
    }
    return best;
  }

  const RowMatrix& x_;
  std::span<const ClassLabel> labels_;
  const TreeParams& params_;
  std::vector<DecisionTree::Node> nodes_;
  std::vector<std::pair<double, bool>> sorted_;
};

}  // namespace

DecisionTree tree_train(const RowMatrix& x, std::span<const ClassLabel> labels,
                        const TreeParams& params) {
  if (x.rows() < 1) throw TrainingError("cannot grow a tree from zero rows");
  if (static_cast<std::size_t>(x.rows()) != labels.size()) {
    throw ShapeError("tree input has " + std::to_string(x.rows()) + " rows but " +
                     std::to_string(labels.size()) + " labels");
  }
  if (params.min_leaf < 1) throw ParameterError("min_leaf must be at least 1");
  if (params.max_depth && *params.max_depth < 0) throw ParameterError("max_depth must be >= 0");
  return DecisionTree(TreeBuilder(x, labels, params).run());
}

}  // namespace seizure
