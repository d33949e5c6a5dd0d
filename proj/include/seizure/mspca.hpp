#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include <Eigen/Core>

#include "seizure/wavelet.hpp"

namespace seizure {

/// Principal axes of a column-centered data matrix, X - mean = T P^T.
struct PcaModel {
  Eigen::VectorXd mean;         // length p
  Eigen::MatrixXd loadings;     // p x r, orthonormal columns
  Eigen::VectorXd eigenvalues;  // r values, descending, >= 0
  std::size_t n_samples = 0;

  std::size_t retained() const noexcept { return static_cast<std::size_t>(loadings.cols()); }
  /// Same model keeping only the leading r components.
  PcaModel truncated(std::size_t r) const;
};

/// Eigen-decomposition of the sample covariance (divisor n - 1). Loadings are
/// ordered by descending eigenvalue and signed so that each column's
/// largest-magnitude entry (first on ties) is positive.
PcaModel fit_pca(const Eigen::MatrixXd& x);

Eigen::MatrixXd transform(const PcaModel& model, const Eigen::MatrixXd& x);
Eigen::MatrixXd inverse_transform(const PcaModel& model, const Eigen::MatrixXd& scores);

/// Decides how many leading components to keep given descending eigenvalues.
using ComponentSelector = std::function<std::size_t(std::span<const double>)>;

/// Kaiser rule: keep every eigenvalue >= their mean, at least one.
std::size_t select_components(std::span<const double> eigenvalues);
std::size_t retain_all_components(std::span<const double> eigenvalues);

/// Multiscale PCA: per-column DWT, PCA reconstruction at every scale,
/// inverse DWT, then a final PCA reconstruction of the result.
Eigen::MatrixXd mspca_denoise(const Eigen::MatrixXd& x, const FilterPair& filter, int levels,
                              const ComponentSelector& select = select_components);

}  // namespace seizure
