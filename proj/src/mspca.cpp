#include "seizure/mspca.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "seizure/error.hpp"

namespace seizure {

PcaModel PcaModel::truncated(std::size_t r) const {
  if (r == 0 || r > retained()) throw ParameterError("cannot keep " + std::to_string(r) + " components");
  PcaModel out;
  out.mean = mean;
  out.loadings = loadings.leftCols(static_cast<Eigen::Index>(r));
  out.eigenvalues = eigenvalues.head(static_cast<Eigen::Index>(r));
  out.n_samples = n_samples;
  return out;
}

PcaModel fit_pca(const Eigen::MatrixXd& x) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  if (n < 2) throw ParameterError("PCA needs at least two rows");
  if (p < 1) throw ParameterError("PCA needs at least one column");
  if (!x.allFinite()) throw DataError("PCA input contains non-finite values");

  PcaModel model;
  model.n_samples = static_cast<std::size_t>(n);
  model.mean = x.colwise().mean().transpose();
  const Eigen::MatrixXd centered = x.rowwise() - model.mean.transpose();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(p, p);
  cov.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose());
  cov = cov.selfadjointView<Eigen::Lower>();
  cov /= static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw DataError("covariance eigen-decomposition failed");

  // Solver order is ascending; flip to descending.
  model.eigenvalues.resize(p);
  model.loadings.resize(p, p);
  for (Eigen::Index k = 0; k < p; ++k) {
    const Eigen::Index src = p - 1 - k;
    model.eigenvalues(k) = std::max(0.0, solver.eigenvalues()(src));
    Eigen::VectorXd v = solver.eigenvectors().col(src);
    Eigen::Index arg = 0;
    for (Eigen::Index i = 1; i < p; ++i) {
      if (std::abs(v(i)) > std::abs(v(arg))) arg = i;
    }
    if (v(arg) < 0.0) v = -v;
    model.loadings.col(k) = v;
  }
  return model;
}

Eigen::MatrixXd transform(const PcaModel& model, const Eigen::MatrixXd& x) {
  if (x.cols() != model.mean.size()) {
    throw ShapeError("transform expects " + std::to_string(model.mean.size()) + " columns, got " +
                     std::to_string(x.cols()));
  }
  return (x.rowwise() - model.mean.transpose()) * model.loadings;
}

Eigen::MatrixXd inverse_transform(const PcaModel& model, const Eigen::MatrixXd& scores) {
  if (scores.cols() != model.loadings.cols()) {
    throw ShapeError("inverse_transform expects " + std::to_string(model.loadings.cols()) +
                     " score columns, got " + std::to_string(scores.cols()));
  }
  Eigen::MatrixXd out = scores * model.loadings.transpose();
  out.rowwise() += model.mean.transpose();
  return out;
}

std::size_t select_components(std::span<const double> eigenvalues) {
  if (eigenvalues.empty()) throw ParameterError("no eigenvalues to select from");
  const double mean = std::accumulate(eigenvalues.begin(), eigenvalues.end(), 0.0) /
                      static_cast<double>(eigenvalues.size());
  std::size_t keep = 0;
  while (keep < eigenvalues.size() && eigenvalues[keep] >= mean) ++keep;
  return std::max<std::size_t>(keep, 1);
}

std::size_t retain_all_components(std::span<const double> eigenvalues) {
  if (eigenvalues.empty()) throw ParameterError("no eigenvalues to select from");
  return eigenvalues.size();
}

namespace {

Eigen::MatrixXd pca_reconstruct(const Eigen::MatrixXd& x, const ComponentSelector& select) {
  const PcaModel full = fit_pca(x);
  const std::span<const double> eig(full.eigenvalues.data(),
                                    static_cast<std::size_t>(full.eigenvalues.size()));
  const std::size_t keep = select(eig);
  if (keep == 0 || keep > full.retained()) {
    throw ParameterError("component selector returned " + std::to_string(keep));
  }
  const PcaModel model = keep == full.retained() ? full : full.truncated(keep);
  return inverse_transform(model, transform(model, x));
}

}  // namespace

Eigen::MatrixXd mspca_denoise(const Eigen::MatrixXd& x, const FilterPair& filter, int levels,
                              const ComponentSelector& select) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  if (p < 2) throw ShapeError("MSPCA needs at least two columns");
  if (levels < 1) throw ParameterError("MSPCA needs at least one wavelet level");
  if (levels >= 31 || n % (Eigen::Index{1} << levels) != 0 || (n >> levels) < 2) {
    throw ShapeError("MSPCA row count " + std::to_string(n) + " is incompatible with " +
                     std::to_string(levels) + " levels");
  }

  // Scale s < levels holds D_{s+1}; scale `levels` holds A_levels.
  std::vector<Eigen::MatrixXd> scales(static_cast<std::size_t>(levels) + 1);
  for (int j = 0; j < levels; ++j) scales[static_cast<std::size_t>(j)].resize(n >> (j + 1), p);
  scales.back().resize(n >> levels, p);

  for (Eigen::Index c = 0; c < p; ++c) {
    const DwtDecomposition d =
        dwt(std::span<const double>(x.col(c).data(), static_cast<std::size_t>(n)), filter, levels);
    for (int j = 0; j < levels; ++j) {
      const auto& det = d.details[static_cast<std::size_t>(j)];
      std::copy(det.begin(), det.end(), scales[static_cast<std::size_t>(j)].col(c).data());
    }
    std::copy(d.approximation.begin(), d.approximation.end(), scales.back().col(c).data());
  }

  for (auto& s : scales) s = pca_reconstruct(s, select);

  Eigen::MatrixXd rebuilt(n, p);
  DwtDecomposition d;
  d.levels = levels;
  d.original_length = static_cast<std::size_t>(n);
  d.filter_name = filter.name;
  d.details.resize(static_cast<std::size_t>(levels));
  for (Eigen::Index c = 0; c < p; ++c) {
    for (int j = 0; j < levels; ++j) {
      const auto& s = scales[static_cast<std::size_t>(j)];
      d.details[static_cast<std::size_t>(j)].assign(s.col(c).data(), s.col(c).data() + s.rows());
    }
    const auto& a = scales.back();
    d.approximation.assign(a.col(c).data(), a.col(c).data() + a.rows());
    const std::vector<double> col = idwt(d, filter);
    std::copy(col.begin(), col.end(), rebuilt.col(c).data());
  }

  return pca_reconstruct(rebuilt, select);
}

}  // namespace seizure
