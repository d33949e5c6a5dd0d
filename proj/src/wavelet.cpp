#include "seizure/wavelet.hpp"

#include <cmath>
#include <numeric>

#include "seizure/error.hpp"

namespace seizure {

FilterPair FilterPair::from_lowpass(std::string name, std::vector<double> lowpass) {
  FilterPair f;
  f.name = std::move(name);
  const std::size_t n = lowpass.size();
  f.highpass.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    f.highpass[k] = (k % 2 == 0 ? 1.0 : -1.0) * lowpass[n - 1 - k];
  }
  f.lowpass = std::move(lowpass);
  return f;
}

FilterPair FilterPair::haar() {
  const double r = 1.0 / std::sqrt(2.0);
  return from_lowpass("haar", {r, r});
}

FilterPair FilterPair::db4() {
  return from_lowpass("db4", {
                                 0.23037781330885523,
                                 0.71484657055254153,
                                 0.63088076792959036,
                                 -0.027983769416983849,
                                 -0.18703481171888114,
                                 0.030841381835986965,
                                 0.032883011666982945,
                                 -0.010597401784997278,
                             });
}

FilterPair FilterPair::by_name(std::string_view name) {
  if (name == "haar") return haar();
  if (name == "db4") return db4();
  throw ParameterError("unknown wavelet '" + std::string(name) + "'");
}

void FilterPair::validate() const {
  const std::size_t n = lowpass.size();
  if (n == 0 || n % 2 != 0 || highpass.size() != n) {
    throw ParameterError("filter pair '" + name + "' must have equal, even, non-zero lengths");
  }
  const double lsum = std::accumulate(lowpass.begin(), lowpass.end(), 0.0);
  const double hsum = std::accumulate(highpass.begin(), highpass.end(), 0.0);
  if (std::abs(lsum - std::sqrt(2.0)) > 1e-10) throw ParameterError("lowpass must sum to sqrt(2)");
  if (std::abs(hsum) > 1e-10) throw ParameterError("highpass must sum to zero");
  for (std::size_t k = 0; k < n; ++k) {
    const double mirror = (k % 2 == 0 ? 1.0 : -1.0) * lowpass[n - 1 - k];
    if (std::abs(highpass[k] - mirror) > 1e-10) throw ParameterError("not a quadrature mirror pair");
  }
}

void analysis_step(std::span<const double> x, const FilterPair& filter, std::span<double> low,
                   std::span<double> high) {
  const std::size_t n = x.size();
  const std::size_t half = n / 2;
  const std::size_t taps = filter.length();
  for (std::size_t i = 0; i < half; ++i) {
    double a = 0.0;
    double d = 0.0;
    // (2i - m) mod n, kept non-negative by adding a multiple of n.
    std::size_t idx = 2 * i + n * (taps / n + 1);
    for (std::size_t m = 0; m < taps; ++m) {
      const double v = x[(idx - m) % n];
      a += filter.lowpass[m] * v;
      d += filter.highpass[m] * v;
    }
    low[i] = a;
    high[i] = d;
  }
}

void synthesis_step(std::span<const double> low, std::span<const double> high,
                    const FilterPair& filter, std::span<double> out) {
  const std::size_t n = out.size();
  const std::size_t taps = filter.length();
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < low.size(); ++i) {
    std::size_t idx = 2 * i + n * (taps / n + 1);
    for (std::size_t m = 0; m < taps; ++m) {
      out[(idx - m) % n] += filter.lowpass[m] * low[i] + filter.highpass[m] * high[i];
    }
  }
}

namespace {

void check_geometry(std::size_t length, const FilterPair& filter, int levels) {
  if (levels < 1) throw ParameterError("decomposition level must be at least 1");
  if (levels >= 63) throw ParameterError("decomposition level too large");
  const std::size_t block = std::size_t{1} << levels;
  if (length == 0 || length % block != 0) {
    throw ShapeError("length " + std::to_string(length) + " is not divisible by 2^" +
                     std::to_string(levels));
  }
  if (length < filter.length()) {
    throw ShapeError("length " + std::to_string(length) + " is shorter than the filter");
  }
}

}  // namespace

DwtDecomposition dwt(std::span<const double> x, const FilterPair& filter, int levels) {
  check_geometry(x.size(), filter, levels);
  DwtDecomposition out;
  out.levels = levels;
  out.original_length = x.size();
  out.filter_name = filter.name;
  std::vector<double> current(x.begin(), x.end());
  for (int j = 0; j < levels; ++j) {
    const std::size_t half = current.size() / 2;
    std::vector<double> low(half);
    std::vector<double> high(half);
    analysis_step(current, filter, low, high);
    out.details.push_back(std::move(high));
    current = std::move(low);
  }
  out.approximation = std::move(current);
  return out;
}

std::vector<double> idwt(const DwtDecomposition& d, const FilterPair& filter) {
  if (d.levels < 1 || d.details.size() != static_cast<std::size_t>(d.levels)) {
    throw ShapeError("decomposition level count does not match its details");
  }
  std::size_t expected = d.original_length;
  for (int j = 0; j < d.levels; ++j) {
    expected /= 2;
    if (d.details[static_cast<std::size_t>(j)].size() != expected) {
      throw ShapeError("detail D_" + std::to_string(j + 1) + " has the wrong length");
    }
  }
  if (d.approximation.size() != expected) throw ShapeError("approximation has the wrong length");

  std::vector<double> current = d.approximation;
  for (int j = d.levels - 1; j >= 0; --j) {
    std::vector<double> up(current.size() * 2);
    synthesis_step(current, d.details[static_cast<std::size_t>(j)], filter, up);
    current = std::move(up);
  }
  return current;
}

WpdTree wpd(std::span<const double> x, const FilterPair& filter, int level) {
  check_geometry(x.size(), filter, level);
  WpdTree tree;
  tree.level = level;
  tree.original_length = x.size();
  tree.filter_name = filter.name;
  std::vector<std::vector<double>> nodes{std::vector<double>(x.begin(), x.end())};
  for (int k = 0; k < level; ++k) {
    std::vector<std::vector<double>> next;
    next.reserve(nodes.size() * 2);
    for (const auto& node : nodes) {
      const std::size_t half = node.size() / 2;
      std::vector<double> low(half);
      std::vector<double> high(half);
      analysis_step(node, filter, low, high);
      next.push_back(std::move(low));
      next.push_back(std::move(high));
    }
    nodes = std::move(next);
  }
  tree.leaves = std::move(nodes);
  return tree;
}

std::vector<double> iwpd(const WpdTree& tree, const FilterPair& filter) {
  if (tree.level < 1 || tree.leaves.size() != (std::size_t{1} << tree.level)) {
    throw ShapeError("packet tree must hold exactly 2^level leaves");
  }
  const std::size_t leaf_len = tree.original_length >> tree.level;
  for (const auto& leaf : tree.leaves) {
    if (leaf.size() != leaf_len) throw ShapeError("packet leaf has the wrong length");
  }
  std::vector<std::vector<double>> nodes = tree.leaves;
  while (nodes.size() > 1) {
    std::vector<std::vector<double>> parents(nodes.size() / 2);
    for (std::size_t p = 0; p < parents.size(); ++p) {
      parents[p].resize(nodes[2 * p].size() * 2);
      synthesis_step(nodes[2 * p], nodes[2 * p + 1], filter, parents[p]);
    }
    nodes = std::move(parents);
  }
  return std::move(nodes.front());
}

}  // namespace seizure
