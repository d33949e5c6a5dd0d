#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace seizure {

/// Orthonormal two-channel filter bank.
struct FilterPair {
  std::string name;
  std::vector<double> lowpass;
  std::vector<double> highpass;

  std::size_t length() const noexcept { return lowpass.size(); }

  /// Builds the quadrature-mirror highpass h[k] = (-1)^k l[L-1-k].
  static FilterPair from_lowpass(std::string name, std::vector<double> lowpass);
  static FilterPair haar();
  /// Daubechies with four vanishing moments (8 taps).
  static FilterPair db4();
  /// "haar" or "db4"; throws ParameterError otherwise.
  static FilterPair by_name(std::string_view name);

  /// Throws ParameterError unless the pair is an orthonormal QMF bank.
  void validate() const;
};

struct DwtDecomposition {
  std::vector<std::vector<double>> details;  // D_1 .. D_levels, finest first
  std::vector<double> approximation;         // A_levels
  int levels = 0;
  std::size_t original_length = 0;
  std::string filter_name;
};

/// Full packet tree flattened to its leaves. Leaf n at depth k is reached by
/// the filter path whose bits (most significant first, 0 = lowpass) spell n.
struct WpdTree {
  int level = 0;
  std::vector<std::vector<double>> leaves;
  std::size_t original_length = 0;
  std::string filter_name;
};

/// One analysis stage with periodic extension:
/// low[i] = sum_m l[m] x[(2i - m) mod N], high likewise with h.
void analysis_step(std::span<const double> x, const FilterPair& filter, std::span<double> low,
                   std::span<double> high);
/// Adjoint (= inverse) of analysis_step; `out` has twice the input length.
void synthesis_step(std::span<const double> low, std::span<const double> high,
                    const FilterPair& filter, std::span<double> out);

DwtDecomposition dwt(std::span<const double> x, const FilterPair& filter, int levels);
std::vector<double> idwt(const DwtDecomposition& d, const FilterPair& filter);

WpdTree wpd(std::span<const double> x, const FilterPair& filter, int level);
std::vector<double> iwpd(const WpdTree& tree, const FilterPair& filter);

}  // namespace seizure
