#pragma once

#include <functional>

#include "savflow/fft.hpp"

namespace savflow {

enum class SymbolSign { kAny, kNonnegative, kNonpositive };

/// Diagonal Fourier multiplier of a translation-invariant operator.
class OperatorSymbol {
public:
  OperatorSymbol(std::shared_ptr<const Grid> grid, Eigen::ArrayXd multipliers,
                 SymbolSign sign = SymbolSign::kAny);

  const Grid& grid() const { return *grid_; }
  std::shared_ptr<const Grid> grid_ptr() const { return grid_; }
  const Eigen::ArrayXd& multipliers() const { return m_; }
  double at(std::int64_t flat) const { return m_[flat]; }
  SymbolSign sign() const { return sign_; }

  /// Pointwise combination helpers (shared grid assumed).
  friend OperatorSymbol operator+(const OperatorSymbol& a,
                                  const OperatorSymbol& b) {
    return OperatorSymbol(a.grid_, a.m_ + b.m_);
  }
  friend OperatorSymbol operator*(double s, const OperatorSymbol& a) {
    return OperatorSymbol(a.grid_, s * a.m_);
  }

private:
  std::shared_ptr<const Grid> grid_;
  Eigen::ArrayXd m_;
  SymbolSign sign_;
};

/// Build a symbol from a function of the physical wavenumber vector.
OperatorSymbol symbol_from_wavenumbers(
    std::shared_ptr<const Grid> grid,
    const std::function<double(const std::array<double, 3>&)>& fn,
    SymbolSign sign = SymbolSign::kAny);

/// |k|^(2s): the fractional Laplacian (-Delta)^s. s = 0 is the identity
/// (multiplier 1 at every mode, including 0); for s > 0 the mode-0
/// multiplier is 0.
OperatorSymbol symbol_fractional_laplacian(std::shared_ptr<const Grid> grid,
                                           double s);

OperatorSymbol symbol_constant(std::shared_ptr<const Grid> grid, double value);

/// Multiply each Fourier coefficient of f by the symbol; result is real.
Field apply_symbol(const OperatorSymbol& sym, const Field& f);
SpectralField apply_symbol(const OperatorSymbol& sym, const SpectralField& fh);

/// Discrete L2 inner product (|Omega|/points) * sum f_i g_i.
double inner_product(const Field& f, const Field& g);
double l2_norm(const Field& f);
double field_mean(const Field& f);

}  // namespace savflow
