#include "savflow/symbol.hpp"

#include <cmath>

namespace savflow {

OperatorSymbol::OperatorSymbol(std::shared_ptr<const Grid> grid,
                               Eigen::ArrayXd multipliers, SymbolSign sign)
    : grid_(std::move(grid)), m_(std::move(multipliers)), sign_(sign) {
  if (m_.size() != grid_->total_points())
    throw std::invalid_argument("OperatorSymbol: multiplier count mismatch");
  if (!m_.isFinite().all())
    throw std::invalid_argument("OperatorSymbol: non-finite multiplier");
  constexpr double tol = 1e-12;
  if (sign_ == SymbolSign::kNonnegative && (m_ < -tol).any())
    throw std::invalid_argument("OperatorSymbol: negative entry in nonnegative symbol");
  if (sign_ == SymbolSign::kNonpositive && (m_ > tol).any())
    throw std::invalid_argument("OperatorSymbol: positive entry in nonpositive symbol");
}

OperatorSymbol symbol_from_wavenumbers(
    std::shared_ptr<const Grid> grid,
    const std::function<double(const std::array<double, 3>&)>& fn,
    SymbolSign sign) {
  const Grid& g = *grid;
  Eigen::ArrayXd m(g.total_points());
  for (std::int64_t flat = 0; flat < g.total_points(); ++flat) {
    auto idx = g.unflatten(flat);
    std::array<double, 3> k{0.0, 0.0, 0.0};
    for (int d = 0; d < g.dim(); ++d) k[d] = g.wavenumber(d, idx[d]);
    m[flat] = fn(k);
  }
  return OperatorSymbol(std::move(grid), std::move(m), sign);
}

OperatorSymbol symbol_fractional_laplacian(std::shared_ptr<const Grid> grid,
                                           double s) {
  if (s < 0.0 || s > 1.0)
    throw std::invalid_argument("symbol_fractional_laplacian: s out of [0,1]");
  if (s == 0.0) return symbol_constant(std::move(grid), 1.0);
  return symbol_from_wavenumbers(
      std::move(grid),
      [s](const std::array<double, 3>& k) {
        double k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        return k2 == 0.0 ? 0.0 : std::pow(k2, s);
      },
      SymbolSign::kNonnegative);
}

OperatorSymbol symbol_constant(std::shared_ptr<const Grid> grid, double value) {
  Eigen::ArrayXd m = Eigen::ArrayXd::Constant(grid->total_points(), value);
  SymbolSign sign = value >= 0.0 ? SymbolSign::kNonnegative : SymbolSign::kNonpositive;
  return OperatorSymbol(std::move(grid), std::move(m), sign);
}

SpectralField apply_symbol(const OperatorSymbol& sym, const SpectralField& fh) {
  if (sym.grid() != fh.grid())
    throw std::invalid_argument("apply_symbol: grid mismatch");
  return SpectralField(fh.grid_ptr(), fh.coeffs() * sym.multipliers());
}

Field apply_symbol(const OperatorSymbol& sym, const Field& f) {
  if (sym.grid() != f.grid())
    throw std::invalid_argument("apply_symbol: grid mismatch");
  return transform_backward(apply_symbol(sym, transform_forward(f)));
}

double inner_product(const Field& f, const Field& g) {
  require_same_grid(f, g);
  return f.grid().cell_volume() * (f.values() * g.values()).sum();
}

double l2_norm(const Field& f) { return std::sqrt(inner_product(f, f)); }

double field_mean(const Field& f) {
  return f.values().sum() / static_cast<double>(f.grid().total_points());
}

}  // namespace savflow
