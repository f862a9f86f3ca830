#include "savflow/field.hpp"

namespace savflow {

Field::Field(std::shared_ptr<const Grid> grid, Eigen::ArrayXd values)
    : grid_(std::move(grid)), v_(std::move(values)) {
  if (v_.size() != grid_->total_points())
    throw std::invalid_argument("Field: value count != grid points");
}

Field::Field(std::shared_ptr<const Grid> grid)
    : grid_(std::move(grid)),
      v_(Eigen::ArrayXd::Zero(grid_->total_points())) {}

SpectralField::SpectralField(std::shared_ptr<const Grid> grid,
                             Eigen::ArrayXcd coeffs)
    : grid_(std::move(grid)), c_(std::move(coeffs)) {
  if (c_.size() != grid_->total_points())
    throw std::invalid_argument("SpectralField: coeff count != grid points");
}

double SpectralField::hermitian_defect() const {
  const Grid& g = *grid_;
  double scale = c_.abs().maxCoeff();
  if (scale == 0.0) return 0.0;
  double worst = 0.0;
  for (std::int64_t flat = 0; flat < g.total_points(); ++flat) {
    auto idx = g.unflatten(flat);
    // index of -k (mod N per dim)
    std::int64_t conj_flat = 0;
    for (int d = 0; d < g.dim(); ++d) {
      int n = g.points(d);
      int j = idx[d] == 0 ? 0 : n - idx[d];
      conj_flat = conj_flat * n + j;
    }
    worst = std::max(worst, std::abs(c_[flat] - std::conj(c_[conj_flat])));
  }
  return worst / scale;
}

std::shared_ptr<const Grid> make_grid(std::vector<int> n,
                                      std::vector<double> lengths) {
  if (lengths.empty())
    return std::make_shared<Grid>(std::move(n));
  return std::make_shared<Grid>(std::move(n), std::move(lengths));
}

}  // namespace savflow
