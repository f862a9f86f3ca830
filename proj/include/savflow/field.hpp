#pragma once

#include <Eigen/Core>
#include <complex>
#include <memory>

#include "savflow/grid.hpp"

namespace savflow {

/// Real-valued samples on a shared Grid, row-major flat storage.
class Field {
public:
  Field(std::shared_ptr<const Grid> grid, Eigen::ArrayXd values);
  explicit Field(std::shared_ptr<const Grid> grid);  // zero field

  const Grid& grid() const { return *grid_; }
  std::shared_ptr<const Grid> grid_ptr() const { return grid_; }
  const Eigen::ArrayXd& values() const { return v_; }
  Eigen::ArrayXd& values() { return v_; }

  bool all_finite() const { return v_.isFinite().all(); }
  double max_abs() const { return v_.abs().maxCoeff(); }

private:
  std::shared_ptr<const Grid> grid_;
  Eigen::ArrayXd v_;
};

/// Fourier coefficients of a real field, full complex storage in the
/// same row-major layout; coefficient at mode 0 is the field mean.
class SpectralField {
public:
  SpectralField(std::shared_ptr<const Grid> grid, Eigen::ArrayXcd coeffs);

  const Grid& grid() const { return *grid_; }
  std::shared_ptr<const Grid> grid_ptr() const { return grid_; }
  const Eigen::ArrayXcd& coeffs() const { return c_; }
  Eigen::ArrayXcd& coeffs() { return c_; }

  /// Largest |c(-k) - conj(c(k))| relative to the coefficient scale.
  double hermitian_defect() const;

private:
  std::shared_ptr<const Grid> grid_;
  Eigen::ArrayXcd c_;
};

inline void require_same_grid(const Field& a, const Field& b) {
  if (a.grid() != b.grid())
    throw std::invalid_argument("fields live on different grids");
}

std::shared_ptr<const Grid> make_grid(std::vector<int> n,
                                      std::vector<double> lengths = {});

}  // namespace savflow
