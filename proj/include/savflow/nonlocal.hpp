#pragma once

#include "savflow/symbol.hpp"

namespace savflow {

/// Radial kernel rho_delta(r) = c1*K(alpha1) - c2*K(alpha2) with
/// K(a) = 2*(4-a)/pi / (delta^(4-a) * r^a), supported on r in (0, delta].
struct KernelSpec {
  double c1 = 20.0;
  double c2 = 19.0;
  double alpha1 = 3.0;
  double alpha2 = 0.0;
  double delta = 2.0;

  double rho(double r) const;
  bool operator<(const KernelSpec& o) const;
};

/// Eigenvalues of the nonlocal operator L_delta on a 2-D periodic grid:
///   lambda(k) = int_0^delta r rho(r) int_0^2pi (cos(r(kx cos t + ky sin t)) - 1) dt dr,
/// evaluated by Gauss-Legendre in r and composite trapezoid in theta,
/// both doubled until successive values differ by <= tol. The value at
/// mode 0 is exactly 0 and all values are <= 0 for admissible kernels.
OperatorSymbol symbol_nonlocal(std::shared_ptr<const Grid> grid,
                               const KernelSpec& kernel, double tol = 1e-10);

/// Single eigenvalue at physical wavenumber magnitude |k| (exposed for
/// the quadrature-refinement oracle in tests).
double nonlocal_eigenvalue(const KernelSpec& kernel, double k_mag,
                           int r_nodes, int theta_nodes);

}  // namespace savflow
