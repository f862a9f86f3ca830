#pragma once

#include <Eigen/Core>

#include "savflow/sav.hpp"

namespace savflow {

/// Symmetric positive semidefinite component-coupling matrix with a
/// deterministic cyclic-Jacobi eigendecomposition D = E diag(lambda) E^T.
class CouplingMatrix {
 public:
  explicit CouplingMatrix(Eigen::MatrixXd d);
  int size() const { return static_cast<int>(d_.rows()); }
  const Eigen::MatrixXd& matrix() const { return d_; }
  const Eigen::MatrixXd& eigenvectors() const { return e_; }
  const Eigen::VectorXd& eigenvalues() const { return lambda_; }

 private:
  Eigen::MatrixXd d_;
  Eigen::MatrixXd e_;
  Eigen::VectorXd lambda_;
};

/// k coupled scalar fields on one grid.
struct MultiField {
  std::vector<Field> comp;

  int components() const { return static_cast<int>(comp.size()); }
  bool all_finite() const;
  double max_abs() const;
};

/// Coupled gradient flow d phi_i/dt = G mu_i,
///   mu_i = sum_j d_ij L phi_j + dE1/dphi_i,
/// with E = 1/2 sum_ij d_ij (phi_i, L phi_j) + E1[phi].
struct MultiModel {
  std::string name;
  std::shared_ptr<const Grid> grid;
  OperatorSymbol L;
  OperatorSymbol G;
  CouplingMatrix D;
  std::function<double(const MultiField&)> e1;
  std::function<MultiField(const MultiField&)> u;
  double shift_delta = 1.0;

  double sqrt_argument(const MultiField& phi) const;
};

struct MultiSavState {
  std::vector<MultiField> phi;  // newest first
  std::vector<double> r;
  double t = 0.0;

  const MultiField& current() const { return phi.front(); }
};

MultiSavState multi_initialize(const MultiModel& model,
                               const MultiField& phi0, double t0 = 0.0);

/// (I - c G L D)^{-1} applied component-block-wise: rotate into the
/// eigenbasis of D, solve k decoupled scalar problems, rotate back.
MultiField multi_solve(const MultiModel& model, double c,
                       const MultiField& rhs);

/// Crank-Nicolson SAV step for the coupled system. Uses half-step
/// prediction when only one history level is available, extrapolation to
/// the half step otherwise.
void step_cn_multi(const MultiModel& model, double dt, MultiSavState& state);

/// 1/2 sum_ij d_ij (phi_i, L phi_j) + r^2.
double multi_modified_energy(const MultiModel& model,
                             const MultiSavState& state);
double multi_original_energy(const MultiModel& model, const MultiField& phi);

/// Coupled Ginzburg-Landau mixture: per-component quartic wells plus the
/// quadratic D coupling; G = -gamma (-Delta)^s shared by all components.
MultiModel multi_gl_model(std::shared_ptr<const Grid> grid,
                          CouplingMatrix D, double eps, double beta,
                          double s, double gamma);

}  // namespace savflow
