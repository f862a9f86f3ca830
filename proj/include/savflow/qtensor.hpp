#pragma once

#include <Eigen/Core>

#include "savflow/sav.hpp"

namespace savflow {

/// Landau-de Gennes constants. Bulk density
///   f_b = a/2 tr(Q^2) - b/3 tr(Q^3) + c/4 (tr Q^2)^2,
/// elastic density
///   L1/2 |grad Q|^2 + L2/2 d_i Q_ik d_j Q_jk + L3/2 d_i Q_jk d_j Q_ik.
/// a1 and C0 split the energy so that E1 = int(f_b - a1/2 tr Q^2) + C0
/// stays positive.
struct QTensorParams {
  double a = 0.0;
  double b = 0.0;
  double c = 1.0;
  double a1 = 1.0;
  double C0 = 1.0;
  double L1 = 1.0;
  double L2 = 0.0;
  double L3 = 0.0;

  void validate() const;
};

/// Symmetric traceless 3x3 tensor field on a 3-D grid, stored in the
/// five-component chart x = (Q11, Q22, Q12, Q13, Q23); Q33 = -Q11 - Q22.
struct QTensorField {
  static constexpr int kComponents = 5;
  std::vector<Field> x;

  explicit QTensorField(std::shared_ptr<const Grid> grid);
  QTensorField() = default;
  const Grid& grid() const { return x[0].grid(); }
  std::shared_ptr<const Grid> grid_ptr() const { return x[0].grid_ptr(); }
  bool all_finite() const;
  double max_abs() const;
};

/// Pointwise tensor dot tr(A B) in chart coordinates; the integral version
/// is weighted by the cell volume.
double q_inner(const QTensorField& a, const QTensorField& b);
double q_l2_norm(const QTensorField& a);

/// Per-mode matrix of I + lambda (a1 + L1 |k|^2 + elastic coupling), acting
/// on the five chart coefficients at physical wavenumber k.
Eigen::Matrix<double, 5, 5> qtensor_mode_matrix(
    const std::array<double, 3>& k, double lambda, const QTensorParams& p);

/// E1 = int (f_b - a1/2 tr Q^2) + C0; throws if not positive.
double qtensor_e1(const QTensorParams& p, const QTensorField& q);
/// Chart components of the (traceless-projected) derivative of E1:
///   (a - a1) Q - b (Q^2 - tr(Q^2)/3 I) + c tr(Q^2) Q.
QTensorField qtensor_e1_derivative(const QTensorParams& p,
                                   const QTensorField& q);
/// L Q = a1 Q + dE_e/dQ, applied spectrally.
QTensorField apply_qtensor_l(const QTensorParams& p, const QTensorField& q);
/// Full free energy E_b + E_e.
double qtensor_energy(const QTensorParams& p, const QTensorField& q);

struct QSavState {
  std::vector<QTensorField> q;  // newest first
  std::vector<double> r;
  double t = 0.0;

  const QTensorField& current() const { return q.front(); }
};

QSavState qtensor_initialize(const QTensorParams& p, const QTensorField& q0,
                             double t0 = 0.0);

/// One SAV step of the L2 gradient flow dQ/dt = -dE/dQ. Supported schemes:
/// implicit Euler, Crank-Nicolson (half-step prediction when the history
/// has one level, extrapolation otherwise), and BDF2.
void step_qtensor(const QTensorParams& p, Scheme scheme, double dt,
                  QSavState& state);

/// 1/2 (Q, L Q) + r^2; BDF2 uses the two-level form.
double qtensor_modified_energy(const QTensorParams& p, Scheme scheme,
                               const QSavState& state);

struct QRunResult {
  QSavState state;
  std::vector<EnergyLedgerEntry> ledger;
};

QRunResult qtensor_run(const QTensorParams& p, Scheme scheme, double dt,
                       std::int64_t steps, const QTensorField& q0,
                       std::int64_t record_stride = 1);

}  // namespace savflow
