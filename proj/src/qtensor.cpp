#include "savflow/qtensor.hpp"

#include <cmath>
#include <Eigen/Dense>

#include "savflow/fft.hpp"

namespace savflow {

namespace {

using Matrix5d = Eigen::Matrix<double, 5, 5>;

// Chart metric: tr(A B) = x_A^T W x_B for symmetric traceless tensors.
const double kW[5][5] = {{2, 1, 0, 0, 0},
                         {1, 2, 0, 0, 0},
                         {0, 0, 2, 0, 0},
                         {0, 0, 0, 2, 0},
                         {0, 0, 0, 0, 2}};

// Elastic coupling of d E_e/dQ in Fourier space, chart rows
// (11, 22, 12, 13, 23) after eliminating Q33 = -Q11 - Q22; the full
// coupling block of the operator is (L2+L3) * this matrix.
Matrix5d elastic_coupling(const std::array<double, 3>& k) {
  const double k1 = k[0], k2 = k[1], k3 = k[2];
  Matrix5d m;
  m << -(2.0 / 3) * k1 * k1 - (1.0 / 3) * k3 * k3,
      (1.0 / 3) * k2 * k2 - (1.0 / 3) * k3 * k3, -(1.0 / 3) * k1 * k2,
      -(1.0 / 3) * k1 * k3, (2.0 / 3) * k2 * k3,
      //
      (1.0 / 3) * k1 * k1 - (1.0 / 3) * k3 * k3,
      -(2.0 / 3) * k2 * k2 - (1.0 / 3) * k3 * k3, -(1.0 / 3) * k1 * k2,
      (2.0 / 3) * k1 * k3, -(1.0 / 3) * k2 * k3,
      //
      -0.5 * k1 * k2, -0.5 * k1 * k2, -0.5 * (k1 * k1 + k2 * k2),
      -0.5 * k2 * k3, -0.5 * k1 * k3,
      //
      0.0, 0.5 * k1 * k3, -0.5 * k2 * k3, -0.5 * (k1 * k1 + k3 * k3),
      -0.5 * k1 * k2,
      //
      0.5 * k2 * k3, 0.0, -0.5 * k1 * k3, -0.5 * k1 * k2,
      -0.5 * (k2 * k2 + k3 * k3);
  return m;
}

// (a1 + L1 |k|^2) I - (L2 + L3) * coupling: the symbol of L at mode k.
Matrix5d l_symbol(const std::array<double, 3>& k, const QTensorParams& p) {
  double k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
  return (p.a1 + p.L1 * k2) * Matrix5d::Identity() -
         (p.L2 + p.L3) * elastic_coupling(k);
}

std::array<double, 3> mode_wavenumber(const Grid& g, std::int64_t flat) {
  auto idx = g.unflatten(flat);
  std::array<double, 3> k{0.0, 0.0, 0.0};
  for (int d = 0; d < g.dim(); ++d) k[d] = g.wavenumber(d, idx[d]);
  return k;
}

// Apply a per-mode matrix function to the five spectral components.
template <typename MatrixFn>
QTensorField apply_per_mode(const QTensorField& q, MatrixFn&& fn) {
  const Grid& g = q.grid();
  std::array<Eigen::ArrayXcd, 5> hat;
  for (int c = 0; c < 5; ++c) hat[c] = transform_forward(q.x[c]).coeffs();
  for (std::int64_t flat = 0; flat < g.total_points(); ++flat) {
    Eigen::Matrix<double, 5, 2> v;
    for (int c = 0; c < 5; ++c) {
      v(c, 0) = hat[c][flat].real();
      v(c, 1) = hat[c][flat].imag();
    }
    Eigen::Matrix<double, 5, 2> w = fn(mode_wavenumber(g, flat), v);
    for (int c = 0; c < 5; ++c) hat[c][flat] = {w(c, 0), w(c, 1)};
  }
  QTensorField out(q.grid_ptr());
  for (int c = 0; c < 5; ++c) {
    SpectralField sf(q.grid_ptr(), std::move(hat[c]));
    out.x[c] = transform_backward(sf);
  }
  return out;
}

QTensorField q_solve(const QTensorParams& p, double lambda,
                     const QTensorField& rhs) {
  return apply_per_mode(rhs, [&](const std::array<double, 3>& k,
                                 const Eigen::Matrix<double, 5, 2>& v) {
    Eigen::Matrix<double, 5, 2> out =
        qtensor_mode_matrix(k, lambda, p).partialPivLu().solve(v);
    return out;
  });
}

QTensorField q_combine(const std::vector<QTensorField>& levels,
                       const std::vector<double>& w) {
  QTensorField out(levels[0].grid_ptr());
  for (int c = 0; c < 5; ++c) {
    out.x[c].values() = w[0] * levels[0].x[c].values();
    for (std::size_t j = 1; j < w.size(); ++j)
      out.x[c].values() += w[j] * levels[j].x[c].values();
  }
  return out;
}

void q_axpy(QTensorField& y, double a, const QTensorField& x) {
  for (int c = 0; c < 5; ++c) y.x[c].values() += a * x.x[c].values();
}

void check_q(const QTensorField& q) {
  if (!q.all_finite() || q.max_abs() > 1e8)
    throw BlowUpError("q-tensor solution blow-up detected");
}

struct BulkArrays {
  Eigen::ArrayXd t2, t3;
  std::array<Eigen::ArrayXd, 5> q2;  // chart of Q^2
};

BulkArrays bulk_invariants(const QTensorField& q) {
  const Eigen::ArrayXd& q1 = q.x[0].values();
  const Eigen::ArrayXd& q2 = q.x[1].values();
  const Eigen::ArrayXd& q3 = q.x[2].values();
  const Eigen::ArrayXd& q4 = q.x[3].values();
  const Eigen::ArrayXd& q5 = q.x[4].values();
  BulkArrays b;
  b.t2 = 2.0 * (q1.square() + q2.square() + q1 * q2 + q3.square() +
                q4.square() + q5.square());
  b.q2[0] = q1.square() + q3.square() + q4.square();
  b.q2[1] = q3.square() + q2.square() + q5.square();
  b.q2[2] = q1 * q3 + q3 * q2 + q4 * q5;
  b.q2[3] = q3 * q5 - q2 * q4;
  b.q2[4] = q3 * q4 - q1 * q5;
  Eigen::ArrayXd q33 = -(q1 + q2);
  Eigen::ArrayXd q2_33 = q4.square() + q5.square() + q33.square();
  b.t3 = b.q2[0] * q1 + b.q2[1] * q2 + q2_33 * q33 +
         2.0 * (b.q2[2] * q3 + b.q2[3] * q4 + b.q2[4] * q5);
  return b;
}

}  // namespace

void QTensorParams::validate() const {
  if (!(c > 0.0) || !(L1 > 0.0) || !(L1 + L2 + L3 > 0.0))
    throw std::invalid_argument(
        "QTensorParams: require c > 0, L1 > 0, L1 + L2 + L3 > 0");
  if (!(a1 > 0.0) || !(C0 > 0.0))
    throw std::invalid_argument("QTensorParams: require a1 > 0, C0 > 0");
}

QTensorField::QTensorField(std::shared_ptr<const Grid> grid) {
  if (grid->dim() != 3)
    throw std::invalid_argument("QTensorField: 3-D grid required");
  for (int c = 0; c < kComponents; ++c) x.emplace_back(grid);
}

bool QTensorField::all_finite() const {
  for (const Field& f : x)
    if (!f.all_finite()) return false;
  return true;
}

double QTensorField::max_abs() const {
  double m = 0.0;
  for (const Field& f : x) m = std::max(m, f.max_abs());
  return m;
}

double q_inner(const QTensorField& a, const QTensorField& b) {
  double s = 0.0;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      if (kW[i][j] != 0.0)
        s += kW[i][j] * (a.x[i].values() * b.x[j].values()).sum();
  return a.grid().cell_volume() * s;
}

double q_l2_norm(const QTensorField& a) { return std::sqrt(q_inner(a, a)); }

Eigen::Matrix<double, 5, 5> qtensor_mode_matrix(const std::array<double, 3>& k,
                                                double lambda,
                                                const QTensorParams& p) {
  return Matrix5d::Identity() + lambda * l_symbol(k, p);
}

double qtensor_e1(const QTensorParams& p, const QTensorField& q) {
  BulkArrays b = bulk_invariants(q);
  Eigen::ArrayXd density = 0.5 * (p.a - p.a1) * b.t2 - (p.b / 3.0) * b.t3 +
                           0.25 * p.c * b.t2.square();
  double e1 = q.grid().cell_volume() * density.sum() + p.C0;
  if (!(e1 > 0.0))
    throw std::runtime_error(
        "qtensor_e1: E1 not positive; increase C0 or lower a1");
  return e1;
}

QTensorField qtensor_e1_derivative(const QTensorParams& p,
                                   const QTensorField& q) {
  BulkArrays b = bulk_invariants(q);
  QTensorField out(q.grid_ptr());
  for (int c = 0; c < 5; ++c) {
    Eigen::ArrayXd v =
        (p.a - p.a1 + p.c * b.t2) * q.x[c].values() - p.b * b.q2[c];
    if (c < 2) v += (p.b / 3.0) * b.t2;  // traceless projection, diagonal rows
    out.x[c] = Field(q.grid_ptr(), std::move(v));
  }
  return out;
}

QTensorField apply_qtensor_l(const QTensorParams& p, const QTensorField& q) {
  return apply_per_mode(q, [&](const std::array<double, 3>& k,
                               const Eigen::Matrix<double, 5, 2>& v) {
    Eigen::Matrix<double, 5, 2> out = l_symbol(k, p) * v;
    return out;
  });
}

double qtensor_energy(const QTensorParams& p, const QTensorField& q) {
  // E = E_b + E_e = 1/2 (Q, L Q) + E1 - C0
  return 0.5 * q_inner(q, apply_qtensor_l(p, q)) + qtensor_e1(p, q) - p.C0;
}

QSavState qtensor_initialize(const QTensorParams& p, const QTensorField& q0,
                             double t0) {
  p.validate();
  check_q(q0);
  QSavState s;
  s.q.push_back(q0);
  s.r.push_back(std::sqrt(qtensor_e1(p, q0)));
  s.t = t0;
  return s;
}

void step_qtensor(const QTensorParams& p, Scheme scheme, double dt,
                  QSavState& state) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_qtensor: dt must be > 0");
  const QTensorField& qn = state.q[0];

  double a0 = 1.0;
  std::vector<double> comb{1.0};
  bool cn = scheme == Scheme::kCrankNicolson;
  switch (scheme) {
    case Scheme::kBackwardEuler:
    case Scheme::kCrankNicolson: break;
    case Scheme::kBdf2: a0 = 1.5; comb = {2.0, -0.5}; break;
    default:
      throw std::invalid_argument(
          "step_qtensor: scheme not supported for the q-tensor flow");
  }
  if (state.q.size() < (cn ? 1 : comb.size()))
    throw std::invalid_argument("step_qtensor: insufficient history");

  QTensorField q_bar(qn.grid_ptr());
  if (cn) {
    if (state.q.size() >= 2) {
      q_bar = q_combine(state.q, {1.5, -0.5});
    } else {
      // stabilized half-step prediction
      QTensorField rhs = qn;
      QTensorField un = qtensor_e1_derivative(p, qn);
      q_axpy(rhs, -0.5 * dt, un);
      q_bar = q_solve(p, 0.5 * dt, rhs);
    }
  } else if (scheme == Scheme::kBackwardEuler) {
    q_bar = qn;
  } else {
    q_bar = q_combine(state.q, {2.0, -1.0});
  }

  double s = std::sqrt(qtensor_e1(p, q_bar));
  QTensorField b = qtensor_e1_derivative(p, q_bar);
  for (int c = 0; c < 5; ++c) b.x[c].values() /= s;

  QTensorField q_next(qn.grid_ptr());
  double r_next = 0.0;
  if (cn) {
    const double lambda = 0.5 * dt;
    double b_qn = q_inner(b, qn);
    QTensorField lqn = apply_qtensor_l(p, qn);
    QTensorField rhs = qn;
    q_axpy(rhs, -lambda, lqn);
    q_axpy(rhs, -dt * (state.r[0] - 0.25 * b_qn), b);
    QTensorField z1 = q_solve(p, lambda, rhs);
    QTensorField z2 = q_solve(p, lambda, b);
    double b_z2 = q_inner(b, z2);
    if (b_z2 < -1e-10 * (1.0 + std::abs(b_z2)))
      throw std::logic_error("step_qtensor: (b, A^{-1} b) must be >= 0");
    double b_q = q_inner(b, z1) / (1.0 + 0.25 * dt * b_z2);
    q_next = z1;
    q_axpy(q_next, -0.25 * dt * b_q, z2);
    r_next = state.r[0] + 0.5 * (b_q - b_qn);
  } else {
    const double lambda = dt / a0;
    QTensorField S = q_combine(state.q, comb);
    double S_r = 0.0;
    for (std::size_t j = 0; j < comb.size(); ++j) S_r += comb[j] * state.r[j];
    double b_S = q_inner(b, S);
    QTensorField rhs(qn.grid_ptr());
    for (int c = 0; c < 5; ++c) rhs.x[c].values() = S.x[c].values() / a0;
    q_axpy(rhs, -lambda * (S_r / a0 - b_S / (2.0 * a0)), b);
    QTensorField z1 = q_solve(p, lambda, rhs);
    QTensorField z2 = q_solve(p, lambda, b);
    double b_z2 = q_inner(b, z2);
    if (b_z2 < -1e-10 * (1.0 + std::abs(b_z2)))
      throw std::logic_error("step_qtensor: (b, A^{-1} b) must be >= 0");
    double b_q = q_inner(b, z1) / (1.0 + dt / (2.0 * a0) * b_z2);
    q_next = z1;
    q_axpy(q_next, -dt / (2.0 * a0) * b_q, z2);
    r_next = S_r / a0 + 0.5 * b_q - b_S / (2.0 * a0);
  }

  check_q(q_next);
  state.q.insert(state.q.begin(), std::move(q_next));
  state.r.insert(state.r.begin(), r_next);
  if (state.q.size() > 2) {
    state.q.pop_back();
    state.r.pop_back();
  }
  state.t += dt;
}

double qtensor_modified_energy(const QTensorParams& p, Scheme scheme,
                               const QSavState& state) {
  const QTensorField& q0 = state.q[0];
  double r0 = state.r[0];
  if (scheme == Scheme::kBdf2) {
    const QTensorField& q1 = state.q.size() > 1 ? state.q[1] : state.q[0];
    double r1 = state.r.size() > 1 ? state.r[1] : state.r[0];
    QTensorField w = q_combine({q0, q1}, {2.0, -1.0});
    double quad = 0.25 * (q_inner(q0, apply_qtensor_l(p, q0)) +
                          q_inner(w, apply_qtensor_l(p, w)));
    return quad + 0.5 * (r0 * r0 + (2.0 * r0 - r1) * (2.0 * r0 - r1));
  }
  return 0.5 * q_inner(q0, apply_qtensor_l(p, q0)) + r0 * r0;
}

QRunResult qtensor_run(const QTensorParams& p, Scheme scheme, double dt,
                       std::int64_t steps, const QTensorField& q0,
                       std::int64_t record_stride) {
  auto entry = [&](const QSavState& st, std::int64_t step) {
    EnergyLedgerEntry e;
    e.step = step;
    e.t = st.t;
    e.dt = dt;
    e.e_original = qtensor_energy(p, st.current());
    e.e_modified = qtensor_modified_energy(p, scheme, st);
    e.residual = std::abs(st.r[0] - std::sqrt(qtensor_e1(p, st.current())));
    e.mass = 0.0;
    return e;
  };
  QRunResult out;
  out.state = qtensor_initialize(p, q0);
  out.ledger.push_back(entry(out.state, 0));
  for (std::int64_t n = 0; n < steps; ++n) {
    Scheme s = scheme;
    if (scheme == Scheme::kBdf2 && out.state.q.size() < 2)
      s = Scheme::kCrankNicolson;
    step_qtensor(p, s, dt, out.state);
    if ((n + 1) % record_stride == 0 || n + 1 == steps)
      out.ledger.push_back(entry(out.state, n + 1));
  }
  return out;
}

}  // namespace savflow
