#include "savflow/multicomponent.hpp"

#include <cmath>

#include "savflow/fft.hpp"

namespace savflow {

namespace {

constexpr double kJacobiTol = 1e-14;
constexpr int kJacobiSweeps = 64;

// Cyclic Jacobi rotations; deterministic sweep order, so the factors are
// reproducible across platforms.
void jacobi_eigen(const Eigen::MatrixXd& in, Eigen::MatrixXd& vec,
                  Eigen::VectorXd& val) {
  const int n = static_cast<int>(in.rows());
  Eigen::MatrixXd a = in;
  vec = Eigen::MatrixXd::Identity(n, n);
  for (int sweep = 0; sweep < kJacobiSweeps; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(off) <= kJacobiTol * (1.0 + a.diagonal().cwiseAbs().maxCoeff()))
      break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) <= kJacobiTol * 1e-2) continue;
        double theta = 0.5 * (a(q, q) - a(p, p)) / a(p, q);
        double t = (theta >= 0.0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        Eigen::MatrixXd j = Eigen::MatrixXd::Identity(n, n);
        j(p, p) = c; j(q, q) = c; j(p, q) = s; j(q, p) = -s;
        a = j.transpose() * a * j;
        vec = vec * j;
      }
    }
  }
  val = a.diagonal();
}

}  // namespace

CouplingMatrix::CouplingMatrix(Eigen::MatrixXd d) : d_(std::move(d)) {
  if (d_.rows() != d_.cols() || d_.rows() < 1)
    throw std::invalid_argument("CouplingMatrix: square matrix required");
  if (!d_.isApprox(d_.transpose(), 1e-12))
    throw std::invalid_argument("CouplingMatrix: matrix must be symmetric");
  jacobi_eigen(d_, e_, lambda_);
  if ((lambda_.array() < -1e-12).any())
    throw std::invalid_argument(
        "CouplingMatrix: matrix must be positive semidefinite");
  lambda_ = lambda_.cwiseMax(0.0);
}

bool MultiField::all_finite() const {
  for (const Field& f : comp)
    if (!f.all_finite()) return false;
  return true;
}

double MultiField::max_abs() const {
  double m = 0.0;
  for (const Field& f : comp) m = std::max(m, f.max_abs());
  return m;
}

double MultiModel::sqrt_argument(const MultiField& phi) const {
  double arg = e1(phi) + shift_delta;
  if (!(arg > 0.0))
    throw std::runtime_error("multi model '" + name +
                             "': E1 + shift not positive");
  return arg;
}

MultiSavState multi_initialize(const MultiModel& model,
                               const MultiField& phi0, double t0) {
  if (phi0.components() != model.D.size())
    throw std::invalid_argument("multi_initialize: component count mismatch");
  for (const Field& f : phi0.comp)
    if (f.grid() != *model.grid)
      throw std::invalid_argument("multi_initialize: field off the grid");
  MultiSavState s;
  s.phi.push_back(phi0);
  s.r.push_back(std::sqrt(model.sqrt_argument(phi0)));
  s.t = t0;
  return s;
}

namespace {

MultiField rotate(const Eigen::MatrixXd& m, const MultiField& f) {
  const int k = f.components();
  MultiField out;
  for (int i = 0; i < k; ++i) {
    Eigen::ArrayXd v = m(0, i) * f.comp[0].values();
    for (int j = 1; j < k; ++j) v += m(j, i) * f.comp[j].values();
    out.comp.emplace_back(f.comp[0].grid_ptr(), std::move(v));
  }
  return out;
}

double multi_dot(const MultiField& a, const MultiField& b) {
  double s = 0.0;
  for (int i = 0; i < a.components(); ++i)
    s += inner_product(a.comp[i], b.comp[i]);
  return s;
}

MultiField apply_g(const MultiModel& model, const MultiField& f) {
  MultiField out;
  for (const Field& c : f.comp) out.comp.push_back(apply_symbol(model.G, c));
  return out;
}

// G L D applied block-wise through the eigenbasis of D.
MultiField apply_gld(const MultiModel& model, const MultiField& f) {
  MultiField psi = rotate(model.D.eigenvectors(), f);
  for (int i = 0; i < psi.components(); ++i) {
    SpectralField h = transform_forward(psi.comp[i]);
    h.coeffs() *= (model.D.eigenvalues()[i] * model.G.multipliers() *
                   model.L.multipliers())
                      .cast<std::complex<double>>();
    psi.comp[i] = transform_backward(h);
  }
  return rotate(model.D.eigenvectors().transpose(), psi);
}

}  // namespace

MultiField multi_solve(const MultiModel& model, double c,
                       const MultiField& rhs) {
  MultiField psi = rotate(model.D.eigenvectors(), rhs);
  for (int i = 0; i < psi.components(); ++i) {
    SpectralField h = transform_forward(psi.comp[i]);
    Eigen::ArrayXd m = 1.0 - c * model.D.eigenvalues()[i] *
                                 model.G.multipliers() *
                                 model.L.multipliers();
    h.coeffs() /= m.cast<std::complex<double>>();
    psi.comp[i] = transform_backward(h);
  }
  return rotate(model.D.eigenvectors().transpose(), psi);
}

void step_cn_multi(const MultiModel& model, double dt, MultiSavState& state) {
  if (!(dt > 0.0))
    throw std::invalid_argument("step_cn_multi: dt must be > 0");
  const MultiField& phi_n = state.phi[0];
  const int k = phi_n.components();

  MultiField phi_bar;
  if (state.phi.size() >= 2) {
    for (int i = 0; i < k; ++i)
      phi_bar.comp.emplace_back(
          phi_n.comp[i].grid_ptr(),
          1.5 * state.phi[0].comp[i].values() -
              0.5 * state.phi[1].comp[i].values());
  } else {
    MultiField f = apply_g(model, model.u(phi_n));
    MultiField rhs;
    for (int i = 0; i < k; ++i)
      rhs.comp.emplace_back(phi_n.comp[i].grid_ptr(),
                            phi_n.comp[i].values() +
                                (0.5 * dt) * f.comp[i].values());
    phi_bar = multi_solve(model, 0.5 * dt, rhs);
  }

  double s = std::sqrt(model.sqrt_argument(phi_bar));
  MultiField b = model.u(phi_bar);
  for (Field& c : b.comp) c.values() /= s;
  MultiField gb = apply_g(model, b);

  double b_phin = multi_dot(b, phi_n);
  MultiField gld = apply_gld(model, phi_n);
  MultiField rhs;
  for (int i = 0; i < k; ++i)
    rhs.comp.emplace_back(
        phi_n.comp[i].grid_ptr(),
        phi_n.comp[i].values() + (0.5 * dt) * gld.comp[i].values() +
            dt * (state.r[0] - 0.25 * b_phin) * gb.comp[i].values());

  MultiField z1 = multi_solve(model, 0.5 * dt, rhs);
  MultiField z2 = multi_solve(model, 0.5 * dt, gb);
  double b_z2 = multi_dot(b, z2);
  if (b_z2 > 1e-10 * (1.0 + std::abs(b_z2)))
    throw std::logic_error("step_cn_multi: (b, A^{-1} G b) must be <= 0");
  double sigma = multi_dot(b, z1) / (1.0 - 0.25 * dt * b_z2);
  for (int i = 0; i < k; ++i)
    z1.comp[i].values() += (0.25 * dt * sigma) * z2.comp[i].values();
  double r_next = state.r[0] + 0.5 * (sigma - b_phin);

  if (!z1.all_finite() || z1.max_abs() > 1e8)
    throw BlowUpError("step_cn_multi: solution blow-up detected");
  state.phi.insert(state.phi.begin(), std::move(z1));
  state.r.insert(state.r.begin(), r_next);
  if (state.phi.size() > 2) {
    state.phi.pop_back();
    state.r.pop_back();
  }
  state.t += dt;
}

double multi_original_energy(const MultiModel& model, const MultiField& phi) {
  double quad = 0.0;
  for (int i = 0; i < phi.components(); ++i) {
    Field lphi = apply_symbol(model.L, phi.comp[i]);
    for (int j = 0; j < phi.components(); ++j)
      quad += 0.5 * model.D.matrix()(i, j) *
              inner_product(phi.comp[j], lphi);
  }
  return quad + model.e1(phi);
}

double multi_modified_energy(const MultiModel& model,
                             const MultiSavState& state) {
  const MultiField& phi = state.current();
  double quad = 0.0;
  for (int i = 0; i < phi.components(); ++i) {
    Field lphi = apply_symbol(model.L, phi.comp[i]);
    for (int j = 0; j < phi.components(); ++j)
      quad += 0.5 * model.D.matrix()(i, j) *
              inner_product(phi.comp[j], lphi);
  }
  return quad + state.r[0] * state.r[0];
}

MultiModel multi_gl_model(std::shared_ptr<const Grid> grid,
                          CouplingMatrix D, double eps, double beta,
                          double s, double gamma) {
  if (!(eps > 0.0) || !(gamma > 0.0))
    throw std::invalid_argument("multi_gl_model: parameter out of range");
  const double eps2 = eps * eps;
  OperatorSymbol L = symbol_from_wavenumbers(
      grid,
      [beta, eps2](const std::array<double, 3>& k) {
        return k[0] * k[0] + k[1] * k[1] + k[2] * k[2] + beta / eps2;
      },
      SymbolSign::kNonnegative);
  OperatorSymbol G = OperatorSymbol(
      grid, -gamma * symbol_fractional_laplacian(grid, s).multipliers(),
      SymbolSign::kNonpositive);
  MultiModel m{"multi_gl", grid, std::move(L), std::move(G), std::move(D),
               {}, {}, 1.0};
  m.e1 = [eps2, beta](const MultiField& phi) {
    double sum = 0.0;
    for (const Field& f : phi.comp) {
      Eigen::ArrayXd w = f.values().square() - (1.0 + beta);
      sum += f.grid().cell_volume() * w.square().sum() / (4.0 * eps2);
    }
    return sum;
  };
  m.u = [eps2, beta](const MultiField& phi) {
    MultiField out;
    for (const Field& f : phi.comp)
      out.comp.emplace_back(
          f.grid_ptr(),
          f.values() * (f.values().square() - (1.0 + beta)) / eps2);
    return out;
  };
  return m;
}

}  // namespace savflow
