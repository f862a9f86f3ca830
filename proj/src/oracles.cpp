#include "savflow/oracles.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "savflow/fft.hpp"

namespace savflow {

namespace {

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

Field apply_gl_product(const Model& model, const Field& phi) {
  SpectralField f = transform_forward(phi);
  f.coeffs() *= (model.G.multipliers() * model.L.multipliers())
                    .cast<std::complex<double>>();
  return transform_backward(f);
}

Field nonlinear_term(const Model& model, const Field& phi) {
  return apply_symbol(model.G, model.u(phi));
}

}  // namespace

double phi_function(int k, double z) {
  if (k < 0) throw std::invalid_argument("phi_function: k >= 0");
  if (k == 0) return std::exp(z);
  if (std::abs(z) < 0.5) {
    // phi_k(z) = sum_{j>=0} z^j / (j+k)!
    double term = 1.0 / factorial(k);
    double sum = term;
    for (int j = 1; j < 40; ++j) {
      term *= z / (j + k);
      sum += term;
      if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return sum;
  }
  return (phi_function(k - 1, z) - 1.0 / factorial(k - 1)) / z;
}

Field etdrk4_run(const Model& model, const Field& phi0, double dt,
                 std::int64_t steps) {
  const Grid& g = *model.grid;
  const std::int64_t n = g.total_points();
  Eigen::ArrayXd lin = model.G.multipliers() * model.L.multipliers();

  Eigen::ArrayXd E(n), E2(n), Q(n), f1(n), f2(n), f3(n);
  for (std::int64_t i = 0; i < n; ++i) {
    double z = dt * lin[i];
    E[i] = std::exp(z);
    E2[i] = std::exp(0.5 * z);
    Q[i] = 0.5 * dt * phi_function(1, 0.5 * z);
    double p1 = phi_function(1, z);
    double p2 = phi_function(2, z);
    double p3 = phi_function(3, z);
    f1[i] = dt * (p1 - 3.0 * p2 + 4.0 * p3);
    f2[i] = dt * (p2 - 2.0 * p3);
    f3[i] = dt * (4.0 * p3 - p2);
  }

  auto to_hat = [](const Field& f) { return transform_forward(f).coeffs(); };
  auto from_hat = [&](const Eigen::ArrayXcd& c) {
    SpectralField s(model.grid, c);
    return transform_backward(s);
  };

  Eigen::ArrayXcd u = to_hat(phi0);
  for (std::int64_t s = 0; s < steps; ++s) {
    Eigen::ArrayXcd nu = to_hat(nonlinear_term(model, from_hat(u)));
    Eigen::ArrayXcd a = E2 * u + Q * nu;
    Eigen::ArrayXcd na = to_hat(nonlinear_term(model, from_hat(a)));
    Eigen::ArrayXcd b = E2 * u + Q * na;
    Eigen::ArrayXcd nb = to_hat(nonlinear_term(model, from_hat(b)));
    Eigen::ArrayXcd c = E2 * a + Q * (2.0 * nb - nu);
    Eigen::ArrayXcd nc = to_hat(nonlinear_term(model, from_hat(c)));
    u = E * u + f1 * nu + 2.0 * f2 * (na + nb) + f3 * nc;
  }
  Field out = from_hat(u);
  if (!out.all_finite())
    throw std::runtime_error("etdrk4_run: non-finite reference solution");
  return out;
}

namespace {

Eigen::MatrixXd assemble_operator(const Model& model, double c) {
  const std::int64_t n = model.grid->total_points();
  if (n > 4096)
    throw std::invalid_argument("dense oracle limited to 4096 unknowns");
  Eigen::MatrixXd A(n, n);
  Field e(model.grid);
  for (std::int64_t j = 0; j < n; ++j) {
    e.values().setZero();
    e.values()[j] = 1.0;
    Field col = apply_gl_product(model, e);
    A.col(j) = e.values().matrix() - c * col.values().matrix();
  }
  return A;
}

}  // namespace

Field dense_solve(const Model& model, double c, const Field& rhs) {
  Eigen::MatrixXd A = assemble_operator(model, c);
  Eigen::VectorXd x = A.partialPivLu().solve(rhs.values().matrix());
  return Field(rhs.grid_ptr(), x.array());
}

std::pair<Field, double> sav_step_dense(const Model& model, Scheme scheme,
                                        Predictor predictor, double dt,
                                        const SavState& state) {
  const std::int64_t n = model.grid->total_points();
  if (n > 4095)
    throw std::invalid_argument("dense oracle limited to 4096 unknowns");
  const double w = model.grid->cell_volume();

  double a0 = 1.0;
  std::vector<double> comb{1.0}, extrap{1.0};
  double theta = dt;  // coefficient of GL / Gb on the implicit side
  bool cn = scheme == Scheme::kCrankNicolson;
  switch (scheme) {
    case Scheme::kBackwardEuler: break;
    case Scheme::kCrankNicolson: theta = 0.5 * dt; break;
    case Scheme::kBdf2:
      a0 = 1.5; comb = {2.0, -0.5}; extrap = {2.0, -1.0}; break;
    case Scheme::kBdf3:
      a0 = 11.0 / 6.0; comb = {3.0, -1.5, 1.0 / 3.0};
      extrap = {3.0, -3.0, 1.0}; break;
    case Scheme::kBdf4:
      a0 = 25.0 / 12.0; comb = {4.0, -3.0, 4.0 / 3.0, -0.25};
      extrap = {4.0, -6.0, 4.0, -1.0}; break;
  }
  if (state.phi.size() < comb.size() || (cn && state.phi.size() < 1))
    throw std::invalid_argument("sav_step_dense: insufficient history");

  Eigen::ArrayXd phi_bar;
  if (cn) {
    if (predictor == Predictor::kExtrapolation) {
      if (state.phi.size() < 2)
        throw std::invalid_argument("sav_step_dense: insufficient history");
      phi_bar = 1.5 * state.phi[0].values() - 0.5 * state.phi[1].values();
    } else {
      Field f = model.u(state.phi[0]);
      Eigen::VectorXd rhs = state.phi[0].values().matrix() +
                            0.5 * dt *
                                apply_symbol(model.G, f).values().matrix();
      Eigen::MatrixXd A = assemble_operator(model, 0.5 * dt);
      phi_bar = A.partialPivLu().solve(rhs).array();
    }
  } else {
    if (predictor != Predictor::kExtrapolation)
      throw std::invalid_argument(
          "sav_step_dense: BDF supports extrapolation predictors only");
    phi_bar = extrap[0] * state.phi[0].values();
    for (std::size_t j = 1; j < extrap.size(); ++j)
      phi_bar += extrap[j] * state.phi[j].values();
  }
  Field pb(model.grid, phi_bar);
  double s = std::sqrt(model.sqrt_argument(pb));
  Eigen::ArrayXd b = model.u(pb).values() / s;
  Eigen::ArrayXd gb =
      apply_symbol(model.G, Field(model.grid, b)).values();

  // Coupled system in (phi, r).
  Eigen::MatrixXd M(n + 1, n + 1);
  Eigen::VectorXd rhs(n + 1);
  Eigen::MatrixXd A = assemble_operator(model, theta / (cn ? 1.0 : a0));
  if (cn) {
    M.topLeftCorner(n, n) = A;
    M.topRightCorner(n, 1) = (-theta * gb).matrix();
    Eigen::ArrayXd glphi = apply_gl_product(model, state.phi[0]).values();
    rhs.head(n) = (state.phi[0].values() + theta * glphi +
                   theta * state.r[0] * gb)
                      .matrix();
    // r -> r+ = r^n + 1/2 (b, phi+ - phi^n)
    M.bottomLeftCorner(1, n) = (-0.5 * w * b).matrix().transpose();
    M(n, n) = 1.0;
    rhs[n] = state.r[0] - 0.5 * w * (b * state.phi[0].values()).sum();
  } else {
    M.topLeftCorner(n, n) = a0 * A;  // a0 I - dt GL
    M.topRightCorner(n, 1) = (-dt * gb).matrix();
    Eigen::ArrayXd S = comb[0] * state.phi[0].values();
    double S_r = comb[0] * state.r[0];
    for (std::size_t j = 1; j < comb.size(); ++j) {
      S += comb[j] * state.phi[j].values();
      S_r += comb[j] * state.r[j];
    }
    rhs.head(n) = S.matrix();
    M.bottomLeftCorner(1, n) = (-0.5 * a0 * w * b).matrix().transpose();
    M(n, n) = a0;
    rhs[n] = S_r - 0.5 * w * (b * S).sum();
  }
  Eigen::VectorXd sol = M.partialPivLu().solve(rhs);
  return {Field(model.grid, sol.head(n).array()), sol[n]};
}

double convergence_slope(const std::vector<double>& dt,
                         const std::vector<double>& err) {
  if (dt.size() != err.size() || dt.size() < 2)
    throw std::invalid_argument("convergence_slope: need matching lists");
  const std::size_t n = dt.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double x = std::log(dt[i]);
    double y = std::log(err[i]);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double extract_radius(const Field& phi, double level) {
  std::int64_t inside = 0;
  for (std::int64_t i = 0; i < phi.grid().total_points(); ++i)
    if (phi.values()[i] > level) ++inside;
  double area = inside * phi.grid().cell_volume();
  return std::sqrt(area / M_PI);
}

void ssi_step(const Model& npfc, double dt, Field& phi, double a1, double a2,
              double a3) {
  auto it = npfc.params.find("eps");
  if (npfc.name != "npfc" || it == npfc.params.end())
    throw std::invalid_argument("ssi_step: expects the npfc model");
  const double eps = it->second;
  const Eigen::ArrayXd& lam = npfc.G.multipliers();
  Field cubed(phi.grid_ptr(), phi.values().cube());
  Eigen::ArrayXcd ph = transform_forward(phi).coeffs();
  Eigen::ArrayXcd ch = transform_forward(cubed).coeffs();
  // Implicit part: (1+a1)(1-eps) lam + (2-2 a2) lam^2 + (1+a3) lam^3.
  // Explicit part: -a1 (1-eps) lam + 2 a2 lam^2 - a3 lam^3, plus lam (phi^3).
  Eigen::ArrayXd implicit = dt * ((1.0 + a1) * (1.0 - eps) * lam +
                                  (2.0 - 2.0 * a2) * lam.square() +
                                  (1.0 + a3) * lam.cube());
  Eigen::ArrayXd explicit_part =
      dt * (-a1 * (1.0 - eps) * lam + 2.0 * a2 * lam.square() -
            a3 * lam.cube());
  Eigen::ArrayXcd out =
      (ph * (1.0 + explicit_part) + dt * lam * ch) / (1.0 - implicit);
  SpectralField sf(phi.grid_ptr(), std::move(out));
  phi = transform_backward(sf);
  if (!phi.all_finite())
    throw std::runtime_error("ssi_step: non-finite state");
}

}  // namespace savflow
