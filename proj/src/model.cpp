#include "savflow/model.hpp"

#include <cmath>

namespace savflow {

double Model::sqrt_argument(const Field& phi) const {
  double arg = e1(phi) + shift_delta;
  if (!(arg > 0.0))
    throw std::runtime_error("model '" + name +
                             "': E1 + shift not positive (got " +
                             std::to_string(arg) + ")");
  return arg;
}

Field partial_derivative(const Field& f, int d) {
  SpectralField fh = transform_forward(f);
  const Grid& g = f.grid();
  const std::complex<double> I(0.0, 1.0);
  for (std::int64_t flat = 0; flat < g.total_points(); ++flat) {
    auto idx = g.unflatten(flat);
    // Zero the Nyquist mode of the first derivative so the result of an
    // odd-order derivative of a real field stays real.
    int m = g.freq_index(d, idx[d]);
    double k = (2 * m == g.points(d)) ? 0.0 : g.wavenumber(d, idx[d]);
    fh.coeffs()[flat] *= I * k;
  }
  return transform_backward(fh);
}

Model gl_model(std::shared_ptr<const Grid> grid, double eps, double beta,
               double s, double gamma) {
  if (!(eps > 0.0) || !(beta > 0.0) || !(gamma > 0.0) || s < 0.0 || s > 1.0)
    throw std::invalid_argument("gl_model: parameter out of range");
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
  Model m{"gl", grid, std::move(L), std::move(G), {}, {}};
  m.e1 = [eps2, beta](const Field& phi) {
    Eigen::ArrayXd w = phi.values().square() - (1.0 + beta);
    return phi.grid().cell_volume() * w.square().sum() / (4.0 * eps2);
  };
  m.u = [eps2, beta](const Field& phi) {
    return Field(phi.grid_ptr(),
                 phi.values() * (phi.values().square() - (1.0 + beta)) / eps2);
  };
  m.params = {{"eps", eps}, {"beta", beta}, {"s", s}, {"gamma", gamma}};
  return m;
}

Model npfc_model(std::shared_ptr<const Grid> grid, double eps,
                 const KernelSpec& kernel) {
  OperatorSymbol Ld = symbol_nonlocal(grid, kernel);
  // Quadrature round-off can leave entries a hair above zero; clamp so
  // G stays nonpositive and L = (Ld+1)^2 is exact at mode 0.
  Eigen::ArrayXd lam = Ld.multipliers().min(0.0);
  OperatorSymbol G(grid, lam, SymbolSign::kNonpositive);
  OperatorSymbol L(grid, (lam + 1.0).square(), SymbolSign::kNonnegative);
  Model m{"npfc", grid, std::move(L), std::move(G), {}, {}};
  m.e1 = [eps](const Field& phi) {
    const Eigen::ArrayXd& v = phi.values();
    return phi.grid().cell_volume() *
           (0.25 * v.square().square() - 0.5 * eps * v.square()).sum();
  };
  m.u = [eps](const Field& phi) {
    return Field(phi.grid_ptr(),
                 phi.values().cube() - eps * phi.values());
  };
  m.params = {{"eps", eps},       {"c1", kernel.c1},
              {"c2", kernel.c2},  {"alpha1", kernel.alpha1},
              {"alpha2", kernel.alpha2}, {"delta", kernel.delta}};
  return m;
}

namespace {

std::vector<Field> gradient(const Field& f) {
  std::vector<Field> g;
  for (int d = 0; d < f.grid().dim(); ++d)
    g.push_back(partial_derivative(f, d));
  return g;
}

Eigen::ArrayXd grad_norm2(const std::vector<Field>& g) {
  Eigen::ArrayXd s = g[0].values().square();
  for (std::size_t d = 1; d < g.size(); ++d) s += g[d].values().square();
  return s;
}

}  // namespace

Model mbe_model(std::shared_ptr<const Grid> grid, double eta2, double alpha,
                double mobility, double C0) {
  if (!(alpha > 0.0) || !(alpha < eta2))
    throw std::invalid_argument("mbe_model: require 0 < alpha < eta2");
  if (!(mobility > 0.0) || !(C0 > 0.0))
    throw std::invalid_argument("mbe_model: mobility and C0 must be positive");
  OperatorSymbol L = symbol_from_wavenumbers(
      grid,
      [eta2, alpha](const std::array<double, 3>& k) {
        double k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        return (eta2 - alpha) * k2 * k2;
      },
      SymbolSign::kNonnegative);
  OperatorSymbol G = symbol_constant(grid, -mobility);
  OperatorSymbol lap = symbol_from_wavenumbers(
      grid, [](const std::array<double, 3>& k) {
        return -(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]);
      });
  Model m{"mbe", grid, std::move(L), std::move(G), {}, {}};
  m.e1 = [alpha, C0, lap](const Field& phi) {
    Eigen::ArrayXd g2 = grad_norm2(gradient(phi));
    Field lp = apply_symbol(lap, phi);
    Eigen::ArrayXd density =
        -0.5 * (1.0 + g2).log() + 0.5 * alpha * lp.values().square();
    return phi.grid().cell_volume() * density.sum() + C0;
  };
  m.u = [alpha, lap](const Field& phi) {
    auto g = gradient(phi);
    Eigen::ArrayXd denom = 1.0 + grad_norm2(g);
    Field div(phi.grid_ptr());
    for (int d = 0; d < phi.grid().dim(); ++d) {
      Field q(phi.grid_ptr(), g[d].values() / denom);
      div.values() += partial_derivative(q, d).values();
    }
    Field bilap = apply_symbol(lap, apply_symbol(lap, phi));
    return Field(phi.grid_ptr(), alpha * bilap.values() + div.values());
  };
  m.params = {{"eta2", eta2}, {"alpha", alpha}, {"mobility", mobility}, {"C0", C0}};
  return m;
}

Model split_nonlocal(std::shared_ptr<const Grid> grid, std::string name,
                     const OperatorSymbol& L_local, const OperatorSymbol& G,
                     const OperatorSymbol& Ln1, const OperatorSymbol& Ln2,
                     std::function<double(double)> F_density,
                     std::function<double(double)> f_derivative,
                     double shift_delta) {
  if ((Ln1.multipliers() < -1e-12).any())
    throw std::invalid_argument("split_nonlocal: L_n1 must be nonnegative");
  OperatorSymbol L(grid, L_local.multipliers() + Ln1.multipliers(),
                   SymbolSign::kNonnegative);
  Model m{std::move(name), grid, std::move(L), G, {}, {}};
  OperatorSymbol Ln2c = Ln2;
  m.e1 = [Ln2c, F_density](const Field& phi) {
    Field lphi = apply_symbol(Ln2c, phi);
    double quad = 0.5 * inner_product(phi, lphi);
    double nl = phi.grid().cell_volume() *
                phi.values().unaryExpr(F_density).sum();
    return quad + nl;
  };
  m.u = [Ln2c, f_derivative](const Field& phi) {
    Field lphi = apply_symbol(Ln2c, phi);
    return Field(phi.grid_ptr(),
                 lphi.values() + phi.values().unaryExpr(f_derivative));
  };
  m.shift_delta = shift_delta;
  return m;
}

EnergyReport energy(const Model& model, const Field& phi) {
  if (phi.grid() != *model.grid)
    throw std::invalid_argument("energy: field not on model grid");
  EnergyReport rep;
  rep.quadratic_part = 0.5 * inner_product(phi, apply_symbol(model.L, phi));
  rep.e1_part = model.e1(phi);
  rep.total = rep.quadratic_part + rep.e1_part;
  if (!std::isfinite(rep.total))
    throw std::runtime_error("energy: non-finite (blow-up)");
  return rep;
}

Field variational_derivative(const Model& model, const Field& phi) {
  Field lphi = apply_symbol(model.L, phi);
  Field u = model.u(phi);
  return Field(model.grid, lphi.values() + u.values());
}

}  // namespace savflow
