#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "savflow/model.hpp"
#include "savflow/nonlocal.hpp"
#include "savflow/random_field.hpp"
#include "savflow/symbol.hpp"

using namespace savflow;

namespace {

// Central-difference Gateaux derivative of a functional at phi along psi.
double gateaux(const std::function<double(const Field&)>& f, const Field& phi,
               const Field& psi, double h) {
  Field up(phi.grid_ptr(), phi.values() + h * psi.values());
  Field dn(phi.grid_ptr(), phi.values() - h * psi.values());
  return (f(up) - f(dn)) / (2.0 * h);
}

}  // namespace

TEST_CASE("gl model: energy of the zero state is the well depth") {
  auto g = make_grid({16, 16});  // box (2pi)^2
  Model m = gl_model(g, 0.1, 1.0, 1.0, 0.01);
  Field zero(g);
  EnergyReport r = energy(m, zero);
  CHECK(r.quadratic_part == doctest::Approx(0.0));
  // (0 - 1 - beta)^2 / (4 eps^2) * |box| = 4/(0.04) * 4 pi^2.
  CHECK(r.e1_part == doctest::Approx(100.0 * 4.0 * M_PI * M_PI).epsilon(1e-12));
  CHECK(r.total == doctest::Approx(r.e1_part));
  CHECK(variational_derivative(m, zero).max_abs() < 1e-12);
}

TEST_CASE("gl model: pure phases are local minima of the bulk term") {
  auto g = make_grid({8, 8});
  double beta = 0.5;
  Model m = gl_model(g, 0.2, beta, 0.0, 1.0);
  double root = std::sqrt(1.0 + beta);
  Field plus(g, Eigen::ArrayXd::Constant(g->total_points(), root));
  CHECK(m.e1(plus) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(m.u(plus).max_abs() < 1e-12);
}

TEST_CASE("gl model: beta only moves energy between the two parts") {
  auto g = make_grid({16, 16});
  Model a = gl_model(g, 0.1, 0.5, 1.0, 1.0);
  Model b = gl_model(g, 0.1, 1.5, 1.0, 1.0);
  double vol = g->box_volume();
  double shift = vol / (4.0 * 0.01) * (1.5 * 1.5 - 2.5 * 2.5);
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    Field phi = random_initial(g, seed, 0.8, 0.1);
    CHECK(energy(a, phi).total - energy(b, phi).total ==
          doctest::Approx(shift).epsilon(1e-10));
  }
}

TEST_CASE("gl model: dissipation symbol tracks the fractional exponent") {
  auto g = make_grid({16, 16});
  Model ac = gl_model(g, 0.1, 1.0, 0.0, 2.0);
  CHECK(ac.G.at(0) == doctest::Approx(-2.0));
  CHECK(ac.G.at(1) == doctest::Approx(-2.0));
  Model ch = gl_model(g, 0.1, 1.0, 1.0, 2.0);
  CHECK(ch.G.at(0) == 0.0);             // mass-conserving mechanism
  CHECK(ch.G.at(1) == doctest::Approx(-2.0));  // |k|^2 = 1 at mode (0,1)
  Model fr = gl_model(g, 0.1, 1.0, 0.5, 2.0);
  CHECK(fr.G.at(1) == doctest::Approx(-2.0));
  // L carries -Laplacian + beta/eps^2.
  CHECK(ac.L.at(0) == doctest::Approx(1.0 / 0.01));
  CHECK(ac.L.at(1) == doctest::Approx(1.0 + 1.0 / 0.01));
}

TEST_CASE("npfc model: operator identities and bulk quadrature") {
  auto g = make_grid({32, 32}, {50.0, 50.0});
  KernelSpec kern;
  double eps = 0.025;
  Model m = npfc_model(g, eps, kern);
  OperatorSymbol lam = symbol_nonlocal(g, kern);
  for (std::int64_t i = 0; i < g->total_points(); ++i) {
    double l = lam.at(i);
    CHECK(m.L.at(i) ==
          doctest::Approx((l + 1.0) * (l + 1.0)).epsilon(1e-12));
    CHECK(m.G.at(i) == doctest::Approx(std::min(l, 0.0)).epsilon(1e-12));
  }
  Field phi = random_initial(g, 11, 0.2, 0.07);
  double direct = g->cell_volume() * (0.25 * phi.values().pow(4) -
                                      0.5 * eps * phi.values().square())
                                         .sum();
  CHECK(m.e1(phi) == doctest::Approx(direct).epsilon(1e-12));
  Eigen::ArrayXd want = phi.values().cube() - eps * phi.values();
  CHECK((m.u(phi).values() - want).abs().maxCoeff() < 1e-12);
}

TEST_CASE("mbe model: closed-form energy of a single-mode profile") {
  auto g = make_grid({64, 64});
  double eta2 = 0.1, alpha = 0.05, C0 = 10.0;
  Model m = mbe_model(g, eta2, alpha, 1.0, C0);
  double A = 0.7;
  Eigen::ArrayXd v(g->total_points());
  for (std::int64_t i = 0; i < g->total_points(); ++i)
    v[i] = A * std::sin(g->coord(0, g->unflatten(i)[0]));
  Field phi(g, std::move(v));
  // int_0^{2pi} ln(1 + A^2 cos^2 x) dx = 2 pi ln((1 + sqrt(1+A^2))/2);
  // the y-direction contributes the 2 pi box factor. |Lap phi|^2
  // integrates to A^2 pi per y-slice.
  double log_term = -0.5 * 2.0 * kTwoPi *
                    std::log((1.0 + std::sqrt(1.0 + A * A)) / 2.0) * kTwoPi;
  double curv_term = 0.5 * alpha * A * A * M_PI * kTwoPi;
  CHECK(m.e1(phi) ==
        doctest::Approx(log_term + curv_term + C0).epsilon(1e-10));
  // Quadratic part holds the remaining (eta2 - alpha)|k|^4 piece.
  EnergyReport r = energy(m, phi);
  CHECK(r.quadratic_part ==
        doctest::Approx(0.5 * (eta2 - alpha) * A * A * M_PI * kTwoPi)
            .epsilon(1e-10));
  CHECK(m.params.at("eta2") == eta2);
}

TEST_CASE("mbe model rejects a bad split") {
  auto g = make_grid({8, 8});
  CHECK_THROWS(mbe_model(g, 0.1, 0.1, 1.0, 1.0));   // alpha == eta2
  CHECK_THROWS(mbe_model(g, 0.1, 0.05, 0.0, 1.0));  // zero mobility
}

TEST_CASE("variational derivative matches the Gateaux derivative of E") {
  auto g = make_grid({16, 16});
  std::vector<Model> models;
  models.push_back(gl_model(g, 0.2, 1.0, 1.0, 1.0));
  models.push_back(gl_model(g, 0.2, 0.5, 0.0, 1.0));
  models.push_back(mbe_model(g, 0.1, 0.05, 1.0, 10.0));
  auto gn = make_grid({16, 16}, {50.0, 50.0});
  models.push_back(npfc_model(gn, 0.025, KernelSpec{}));
  for (const Model& m : models) {
    Field phi = random_initial(m.grid, 21, 0.3, 0.05);
    Field psi = random_initial(m.grid, 22, 1.0, 0.0);
    double directional =
        inner_product(variational_derivative(m, phi), psi);
    auto etotal = [&](const Field& f) { return energy(m, f).total; };
    double fd = gateaux(etotal, phi, psi, 1e-5);
    CHECK(directional == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("bulk derivative u is the Gateaux derivative of E1, order 2") {
  auto g = make_grid({16, 16});
  Model m = mbe_model(g, 0.1, 0.05, 1.0, 10.0);
  Field phi = random_initial(g, 31, 0.3, 0.0);
  Field psi = random_initial(g, 32, 1.0, 0.0);
  double exact = inner_product(m.u(phi), psi);
  double e3 = std::abs(gateaux(m.e1, phi, psi, 1e-3) - exact);
  double e4 = std::abs(gateaux(m.e1, phi, psi, 1e-4) - exact);
  CHECK(e3 / e4 > 50.0);
  CHECK(e3 / e4 < 200.0);
}

TEST_CASE("sqrt_argument guards positivity") {
  auto g = make_grid({8, 8});
  Model m = gl_model(g, 0.2, 1.0, 1.0, 1.0);
  Field phi = random_initial(g, 3, 0.1, 0.0);
  CHECK(m.sqrt_argument(phi) ==
        doctest::Approx(m.e1(phi) + m.shift_delta).epsilon(1e-13));
  Model broken = m;
  broken.e1 = [](const Field&) { return -5.0; };
  broken.shift_delta = 1.0;
  CHECK_THROWS(broken.sqrt_argument(phi));
}

TEST_CASE("partial_derivative differentiates a plane wave exactly") {
  auto g = make_grid({32, 16}, {2.0, 1.0});
  Eigen::ArrayXd v(g->total_points());
  for (std::int64_t i = 0; i < g->total_points(); ++i) {
    auto idx = g->unflatten(i);
    v[i] = std::sin(2.0 * kTwoPi / 2.0 * g->coord(0, idx[0]));
  }
  Field f(g, std::move(v));
  Field d0 = partial_derivative(f, 0);
  for (std::int64_t i = 0; i < g->total_points(); ++i) {
    auto idx = g->unflatten(i);
    double want =
        2.0 * kTwoPi / 2.0 * std::cos(2.0 * kTwoPi / 2.0 * g->coord(0, idx[0]));
    CHECK(d0.values()[i] == doctest::Approx(want).epsilon(1e-10));
  }
  CHECK(partial_derivative(f, 1).max_abs() < 1e-10);
}
