#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include <Eigen/Dense>

#include "savflow/multicomponent.hpp"
#include "savflow/random_field.hpp"

using namespace savflow;

namespace {

MultiField random_multi(std::shared_ptr<const Grid> g, int k,
                        std::uint64_t seed) {
  MultiField f;
  for (int i = 0; i < k; ++i)
    f.comp.push_back(random_initial(g, seed + (std::uint64_t)i, 0.2, 0.0));
  return f;
}

}  // namespace

TEST_CASE("coupling matrix eigendecomposition") {
  Eigen::MatrixXd d(2, 2);
  d << 2.0, 1.0, 1.0, 2.0;
  CouplingMatrix D(d);
  Eigen::VectorXd lam = D.eigenvalues();
  std::vector<double> sorted{lam[0], lam[1]};
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sorted[1] == doctest::Approx(3.0).epsilon(1e-12));
  // Reconstruction E diag(lambda) E^T == D.
  Eigen::MatrixXd rec = D.eigenvectors() * lam.asDiagonal() *
                        D.eigenvectors().transpose();
  CHECK((rec - d).cwiseAbs().maxCoeff() < 1e-12);
  // Eigenvectors orthonormal.
  Eigen::MatrixXd eye =
      D.eigenvectors().transpose() * D.eigenvectors();
  CHECK((eye - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() <
        1e-12);
}

TEST_CASE("coupling matrix rejects asymmetric or indefinite input") {
  Eigen::MatrixXd bad(2, 2);
  bad << 1.0, 2.0, 0.0, 1.0;
  CHECK_THROWS(CouplingMatrix(bad));
  Eigen::MatrixXd neg(2, 2);
  neg << 1.0, 3.0, 3.0, 1.0;  // eigenvalues 4, -2
  CHECK_THROWS(CouplingMatrix(neg));
}

TEST_CASE("k=1 with D=[1] reduces to the scalar model") {
  auto g = make_grid({8, 8});
  Eigen::MatrixXd d(1, 1);
  d << 1.0;
  MultiModel mm = multi_gl_model(g, CouplingMatrix(d), 0.3, 1.0, 1.0, 1.0);
  Model sm = gl_model(g, 0.3, 1.0, 1.0, 1.0);

  MultiField phi = random_multi(g, 1, 41);
  CHECK(multi_original_energy(mm, phi) ==
        doctest::Approx(energy(sm, phi.comp[0]).total).epsilon(1e-12));

  MultiSavState mst = multi_initialize(mm, phi);
  SavState sst = sav_initialize(sm, phi.comp[0]);
  CHECK(mst.r[0] == doctest::Approx(sst.r[0]).epsilon(1e-13));
  step_cn_multi(mm, 1e-3, mst);
  sav_step(sm, Scheme::kCrankNicolson, Predictor::kSubstep, 1e-3, sst);
  CHECK((mst.current().comp[0].values() - sst.current().values())
            .abs()
            .maxCoeff() < 1e-11);
  CHECK(mst.r[0] == doctest::Approx(sst.r[0]).epsilon(1e-10));
}

TEST_CASE("diagonal coupling decouples the components") {
  auto g = make_grid({8, 8});
  Eigen::MatrixXd d = Eigen::MatrixXd::Identity(2, 2);
  d(1, 1) = 1.0;
  MultiModel mm = multi_gl_model(g, CouplingMatrix(d), 0.3, 1.0, 1.0, 1.0);
  MultiField rhs = random_multi(g, 2, 57);
  MultiField x = multi_solve(mm, 0.07, rhs);
  // Identity coupling: each component solves the scalar problem alone.
  Model sm = gl_model(g, 0.3, 1.0, 1.0, 1.0);
  for (int i = 0; i < 2; ++i) {
    Field xi = solve_constant_coeff(sm, 0.07, rhs.comp[i]);
    CHECK((x.comp[i].values() - xi.values()).abs().maxCoeff() < 1e-11);
  }
}

TEST_CASE("multi_solve inverts (I - c G L D) against dense assembly") {
  auto g = make_grid({8, 8});  // 64 points x 2 components = 128 unknowns
  Eigen::MatrixXd d(2, 2);
  d << 2.0, 1.0, 1.0, 2.0;
  MultiModel mm = multi_gl_model(g, CouplingMatrix(d), 0.3, 1.0, 1.0, 1.0);
  const std::int64_t n = g->total_points();
  double c = 0.05;

  auto apply_op = [&](const Eigen::VectorXd& v) {
    // (I - c G L D) stacked componentwise.
    MultiField f;
    for (int i = 0; i < 2; ++i)
      f.comp.emplace_back(g, Eigen::ArrayXd(v.segment(i * n, n).array()));
    Eigen::VectorXd out(2 * n);
    for (int i = 0; i < 2; ++i) {
      Eigen::ArrayXd mix = Eigen::ArrayXd::Zero(n);
      for (int j = 0; j < 2; ++j)
        mix += d(i, j) * apply_symbol(mm.L, f.comp[j]).values();
      Eigen::ArrayXd gl =
          apply_symbol(mm.G, Field(g, mix)).values();
      out.segment(i * n, n) = (f.comp[i].values() - c * gl).matrix();
    }
    return out;
  };
  Eigen::MatrixXd M(2 * n, 2 * n);
  for (std::int64_t col = 0; col < 2 * n; ++col)
    M.col(col) = apply_op(Eigen::VectorXd::Unit(2 * n, col));

  MultiField rhs = random_multi(g, 2, 3);
  Eigen::VectorXd rv(2 * n);
  for (int i = 0; i < 2; ++i)
    rv.segment(i * n, n) = rhs.comp[i].values().matrix();
  Eigen::VectorXd xd = M.partialPivLu().solve(rv);

  MultiField x = multi_solve(mm, c, rhs);
  for (int i = 0; i < 2; ++i)
    CHECK((x.comp[i].values() - xd.segment(i * n, n).array())
              .abs()
              .maxCoeff() <= 1e-10 * (1.0 + xd.cwiseAbs().maxCoeff()));
}

TEST_CASE("coupled flow dissipates the modified energy and conserves mass") {
  auto g = make_grid({16, 16});
  Eigen::MatrixXd d(2, 2);
  d << 2.0, 1.0, 1.0, 2.0;
  MultiModel mm = multi_gl_model(g, CouplingMatrix(d), 0.3, 1.0, 1.0, 1.0);
  MultiField phi = random_multi(g, 2, 77);
  MultiSavState st = multi_initialize(mm, phi);
  double m0 = field_mean(phi.comp[0]);
  double m1 = field_mean(phi.comp[1]);
  double prev = multi_modified_energy(mm, st);
  for (double dt : {1e-3, 0.1, 1.0}) {
    for (int k = 0; k < 30; ++k) {
      step_cn_multi(mm, dt, st);
      double now = multi_modified_energy(mm, st);
      CHECK(now <= prev + 1e-10 * (1.0 + std::abs(prev)));
      prev = now;
    }
  }
  CHECK(field_mean(st.current().comp[0]) == doctest::Approx(m0).epsilon(1e-12));
  CHECK(field_mean(st.current().comp[1]) == doctest::Approx(m1).epsilon(1e-12));
}
