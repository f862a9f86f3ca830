#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "savflow/adaptive.hpp"
#include "savflow/model.hpp"
#include "savflow/random_field.hpp"

using namespace savflow;

TEST_CASE("adp_update formula and clamps") {
  AdaptiveConfig c;
  c.rho = 0.9;
  c.tol = 1e-3;
  c.tau_min = 1e-5;
  c.tau_max = 1e-2;
  // Mid-range: rho * sqrt(tol/e) * tau.
  double tau = adp_update(c, 4e-3, 1e-3);
  CHECK(tau == doctest::Approx(0.9 * std::sqrt(0.25) * 1e-3).epsilon(1e-13));
  // Tiny error pushes to tau_max.
  CHECK(adp_update(c, 1e-12, 1e-3) == doctest::Approx(c.tau_max));
  // Huge error pushes to tau_min.
  CHECK(adp_update(c, 1e3, 1e-3) == doctest::Approx(c.tau_min));
}

TEST_CASE("adaptive run covers the horizon and dissipates energy") {
  auto g = make_grid({32, 32});
  Model m = gl_model(g, 0.2, 1.0, 1.0, 1.0);
  Field phi0 = random_initial(g, 13, 0.1, 0.0);
  AdaptiveConfig c;
  c.tol = 1e-2;
  c.tau_min = 1e-6;
  c.tau_max = 1e-2;
  c.tau_init = 1e-6;
  c.t_final = 0.01;
  AdaptiveResult r = adaptive_run(m, c, phi0);
  CHECK(r.state.t == doctest::Approx(c.t_final).epsilon(1e-9));
  REQUIRE(!r.ledger.empty());
  for (std::size_t i = 1; i < r.ledger.size(); ++i) {
    CHECK(r.ledger[i].t > r.ledger[i - 1].t);
    CHECK(r.ledger[i].e_original <= r.ledger[i - 1].e_original + 1e-8);
  }
  // Trace bookkeeping: each accepted row terminates its level, attempts
  // count from zero, accepted taus live inside the clamp range.
  std::int64_t level = -1;
  for (const auto& t : r.trace) {
    if (t.accepted) {
      CHECK(t.level == level + 1);
      level = t.level;
      CHECK(t.tau >= c.tau_min);
      CHECK(t.tau <= c.tau_max);
    }
  }
  CHECK(level + 1 == (std::int64_t)r.ledger.size() - 1);
}

TEST_CASE("step sizes grow once the transient passes") {
  auto g = make_grid({32, 32});
  Model m = gl_model(g, 0.2, 1.0, 1.0, 1.0);
  Field phi0 = random_initial(g, 13, 0.1, 0.0);
  AdaptiveConfig c;
  c.tol = 1e-2;
  c.tau_min = 1e-6;
  c.tau_max = 1e-2;
  c.tau_init = 1e-6;
  c.t_final = 0.02;
  AdaptiveResult r = adaptive_run(m, c, phi0);
  double first = 0.0, last = 0.0;
  for (const auto& t : r.trace)
    if (t.accepted) {
      if (first == 0.0) first = t.tau;
      last = t.tau;
    }
  CHECK(last > 10.0 * first);
}

TEST_CASE("impossible tolerance is force-accepted at tau_min") {
  auto g = make_grid({16, 16});
  Model m = gl_model(g, 0.1, 1.0, 1.0, 1.0);
  Field phi0 = random_initial(g, 29, 0.5, 0.0);
  AdaptiveConfig c;
  c.tol = 1e-16;  // unattainable
  c.tau_min = 1e-4;
  c.tau_max = 1e-2;
  c.tau_init = 1e-3;
  c.max_retries = 3;
  c.t_final = 1e-3;
  AdaptiveResult r = adaptive_run(m, c, phi0);
  CHECK(r.forced_accepts > 0);
  CHECK(r.state.t == doctest::Approx(c.t_final).epsilon(1e-9));
}
