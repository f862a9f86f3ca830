#include "savflow/adaptive.hpp"

#include <algorithm>
#include <cmath>

namespace savflow {

double adp_update(const AdaptiveConfig& cfg, double e, double tau) {
  double next = cfg.tau_max;
  if (e > 0.0) next = cfg.rho * std::sqrt(cfg.tol / e) * tau;
  return std::clamp(next, cfg.tau_min, cfg.tau_max);
}

AdaptiveResult adaptive_run(const Model& model, const AdaptiveConfig& cfg,
                            const Field& phi0) {
  if (!(cfg.t_final > 0.0))
    throw std::invalid_argument("adaptive_run: t_final must be > 0");
  if (!(cfg.tau_min > 0.0) || cfg.tau_max < cfg.tau_min)
    throw std::invalid_argument("adaptive_run: bad tau bounds");

  AdaptiveResult out;
  out.state = sav_initialize(model, phi0);
  out.ledger.push_back(make_ledger_entry(model, Scheme::kCrankNicolson,
                                         out.state, 0, cfg.tau_init));

  double tau = std::clamp(cfg.tau_init, cfg.tau_min, cfg.tau_max);
  std::int64_t level = 0;
  const double t_end = cfg.t_final * (1.0 - 1e-12);
  while (out.state.t < t_end) {
    tau = std::min(tau, cfg.t_final - out.state.t);
    SavState accepted;
    double e = 0.0;
    bool ok = false;
    for (int attempt = 0; attempt < cfg.max_retries; ++attempt) {
      SavState s1 = out.state;
      s1.phi.erase(s1.phi.begin() + 1, s1.phi.end());
      s1.r.erase(s1.r.begin() + 1, s1.r.end());
      SavState s2 = s1;
      sav_step(model, Scheme::kBackwardEuler, Predictor::kExtrapolation,
               tau, s1);
      sav_step(model, Scheme::kCrankNicolson, Predictor::kSubstep, tau, s2);
      double denom = l2_norm(s2.current());
      Field diff(s1.current().grid_ptr(),
                 s1.current().values() - s2.current().values());
      e = denom > 0.0 ? l2_norm(diff) / denom : 0.0;
      bool at_floor = tau <= cfg.tau_min * (1.0 + 1e-12);
      bool accept = e <= cfg.tol || at_floor;
      out.trace.push_back({level, attempt, out.state.t, tau, e, accept});
      if (accept) {
        if (e > cfg.tol) ++out.forced_accepts;
        accepted = std::move(s2);
        ok = true;
        break;
      }
      tau = adp_update(cfg, e, tau);
    }
    if (!ok) {
      // retry budget exhausted: force the floor step and move on
      tau = cfg.tau_min;
      SavState s2 = out.state;
      s2.phi.erase(s2.phi.begin() + 1, s2.phi.end());
      s2.r.erase(s2.r.begin() + 1, s2.r.end());
      sav_step(model, Scheme::kCrankNicolson, Predictor::kSubstep, tau, s2);
      out.trace.push_back({level, cfg.max_retries, out.state.t, tau, e, true});
      ++out.forced_accepts;
      accepted = std::move(s2);
    }
    double tau_used = tau;
    out.state = std::move(accepted);
    ++level;
    out.ledger.push_back(make_ledger_entry(model, Scheme::kCrankNicolson,
                                           out.state, level, tau_used));
    tau = adp_update(cfg, e, tau);
  }
  return out;
}

}  // namespace savflow
