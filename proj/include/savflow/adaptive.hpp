#pragma once

#include "savflow/sav.hpp"

namespace savflow {

struct AdaptiveConfig {
  double rho = 0.9;       // safety factor
  double tol = 1e-3;      // relative pair-difference target
  double tau_min = 1e-5;
  double tau_max = 1e-2;
  double tau_init = 1e-5;
  int max_retries = 20;
  double t_final = 0.0;
};

/// rho * sqrt(tol/e) * tau, clamped to [tau_min, tau_max].
double adp_update(const AdaptiveConfig& cfg, double e, double tau);

struct TraceEntry {
  std::int64_t level = 0;  // accepted-step index
  int attempt = 0;
  double t = 0.0;
  double tau = 0.0;
  double e = 0.0;
  bool accepted = false;
};

struct AdaptiveResult {
  SavState state;
  std::vector<EnergyLedgerEntry> ledger;  // one row per accepted step
  std::vector<TraceEntry> trace;          // one row per attempt
  std::int64_t forced_accepts = 0;  // steps accepted at tau_min over tol
};

/// First/second-order pair controller: each trial runs one implicit Euler
/// step and one Crank-Nicolson step (stabilized half-step predictor) from
/// the same state; the relative L2 difference drives the step size and the
/// Crank-Nicolson solution advances the flow.
AdaptiveResult adaptive_run(const Model& model, const AdaptiveConfig& cfg,
                            const Field& phi0);

}  // namespace savflow
