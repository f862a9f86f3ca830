#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "savflow/model.hpp"

namespace savflow {

enum class Scheme { kBackwardEuler, kCrankNicolson, kBdf2, kBdf3, kBdf4 };

/// How the extrapolated state used inside the nonlinear coefficient is
/// produced: polynomial extrapolation from the history, or an auxiliary
/// lower-order solve (a stabilized half step for Crank-Nicolson, one step
/// of the next-lower BDF scheme otherwise).
enum class Predictor { kExtrapolation, kSubstep };

const char* scheme_name(Scheme s);
int scheme_order(Scheme s);

/// Time level history, newest first: phi[0] is the current state.
struct SavState {
  std::vector<Field> phi;
  std::vector<double> r;
  double t = 0.0;

  const Field& current() const { return phi.front(); }
  double r_current() const { return r.front(); }
};

/// Thrown when a trajectory leaves the representable regime.
struct BlowUpError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

SavState sav_initialize(const Model& model, const Field& phi0,
                        double t0 = 0.0);

/// Number of history levels a scheme consumes per step.
int history_required(Scheme scheme, Predictor predictor);

/// Advance one step of size dt, pushing the new level onto the history.
/// Throws std::invalid_argument on insufficient history and BlowUpError
/// when the new state is non-finite or exceeds 1e8 in sup norm.
void sav_step(const Model& model, Scheme scheme, Predictor predictor,
              double dt, SavState& state);

/// (I - c G L)^{-1} rhs for c >= 0, solved mode by mode.
Field solve_constant_coeff(const Model& model, double c, const Field& rhs);

/// The Lyapunov functional the scheme dissipates. For BDF2 this is the
/// two-level form; elsewhere 1/2 (phi, L phi) + r^2. States with a single
/// history level duplicate it, which reduces to the one-level form.
double modified_energy(const Model& model, Scheme scheme,
                       const SavState& state);

struct EnergyLedgerEntry {
  std::int64_t step = 0;
  double t = 0.0;
  double dt = 0.0;
  double e_original = 0.0;
  double e_modified = 0.0;
  double residual = 0.0;  // |r - sqrt(E1 + delta)|
  double mass = 0.0;      // integral of phi
};

struct RunOptions {
  Scheme scheme = Scheme::kBackwardEuler;
  Predictor predictor = Predictor::kExtrapolation;
  double dt = 1e-3;
  std::int64_t steps = 0;
  std::int64_t record_stride = 1;
};

struct RunResult {
  SavState state;
  std::vector<EnergyLedgerEntry> ledger;
  std::int64_t bootstrap_steps = 0;  // leading ledger rows taken by startup
};

/// Integrate `steps` uniform steps. Multi-level schemes fill their history
/// by Crank-Nicolson runs over the first intervals, refined enough that the
/// startup error sits below the scheme's own order.
RunResult sav_run(const Model& model, const RunOptions& opts,
                  const Field& phi0);

EnergyLedgerEntry make_ledger_entry(const Model& model, Scheme scheme,
                                    const SavState& state, std::int64_t step,
                                    double dt);

}  // namespace savflow
