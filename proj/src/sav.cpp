#include "savflow/sav.hpp"

#include <algorithm>
#include <cmath>

#include "savflow/fft.hpp"

namespace savflow {

namespace {

constexpr double kBlowUpLimit = 1e8;
constexpr int kMaxHistory = 4;

struct BdfCoeffs {
  double a0;
  std::vector<double> c;       // history combination, newest first
  std::vector<double> extrap;  // predictor weights, newest first
};

const BdfCoeffs& bdf_coeffs(Scheme s) {
  static const BdfCoeffs be{1.0, {1.0}, {1.0}};
  static const BdfCoeffs bdf2{1.5, {2.0, -0.5}, {2.0, -1.0}};
  static const BdfCoeffs bdf3{11.0 / 6.0,
                              {3.0, -1.5, 1.0 / 3.0},
                              {3.0, -3.0, 1.0}};
  static const BdfCoeffs bdf4{25.0 / 12.0,
                              {4.0, -3.0, 4.0 / 3.0, -0.25},
                              {4.0, -6.0, 4.0, -1.0}};
  switch (s) {
    case Scheme::kBackwardEuler: return be;
    case Scheme::kBdf2: return bdf2;
    case Scheme::kBdf3: return bdf3;
    case Scheme::kBdf4: return bdf4;
    default: throw std::logic_error("bdf_coeffs: not a BDF scheme");
  }
}

Field combine(const std::vector<Field>& levels,
              const std::vector<double>& w) {
  Eigen::ArrayXd v = w[0] * levels[0].values();
  for (std::size_t j = 1; j < w.size(); ++j) v += w[j] * levels[j].values();
  return Field(levels[0].grid_ptr(), std::move(v));
}

Field apply_gl(const Model& model, const Field& phi) {
  SpectralField f = transform_forward(phi);
  f.coeffs() *= (model.G.multipliers() * model.L.multipliers())
                    .cast<std::complex<double>>();
  return transform_backward(f);
}

void check_state(const Field& phi) {
  if (!phi.all_finite() || phi.max_abs() > kBlowUpLimit)
    throw BlowUpError("solution blow-up detected");
}

void push_level(SavState& state, Field phi, double r, double dt) {
  check_state(phi);
  state.phi.insert(state.phi.begin(), std::move(phi));
  state.r.insert(state.r.begin(), r);
  if (static_cast<int>(state.phi.size()) > kMaxHistory) {
    state.phi.pop_back();
    state.r.pop_back();
  }
  state.t += dt;
}

// b = U[phi_bar] / sqrt(E1[phi_bar] + delta)
Field sav_b(const Model& model, const Field& phi_bar) {
  double s = std::sqrt(model.sqrt_argument(phi_bar));
  Field b = model.u(phi_bar);
  b.values() /= s;
  return b;
}

// Shared rank-one update: given A = I - c G L, rhs0 plus the implicit
// kappa (b, phi+) G b term, return phi+ and (b, phi+).
struct RankOneSolve {
  Field phi_next;
  double b_dot_phi;
};

RankOneSolve solve_rank_one(const Model& model, double c, const Field& rhs,
                            const Field& b, double kappa) {
  Field gb = apply_symbol(model.G, b);
  Field z1 = solve_constant_coeff(model, c, rhs);
  Field z2 = solve_constant_coeff(model, c, gb);
  double b_z2 = inner_product(b, z2);
  if (b_z2 > 1e-10 * (1.0 + std::abs(b_z2)))
    throw std::logic_error("sav_step: (b, A^{-1} G b) must be nonpositive");
  double denom = 1.0 - kappa * b_z2;
  double b_phi = inner_product(b, z1) / denom;
  z1.values() += (kappa * b_phi) * z2.values();
  return {std::move(z1), b_phi};
}

void step_bdf(const Model& model, Scheme scheme, Predictor predictor,
              double dt, SavState& state) {
  const BdfCoeffs& cf = bdf_coeffs(scheme);
  const std::size_t h = cf.c.size();
  const double a0 = cf.a0;

  Field phi_bar(state.phi[0].grid_ptr());
  if (scheme != Scheme::kBackwardEuler && predictor == Predictor::kSubstep) {
    Scheme lower = scheme == Scheme::kBdf4 ? Scheme::kBdf3 : Scheme::kBdf2;
    SavState sub = state;
    sav_step(model, lower, Predictor::kExtrapolation, dt, sub);
    phi_bar = sub.current();
  } else {
    phi_bar = combine(state.phi, cf.extrap);
  }

  Field b = sav_b(model, phi_bar);
  Field S = combine(state.phi, cf.c);
  double S_r = 0.0;
  for (std::size_t j = 0; j < h; ++j) S_r += cf.c[j] * state.r[j];

  double b_S = inner_product(b, S);
  Field gb = apply_symbol(model.G, b);
  Field rhs(S.grid_ptr(), S.values() / a0 +
                              (dt / a0) * (S_r / a0 - b_S / (2.0 * a0)) *
                                  gb.values());
  RankOneSolve sol =
      solve_rank_one(model, dt / a0, rhs, b, dt / (2.0 * a0));
  double r_next = S_r / a0 + 0.5 * sol.b_dot_phi - b_S / (2.0 * a0);
  push_level(state, std::move(sol.phi_next), r_next, dt);
}

void step_cn(const Model& model, Predictor predictor, double dt,
             SavState& state) {
  const Field& phi_n = state.phi[0];
  Field phi_bar(phi_n.grid_ptr());
  if (predictor == Predictor::kExtrapolation) {
    // extrapolation to the half step
    phi_bar = Field(phi_n.grid_ptr(),
                    1.5 * state.phi[0].values() - 0.5 * state.phi[1].values());
  } else {
    // stabilized half-step solve, accurate enough for overall second order
    Field f = model.u(phi_n);
    Field rhs(phi_n.grid_ptr(),
              phi_n.values() + (0.5 * dt) * apply_symbol(model.G, f).values());
    phi_bar = solve_constant_coeff(model, 0.5 * dt, rhs);
  }

  Field b = sav_b(model, phi_bar);
  double b_phin = inner_product(b, phi_n);
  Field glphi = apply_gl(model, phi_n);
  Field gb = apply_symbol(model.G, b);
  Field rhs(phi_n.grid_ptr(),
            phi_n.values() + (0.5 * dt) * glphi.values() +
                dt * (state.r[0] - 0.25 * b_phin) * gb.values());
  RankOneSolve sol = solve_rank_one(model, 0.5 * dt, rhs, b, 0.25 * dt);
  double r_next = state.r[0] + 0.5 * (sol.b_dot_phi - b_phin);
  push_level(state, std::move(sol.phi_next), r_next, dt);
}

}  // namespace

const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::kBackwardEuler: return "backward_euler";
    case Scheme::kCrankNicolson: return "crank_nicolson";
    case Scheme::kBdf2: return "bdf2";
    case Scheme::kBdf3: return "bdf3";
    case Scheme::kBdf4: return "bdf4";
  }
  return "unknown";
}

int scheme_order(Scheme s) {
  switch (s) {
    case Scheme::kBackwardEuler: return 1;
    case Scheme::kCrankNicolson:
    case Scheme::kBdf2: return 2;
    case Scheme::kBdf3: return 3;
    case Scheme::kBdf4: return 4;
  }
  return 0;
}

SavState sav_initialize(const Model& model, const Field& phi0, double t0) {
  if (phi0.grid() != *model.grid)
    throw std::invalid_argument("sav_initialize: field not on model grid");
  check_state(phi0);
  SavState s;
  s.phi.push_back(phi0);
  s.r.push_back(std::sqrt(model.sqrt_argument(phi0)));
  s.t = t0;
  return s;
}

int history_required(Scheme scheme, Predictor predictor) {
  switch (scheme) {
    case Scheme::kBackwardEuler: return 1;
    case Scheme::kCrankNicolson:
      return predictor == Predictor::kExtrapolation ? 2 : 1;
    case Scheme::kBdf2: return 2;
    case Scheme::kBdf3: return 3;
    case Scheme::kBdf4: return 4;
  }
  return 1;
}

void sav_step(const Model& model, Scheme scheme, Predictor predictor,
              double dt, SavState& state) {
  if (!(dt > 0.0)) throw std::invalid_argument("sav_step: dt must be > 0");
  if (static_cast<int>(state.phi.size()) <
      history_required(scheme, predictor))
    throw std::invalid_argument("sav_step: insufficient history for scheme");
  if (scheme == Scheme::kCrankNicolson)
    step_cn(model, predictor, dt, state);
  else
    step_bdf(model, scheme, predictor, dt, state);
}

Field solve_constant_coeff(const Model& model, double c, const Field& rhs) {
  if (c < 0.0)
    throw std::invalid_argument("solve_constant_coeff: c must be >= 0");
  SpectralField f = transform_forward(rhs);
  Eigen::ArrayXd m =
      1.0 - c * model.G.multipliers() * model.L.multipliers();
  f.coeffs() /= m.cast<std::complex<double>>();
  return transform_backward(f);
}

double modified_energy(const Model& model, Scheme scheme,
                       const SavState& state) {
  const Field& p0 = state.phi[0];
  double r0 = state.r[0];
  if (scheme == Scheme::kBdf2) {
    const Field& p1 = state.phi.size() > 1 ? state.phi[1] : state.phi[0];
    double r1 = state.r.size() > 1 ? state.r[1] : state.r[0];
    Field q(p0.grid_ptr(), 2.0 * p0.values() - p1.values());
    double quad = 0.25 * (inner_product(p0, apply_symbol(model.L, p0)) +
                          inner_product(q, apply_symbol(model.L, q)));
    return quad + 0.5 * (r0 * r0 + (2.0 * r0 - r1) * (2.0 * r0 - r1));
  }
  return 0.5 * inner_product(p0, apply_symbol(model.L, p0)) + r0 * r0;
}

EnergyLedgerEntry make_ledger_entry(const Model& model, Scheme scheme,
                                    const SavState& state, std::int64_t step,
                                    double dt) {
  EnergyLedgerEntry e;
  e.step = step;
  e.t = state.t;
  e.dt = dt;
  e.e_original = energy(model, state.current()).total;
  e.e_modified = modified_energy(model, scheme, state);
  e.residual = std::abs(state.r_current() -
                        std::sqrt(model.sqrt_argument(state.current())));
  e.mass = model.grid->cell_volume() * state.current().values().sum();
  return e;
}

RunResult sav_run(const Model& model, const RunOptions& opts,
                  const Field& phi0) {
  if (opts.steps < 0) throw std::invalid_argument("sav_run: negative steps");
  RunResult out;
  out.state = sav_initialize(model, phi0);
  out.ledger.push_back(
      make_ledger_entry(model, opts.scheme, out.state, 0, opts.dt));

  const int h = history_required(opts.scheme, opts.predictor);
  const std::int64_t warm = std::min<std::int64_t>(h - 1, opts.steps);
  out.bootstrap_steps = warm;

  if (warm > 0) {
    // Fill history by refined Crank-Nicolson runs so the startup error
    // stays below the target scheme's order.
    int order = scheme_order(opts.scheme);
    std::int64_t m = 1;
    if (order > 2 && opts.dt < 1.0) {
      // History errors are amplified by 1/dt through the divided
      // differences, so the warmup must land at O(dt^{order+1}):
      // m substeps per interval give O(dt^3 / m^2).
      double expo = (order - 2.0) / 2.0 + 0.25;
      m = static_cast<std::int64_t>(std::ceil(std::pow(opts.dt, -expo)));
      m = std::clamp<std::int64_t>(m, 1, 20000);
    }
    SavState work = sav_initialize(model, phi0);
    std::vector<Field> marks{phi0};
    std::vector<double> mark_r{work.r[0]};
    for (std::int64_t i = 0; i < warm; ++i) {
      for (std::int64_t s = 0; s < m; ++s) {
        Predictor p = work.phi.size() < 2 ? Predictor::kSubstep
                                          : Predictor::kExtrapolation;
        sav_step(model, Scheme::kCrankNicolson, p, opts.dt / m, work);
      }
      marks.insert(marks.begin(), work.current());
      mark_r.insert(mark_r.begin(), work.r_current());
      SavState snap;
      snap.phi.assign(marks.begin(),
                      marks.begin() + std::min<std::size_t>(marks.size(),
                                                            kMaxHistory));
      snap.r.assign(mark_r.begin(),
                    mark_r.begin() + std::min<std::size_t>(mark_r.size(),
                                                           kMaxHistory));
      snap.t = (i + 1) * opts.dt;
      if ((i + 1) % opts.record_stride == 0 || i + 1 == opts.steps)
        out.ledger.push_back(
            make_ledger_entry(model, opts.scheme, snap, i + 1, opts.dt));
      if (i + 1 == warm) out.state = std::move(snap);
    }
    out.state.t = warm * opts.dt;
  }

  for (std::int64_t n = warm; n < opts.steps; ++n) {
    sav_step(model, opts.scheme, opts.predictor, opts.dt, out.state);
    if ((n + 1) % opts.record_stride == 0 || n + 1 == opts.steps)
      out.ledger.push_back(
          make_ledger_entry(model, opts.scheme, out.state, n + 1, opts.dt));
  }
  return out;
}

}  // namespace savflow
