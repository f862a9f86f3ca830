#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "savflow/model.hpp"
#include "savflow/sav.hpp"

namespace savflow {

/// phi_k(z): phi_0 = e^z, phi_{k+1}(z) = (phi_k(z) - 1/k!) / z.
/// Taylor series near zero, closed form elsewhere.
double phi_function(int k, double z);

/// Fourth-order exponential time differencing (Cox-Matthews ETDRK4) for
/// d phi/dt = (G L) phi + G U(phi). Used as the reference integrator.
Field etdrk4_run(const Model& model, const Field& phi0, double dt,
                 std::int64_t steps);

/// Direct dense LU solve of (I - c G L) x = rhs, with the operator
/// assembled column by column. Limited to 4096 unknowns.
Field dense_solve(const Model& model, double c, const Field& rhs);

/// One SAV step solved as a single dense (N+1) x (N+1) linear system in
/// (phi, r), with no Sherman-Morrison reduction. Independent check of
/// sav_step. Extrapolation predictors only for the BDF family.
std::pair<Field, double> sav_step_dense(const Model& model, Scheme scheme,
                                        Predictor predictor, double dt,
                                        const SavState& state);

/// Least-squares slope of log(err) against log(dt).
double convergence_slope(const std::vector<double>& dt,
                         const std::vector<double>& err);

/// Radius of the {phi > level} region assuming a single disc:
/// sqrt(area / pi) in physical units.
double extract_radius(const Field& phi, double level = 0.0);

/// One step of the stabilized semi-implicit comparator for the nonlocal
/// phase field crystal flow, mode by mode with the nonlinear term treated
/// explicitly. (a1, a2, a3) select the stabilizer split; the defaults are
/// the choice used for the long-run comparison.
void ssi_step(const Model& npfc, double dt, Field& phi, double a1 = 0.0,
              double a2 = 1.0, double a3 = 0.0);

}  // namespace savflow
