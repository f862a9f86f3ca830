#pragma once

#include <map>
#include <string>

#include "savflow/nonlocal.hpp"
#include "savflow/symbol.hpp"

namespace savflow {

struct EnergyReport {
  double quadratic_part = 0.0;
  double e1_part = 0.0;
  double total = 0.0;
};

/// A gradient flow dphi/dt = G mu with free energy
///   E[phi] = 1/2 (phi, L phi) + E1[phi],
/// L symmetric nonnegative, G symmetric nonpositive, E1 bounded below.
/// `u` is the variational derivative dE1/dphi; `shift_delta` is added to
/// E1 under the square root of the auxiliary variable.
struct Model {
  std::string name;
  std::shared_ptr<const Grid> grid;
  OperatorSymbol L;
  OperatorSymbol G;
  std::function<double(const Field&)> e1;
  std::function<Field(const Field&)> u;
  double shift_delta = 1.0;
  std::map<std::string, double> params;

  /// E1[phi] + shift_delta, checked positive.
  double sqrt_argument(const Field& phi) const;
};

/// Ginzburg-Landau family (Allen-Cahn / Cahn-Hilliard / fractional CH):
///   L = -Laplacian + beta/eps^2,  G = -gamma (-Laplacian)^s,
///   E1 = 1/(4 eps^2) int (phi^2 - 1 - beta)^2,
///   U  = 1/eps^2 phi (phi^2 - 1 - beta).
Model gl_model(std::shared_ptr<const Grid> grid, double eps, double beta,
               double s, double gamma);

/// Nonlocal phase field crystal:
///   L = (L_delta + I)^2,  G = L_delta,
///   E1 = int (1/4 phi^4 - eps/2 phi^2).
Model npfc_model(std::shared_ptr<const Grid> grid, double eps,
                 const KernelSpec& kernel);

/// Molecular beam epitaxy without slope selection:
///   L = (eta2 - alpha) |k|^4,  G = -mobility,
///   E1 = int (-1/2 ln(1+|grad phi|^2) + alpha/2 |Lap phi|^2) + C0,
///   U  = alpha Lap^2 phi + div(grad phi / (1 + |grad phi|^2)).
Model mbe_model(std::shared_ptr<const Grid> grid, double eta2, double alpha,
                double mobility, double C0);

/// Nonlocal energy splitting: given a local quadratic symbol L and a
/// nonlocal symbol split L_n = L_n1 + L_n2 (L_n1 nonnegative), build the
/// model with L <- L + L_n1, U = L_n2 phi + f(phi),
/// E1 = 1/2 (phi, L_n2 phi) + int F(phi).
Model split_nonlocal(std::shared_ptr<const Grid> grid, std::string name,
                     const OperatorSymbol& L_local, const OperatorSymbol& G,
                     const OperatorSymbol& Ln1, const OperatorSymbol& Ln2,
                     std::function<double(double)> F_density,
                     std::function<double(double)> f_derivative,
                     double shift_delta = 1.0);

EnergyReport energy(const Model& model, const Field& phi);
/// mu = dE/dphi = L phi + u(phi).
Field variational_derivative(const Model& model, const Field& phi);

/// Spectral partial derivative along dimension d.
Field partial_derivative(const Field& f, int d);

}  // namespace savflow
