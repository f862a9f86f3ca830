#include "savflow/nonlocal.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

namespace savflow {
namespace {

// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration on P_n.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < n; ++i) {
    double xi = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = xi;
      for (int j = 2; j <= n; ++j) {
        double p2 = ((2 * j - 1) * xi * p1 - (j - 1) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      double dp = n * (xi * p1 - p0) / (xi * xi - 1.0);
      double dx = p1 / dp;
      xi -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    double p0 = 1.0, p1 = xi;
    for (int j = 2; j <= n; ++j) {
      double p2 = ((2 * j - 1) * xi * p1 - (j - 1) * p0) / j;
      p0 = p1;
      p1 = p2;
    }
    double dp = n * (xi * p1 - p0) / (xi * xi - 1.0);
    x[i] = xi;
    w[i] = 2.0 / ((1.0 - xi * xi) * dp * dp);
  }
}

struct CacheKey {
  KernelSpec kernel;
  double tol;
  // |k| rounded so equal magnitudes on a grid share one entry
  std::int64_t kmag_fixed;
  bool operator<(const CacheKey& o) const {
    if (kernel < o.kernel) return true;
    if (o.kernel < kernel) return false;
    return std::tie(tol, kmag_fixed) < std::tie(o.tol, o.kmag_fixed);
  }
};

}  // namespace

double KernelSpec::rho(double r) const {
  auto part = [this, r](double c, double a) {
    return c * 2.0 * (4.0 - a) / M_PI / (std::pow(delta, 4.0 - a) * std::pow(r, a));
  };
  return part(c1, alpha1) - part(c2, alpha2);
}

bool KernelSpec::operator<(const KernelSpec& o) const {
  return std::tie(c1, c2, alpha1, alpha2, delta) <
         std::tie(o.c1, o.c2, o.alpha1, o.alpha2, o.delta);
}

double nonlocal_eigenvalue(const KernelSpec& kernel, double k_mag,
                           int r_nodes, int theta_nodes) {
  if (k_mag == 0.0) return 0.0;
  std::vector<double> gx, gw;
  gauss_legendre(r_nodes, gx, gw);
  const double half = kernel.delta / 2.0;
  double sum = 0.0;
  // The angular integral of cos(r(kx cos t + ky sin t)) depends only on
  // r*|k|; the trapezoid rule on the periodic integrand is spectrally
  // accurate.
  for (int i = 0; i < r_nodes; ++i) {
    double r = half * (gx[i] + 1.0);
    double ang = 0.0;
    for (int j = 0; j < theta_nodes; ++j) {
      double t = kTwoPi * j / theta_nodes;
      ang += std::cos(r * k_mag * std::cos(t)) - 1.0;
    }
    ang *= kTwoPi / theta_nodes;
    sum += gw[i] * r * kernel.rho(r) * ang;
  }
  return half * sum;
}

OperatorSymbol symbol_nonlocal(std::shared_ptr<const Grid> grid,
                               const KernelSpec& kernel, double tol) {
  if (grid->dim() != 2)
    throw std::invalid_argument("symbol_nonlocal: 2-D grid required");
  if (!(kernel.delta > 0.0))
    throw std::invalid_argument("symbol_nonlocal: delta must be positive");

  static std::mutex cache_mu;
  static std::map<CacheKey, double> cache;

  const Grid& g = *grid;
  Eigen::ArrayXd m(g.total_points());
  for (std::int64_t flat = 0; flat < g.total_points(); ++flat) {
    auto idx = g.unflatten(flat);
    double kx = g.wavenumber(0, idx[0]);
    double ky = g.wavenumber(1, idx[1]);
    double kmag = std::hypot(kx, ky);
    if (kmag == 0.0) {
      m[flat] = 0.0;
      continue;
    }
    CacheKey key{kernel, tol,
                 static_cast<std::int64_t>(std::llround(kmag * 1e12))};
    {
      std::lock_guard<std::mutex> lock(cache_mu);
      auto it = cache.find(key);
      if (it != cache.end()) {
        m[flat] = it->second;
        continue;
      }
    }
    int nr = 64, nt = 256;
    double prev = nonlocal_eigenvalue(kernel, kmag, nr, nt);
    double cur = prev;
    bool converged = false;
    for (int level = 0; level < 6; ++level) {
      nr *= 2;
      nt *= 2;
      cur = nonlocal_eigenvalue(kernel, kmag, nr, nt);
      if (std::abs(cur - prev) <= tol) {
        converged = true;
        break;
      }
      prev = cur;
    }
    if (!converged)
      throw std::runtime_error(
          "symbol_nonlocal: quadrature did not converge (achieved " +
          std::to_string(std::abs(cur - prev)) + ")");
    {
      std::lock_guard<std::mutex> lock(cache_mu);
      cache[key] = cur;
    }
    m[flat] = cur;
  }
  if ((m > 1e-10).any())
    throw std::runtime_error("symbol_nonlocal: kernel is not negative semidefinite");
  return OperatorSymbol(std::move(grid), std::move(m), SymbolSign::kAny);
}

}  // namespace savflow
