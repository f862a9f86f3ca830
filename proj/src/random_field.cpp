#include "savflow/random_field.hpp"

#include <random>

#include "savflow/fft.hpp"

namespace savflow {

double uniform01(std::uint64_t raw) {
  return static_cast<double>(raw >> 11) * 0x1.0p-53;
}

Field random_initial(std::shared_ptr<const Grid> grid, std::uint64_t seed,
                     double amplitude, double mean) {
  std::mt19937_64 rng(seed);
  Field f(grid);
  for (std::int64_t i = 0; i < grid->total_points(); ++i)
    f.values()[i] = amplitude * (2.0 * uniform01(rng()) - 1.0);

  SpectralField fh = transform_forward(f);
  for (std::int64_t flat = 0; flat < grid->total_points(); ++flat) {
    auto idx = grid->unflatten(flat);
    for (int d = 0; d < grid->dim(); ++d) {
      int m = grid->freq_index(d, idx[d]);
      if (std::abs(m) > grid->points(d) / 6) {
        fh.coeffs()[flat] = 0.0;
        break;
      }
    }
  }
  Field out = transform_backward(fh);
  out.values() += mean - out.values().mean();
  return out;
}

}  // namespace savflow
