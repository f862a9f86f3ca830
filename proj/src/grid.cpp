#include "savflow/grid.hpp"

namespace savflow {

Grid::Grid(std::vector<int> points_per_dim, std::vector<double> box_lengths)
    : n_(std::move(points_per_dim)), len_(std::move(box_lengths)) {
  if (n_.empty() || n_.size() > 3)
    throw std::invalid_argument("Grid: dim must be 1, 2, or 3");
  if (len_.size() != n_.size())
    throw std::invalid_argument("Grid: lengths/points size mismatch");
  total_ = 1;
  cell_vol_ = 1.0;
  box_vol_ = 1.0;
  for (std::size_t d = 0; d < n_.size(); ++d) {
    if (n_[d] < 4 || n_[d] % 2 != 0)
      throw std::invalid_argument("Grid: points per dim must be even and >= 4");
    if (!(len_[d] > 0.0))
      throw std::invalid_argument("Grid: box length must be positive");
    total_ *= n_[d];
    cell_vol_ *= len_[d] / n_[d];
    box_vol_ *= len_[d];
  }
}

Grid::Grid(std::vector<int> points_per_dim)
    : Grid(points_per_dim,
           std::vector<double>(points_per_dim.size(), kTwoPi)) {}

std::array<int, 3> Grid::unflatten(std::int64_t flat) const {
  std::array<int, 3> idx{0, 0, 0};
  for (int d = dim() - 1; d >= 0; --d) {
    idx[d] = static_cast<int>(flat % n_[d]);
    flat /= n_[d];
  }
  return idx;
}

}  // namespace savflow
