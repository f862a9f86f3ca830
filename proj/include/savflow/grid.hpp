#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace savflow {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Uniform periodic grid on a box [0,L1) x ... x [0,Ld), d in {1,2,3}.
/// Point counts must be even and >= 4 per dimension.
class Grid {
public:
  Grid(std::vector<int> points_per_dim, std::vector<double> box_lengths);

  /// Box defaults to [0,2*pi) in every dimension.
  explicit Grid(std::vector<int> points_per_dim);

  int dim() const { return static_cast<int>(n_.size()); }
  int points(int d) const { return n_[d]; }
  double length(int d) const { return len_[d]; }
  std::int64_t total_points() const { return total_; }
  double cell_volume() const { return cell_vol_; }
  double box_volume() const { return box_vol_; }

  /// Integer frequency m in {-N/2+1,...,N/2} for flat index j along dim d.
  int freq_index(int d, int j) const {
    return j <= n_[d] / 2 ? j : j - n_[d];
  }
  /// Physical wavenumber k = (2*pi/L)*m along dim d.
  double wavenumber(int d, int j) const {
    return kTwoPi / len_[d] * freq_index(d, j);
  }
  /// Coordinate of sample j along dim d.
  double coord(int d, int j) const { return len_[d] / n_[d] * j; }

  /// Decompose a flat row-major index into per-dimension indices.
  std::array<int, 3> unflatten(std::int64_t flat) const;

  bool operator==(const Grid& o) const { return n_ == o.n_ && len_ == o.len_; }
  bool operator!=(const Grid& o) const { return !(*this == o); }

private:
  std::vector<int> n_;
  std::vector<double> len_;
  std::int64_t total_ = 0;
  double cell_vol_ = 0.0;
  double box_vol_ = 0.0;
};

}  // namespace savflow
