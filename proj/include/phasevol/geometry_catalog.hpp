#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "phasevol/slice_data.hpp"

namespace phasevol {

/// Implicit surface: Phi < 0 inside, Phi >= 0 outside.
using LevelSet = std::function<double(const Eigen::Vector3d&)>;

/// Two level sets bracketing an ambiguous boundary band {outer < 0 <= inner}.
struct NoisyGeometry {
  LevelSet inner;
  LevelSet outer;
  double sigma = 0.0;
};

/// A catalog geometry plus the data/training settings of the experiment
/// that uses it.
struct Geometry {
  std::string name;
  std::string formula;
  LevelSet level_set;             // noiseless labels (the inner set for branches)
  std::optional<LevelSet> outer;  // set when the geometry carries a noise band
  int slices = 3;
  int points_per_plane = 1600;
  double sigma = 0.0;
  double threshold = 0.5;
  double eps_z = 5.0;
  int hidden_width = 30;

  bool noisy() const { return outer.has_value(); }
  NoisyGeometry with_noise(double sigma_value) const;
};

const std::vector<Geometry>& catalog();

/// Throws UnknownGeometry.
const Geometry& find_geometry(std::string_view name);

/// S equally spaced heights including both ends; {0.5} for a single plane.
std::vector<double> default_z_planes(int slices);

/// Side length of an N-point square grid. Throws BadGrid unless N is a
/// positive perfect square.
int grid_side(long points_per_plane);

/// Pixel = 1 where Phi < 0 else 0, at cell-centered grid points.
SliceStack sample_noiseless(const LevelSet& level_set, int slices, long points_per_plane,
                            std::vector<double> z_planes = {});

/// Interior (both sets negative) -> 1 - sigma + U(0, sigma); band
/// (outer < 0 <= inner) -> U(0, 1); everything else -> U(0, sigma).
/// One uniform draw per pixel, row-major within a plane, planes in order.
SliceStack sample_noisy(const NoisyGeometry& geometry, int slices, long points_per_plane,
                        std::vector<double> z_planes, std::uint64_t seed);

}  // namespace phasevol
