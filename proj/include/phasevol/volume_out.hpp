#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "phasevol/phase_net.hpp"
#include "phasevol/slice_data.hpp"

namespace phasevol {

/// Field samples at cell centers ((i + 0.5) / n) of the unit cube, x fastest.
struct ProbeGrid {
  std::array<int, 3> dims{0, 0, 0};
  Eigen::VectorXd values;

  Eigen::Index index(int i, int j, int k) const {
    return i + static_cast<Eigen::Index>(dims[0]) * (j + static_cast<Eigen::Index>(dims[1]) * k);
  }
  double at(int i, int j, int k) const { return values(index(i, j, k)); }
  Eigen::Vector3d node(int i, int j, int k) const {
    return {(i + 0.5) / dims[0], (j + 0.5) / dims[1], (k + 0.5) / dims[2]};
  }
};

ProbeGrid probe(const PhaseFieldNet<double>& net, int resolution);

/// Samples an arbitrary field the same way probe() samples the network.
ProbeGrid sample_field(const std::function<double(const Eigen::Vector3d&)>& field, int resolution);

/// Connected components of {value >= iso} under 6-connectivity.
struct ComponentReport {
  double iso = 0.5;
  std::array<int, 3> dims{0, 0, 0};
  int component_count = 0;
  /// Voxel count per component, labels assigned in scan order.
  std::vector<long> component_voxels;
  /// Fraction of each z-layer of the probe grid with value >= iso.
  std::vector<double> plane_areas;

  long total_voxels() const;
  /// Human-readable summary, one fact per line.
  std::string to_text() const;
  /// `key=value` lines for scripts.
  std::string to_key_value() const;
};

ComponentReport components(const ProbeGrid& grid, double iso = 0.5);

struct VolumeMesh {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<std::array<int, 3>> triangles;

  double area() const;
  /// Divergence-theorem volume; positive when normals point outward.
  double signed_volume() const;
};

/// Marching cubes over the probe grid's cell-centered nodes with linear
/// interpolation along grid edges. Faces with four crossings are resolved by
/// the mean of their corners, so neighboring cubes agree and the mesh is
/// closed away from the grid boundary. Normals point from {>= iso} toward
/// {< iso}. Throws EmptySurface when no grid edge straddles iso.
VolumeMesh extract_isosurface(const ProbeGrid& grid, double iso = 0.5);

enum class Axis { X = 0, Y = 1, Z = 2 };

/// Throws Usage for anything but x, y or z.
Axis parse_axis(const std::string& text);

/// Field on the plane {axis = coordinate} sampled at resolution^2 cell
/// centers. Row index runs along the second remaining axis (y for a z
/// section), column index along the first.
Image cross_section(const PhaseFieldNet<double>& net, Axis axis, double coordinate, int resolution);

/// Fraction of section pixels with value >= iso.
double section_area(const Image& section, double iso = 0.5);

/// 4-connected components of {value >= iso}, or of its complement when
/// `complement` is set.
int section_components(const Image& section, double iso = 0.5, bool complement = false);

/// Mean over the four in-plane axis-aligned rays from `center` of
/// 1 / |du/dr| where the field first falls through `iso`, on the plane
/// z = `z`: the distance over which the interface would complete a full 0 to 1
/// transition at its mid-level slope. Only the crossing itself has to lie
/// inside the domain. Samples are `samples` per unit length; the slope is the
/// secant across the bracketing pair. Rays that never cross are skipped;
/// nullopt when none cross.
std::optional<double> interface_width(const PhaseFieldNet<double>& net, double z,
                                      Eigen::Vector2d center = {0.5, 0.5}, int samples = 2000, double iso = 0.5);

/// Same measurement on an arbitrary field (exposed for testing).
std::optional<double> interface_width(const std::function<double(const Eigen::Vector3d&)>& field, double z,
                                      Eigen::Vector2d center = {0.5, 0.5}, int samples = 2000, double iso = 0.5);

/// ASCII Wavefront OBJ: `v x y z` lines then 1-based `f a b c` lines.
void export_mesh(const VolumeMesh& mesh, const std::filesystem::path& path);
VolumeMesh import_mesh(const std::filesystem::path& path);

/// Graymap (.pgm) or CSV (.csv) by extension.
void export_image(const Image& image, const std::filesystem::path& path);

}  // namespace phasevol
