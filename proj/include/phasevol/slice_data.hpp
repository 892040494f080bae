#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace phasevol {

/// Grayscale image, row-major; row index runs along y, column index along x.
using Image = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct SlicePlane {
  double z = 0.0;
  Image grid;

  friend bool operator==(const SlicePlane& a, const SlicePlane& b) {
    return a.z == b.z && a.grid.rows() == b.grid.rows() && a.grid.cols() == b.grid.cols() &&
           (a.grid.array() == b.grid.array()).all();
  }
};

/// Slice planes parallel to x-y inside the unit cube.
struct SliceStack {
  std::vector<SlicePlane> planes;
  /// Free-form provenance written to and read from the manifest (geometry,
  /// seed, sigma, ...). Not interpreted by the reconstruction.
  std::map<std::string, std::string> metadata;

  int grid_size() const { return planes.empty() ? 0 : static_cast<int>(planes.front().grid.rows()); }
  std::size_t point_count() const;

  /// Throws FormatError when an invariant does not hold.
  void validate() const;

  friend bool operator==(const SliceStack& a, const SliceStack& b) { return a.planes == b.planes; }
};

/// Cell-centered coordinate of pixel (row, col) of an n x n plane at height z.
inline Eigen::Vector3d pixel_coordinate(int row, int col, int n, double z) {
  return {(col + 0.5) / n, (row + 0.5) / n, z};
}

/// Labeled measurement points. Coordinates are stored as 3 x count matrices.
struct PhaseLabels {
  Eigen::Matrix3Xd inside_points;
  Eigen::Matrix3Xd outside_points;
  std::size_t unassigned_count = 0;
  double threshold = 0.5;

  std::size_t inside_count() const { return static_cast<std::size_t>(inside_points.cols()); }
  std::size_t outside_count() const { return static_cast<std::size_t>(outside_points.cols()); }
  /// S*: points that received a phase.
  std::size_t assigned_count() const { return inside_count() + outside_count(); }
  std::size_t total_count() const { return assigned_count() + unassigned_count; }
};

/// One pass of the 3x3 box filter with mirrored edges (index -1 -> 0,
/// index n -> n-1).
SlicePlane blur_plane(const SlicePlane& plane);

/// Blurs each plane, then labels pixel values v as outside when v < 1 - c,
/// inside when v >= c, and leaves [1 - c, c) unassigned.
/// Throws DegenerateLabels when nothing gets a phase and Usage when c is
/// outside [0.5, 1).
PhaseLabels assign_phases(const SliceStack& stack, double threshold);

enum class PixelFormat { Graymap, Csv };

/// Writes `<dir>/manifest.txt` plus one image per plane. Graymaps use maxval
/// 255 when every pixel is a multiple of 1/255 and 65535 otherwise.
/// Returns the manifest path.
std::filesystem::path save_stack(const SliceStack& stack, const std::filesystem::path& dir,
                                 PixelFormat format = PixelFormat::Graymap);

/// Reads a manifest (or a directory containing manifest.txt).
SliceStack load_stack(const std::filesystem::path& manifest_path);

}  // namespace phasevol
