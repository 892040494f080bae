#include "phasevol/geometry_catalog.hpp"

#include <cmath>
#include <numbers>

#include "phasevol/error.hpp"
#include "phasevol/image_io.hpp"
#include "phasevol/random.hpp"

namespace phasevol {

namespace {

using std::numbers::pi;

double sq(double v) { return v * v; }

double hourglass(const Eigen::Vector3d& p) {
  return sq(p.x() - 0.5) + sq(p.y() - 0.5) - 3.0 * std::pow(p.z() - 0.5, 4) / 2.0 - 0.01;
}

double cylinder(const Eigen::Vector3d& p) { return sq(p.x() - 0.5) + sq(p.y() - 0.5) - 0.2; }

double sideways_cylinder(const Eigen::Vector3d& p) { return sq(p.z() - 0.5) + sq(p.y() - 0.5) - 0.2; }

double two_way_core(const Eigen::Vector3d& p) {
  return sq(std::cos(2.0 * pi * p.x()) - (1.0 - 2.0 * p.z())) + 9.0 * sq(p.y() - 0.5);
}

double four_way_core(const Eigen::Vector3d& p) {
  const double shift = 1.0 - 2.0 * p.z() * p.z() * p.z();
  return sq(std::cos(2.0 * pi * p.x()) - shift) + 9.0 * sq(p.y() - 0.5) +
         sq(std::cos(2.0 * pi * p.y()) - shift) + 9.0 * sq(p.x() - 0.5);
}

double hollow_tilted_cylinder(const Eigen::Vector3d& p) {
  const double r2 = sq(p.x() - p.z() / 5.0 - 0.4) + sq(p.y() - 0.5);
  return (r2 - 0.15) * (r2 - 0.05);
}

std::vector<Geometry> build_catalog() {
  std::vector<Geometry> out;

  Geometry g;
  g.name = "hourglass";
  g.formula = "(x-0.5)^2 + (y-0.5)^2 - 3(z-0.5)^4/2 - 0.01";
  g.level_set = hourglass;
  g.slices = 3;
  g.points_per_plane = 1600;
  g.eps_z = 5.0;
  out.push_back(g);

  g = Geometry{};
  g.name = "cylinder";
  g.formula = "(x-0.5)^2 + (y-0.5)^2 - 0.2";
  g.level_set = cylinder;
  g.slices = 2;
  g.points_per_plane = 1600;
  g.eps_z = 10.0;
  out.push_back(g);

  g = Geometry{};
  g.name = "sideways_cylinder";
  g.formula = "(z-0.5)^2 + (y-0.5)^2 - 0.2";
  g.level_set = sideways_cylinder;
  g.slices = 5;
  g.points_per_plane = 1600;
  g.eps_z = 2.5;
  out.push_back(g);

  g = Geometry{};
  g.name = "two_way_branch";
  g.formula = "inner: (cos 2pi x - (1-2z))^2 + 9(y-0.5)^2 - 0.2; outer: same - 0.5";
  g.level_set = [](const Eigen::Vector3d& p) { return two_way_core(p) - 0.2; };
  g.outer = [](const Eigen::Vector3d& p) { return two_way_core(p) - 0.5; };
  g.slices = 4;
  g.points_per_plane = 400;
  g.sigma = 0.1;
  g.threshold = 0.75;
  g.eps_z = 5.0;
  out.push_back(g);

  g = Geometry{};
  g.name = "four_way_branch";
  g.formula =
      "inner: (cos 2pi x - (1-2z^3))^2 + 9(y-0.5)^2 + (cos 2pi y - (1-2z^3))^2 + 9(x-0.5)^2 - 2.75; "
      "outer: same - 3.25";
  g.level_set = [](const Eigen::Vector3d& p) { return four_way_core(p) - 2.75; };
  g.outer = [](const Eigen::Vector3d& p) { return four_way_core(p) - 3.25; };
  g.slices = 5;
  g.points_per_plane = 625;
  g.sigma = 0.3;
  g.threshold = 0.75;
  g.eps_z = 5.0;
  out.push_back(g);

  g = Geometry{};
  g.name = "hollow_tilted_cylinder";
  g.formula = "((x - z/5 - 0.4)^2 + (y-0.5)^2 - 0.15) * ((x - z/5 - 0.4)^2 + (y-0.5)^2 - 0.05)";
  g.level_set = hollow_tilted_cylinder;
  g.slices = 3;
  g.points_per_plane = 1600;
  g.eps_z = 1.0;
  g.hidden_width = 50;
  out.push_back(g);

  return out;
}

std::vector<double> resolve_planes(int slices, std::vector<double> z_planes) {
  if (slices < 1) throw Error(ErrorKind::Usage, "at least one slice plane is required");
  if (z_planes.empty()) return default_z_planes(slices);
  if (static_cast<int>(z_planes.size()) != slices)
    throw Error(ErrorKind::Usage, "expected " + std::to_string(slices) + " plane heights, got " +
                                      std::to_string(z_planes.size()));
  for (double z : z_planes)
    if (!(z >= 0.0 && z <= 1.0)) throw Error(ErrorKind::Format, "plane height " + format_double(z) + " outside [0,1]");
  return z_planes;
}

}  // namespace

NoisyGeometry Geometry::with_noise(double sigma_value) const {
  return {level_set, outer ? *outer : level_set, sigma_value};
}

const std::vector<Geometry>& catalog() {
  static const std::vector<Geometry> table = build_catalog();
  return table;
}

const Geometry& find_geometry(std::string_view name) {
  for (const auto& g : catalog())
    if (g.name == name) return g;
  std::string known;
  for (const auto& g : catalog()) known += (known.empty() ? "" : ", ") + g.name;
  throw Error(ErrorKind::UnknownGeometry, "'" + std::string(name) + "' (known: " + known + ")");
}

std::vector<double> default_z_planes(int slices) {
  if (slices < 1) throw Error(ErrorKind::Usage, "at least one slice plane is required");
  if (slices == 1) return {0.5};
  std::vector<double> z(static_cast<std::size_t>(slices));
  for (int i = 0; i < slices; ++i) z[static_cast<std::size_t>(i)] = static_cast<double>(i) / (slices - 1);
  return z;
}

int grid_side(long points_per_plane) {
  if (points_per_plane < 1) throw Error(ErrorKind::BadGrid, "points per plane must be positive");
  auto side = static_cast<long>(std::llround(std::sqrt(static_cast<double>(points_per_plane))));
  if (side * side != points_per_plane)
    throw Error(ErrorKind::BadGrid, std::to_string(points_per_plane) + " points per plane is not a perfect square");
  return static_cast<int>(side);
}

SliceStack sample_noiseless(const LevelSet& level_set, int slices, long points_per_plane,
                            std::vector<double> z_planes) {
  const int n = grid_side(points_per_plane);
  z_planes = resolve_planes(slices, std::move(z_planes));
  SliceStack stack;
  for (double z : z_planes) {
    SlicePlane plane{z, Image(n, n)};
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) plane.grid(r, c) = level_set(pixel_coordinate(r, c, n, z)) < 0.0 ? 1.0 : 0.0;
    stack.planes.push_back(std::move(plane));
  }
  return stack;
}

SliceStack sample_noisy(const NoisyGeometry& geometry, int slices, long points_per_plane,
                        std::vector<double> z_planes, std::uint64_t seed) {
  const double sigma = geometry.sigma;
  if (!(sigma >= 0.0 && sigma < 1.0)) throw Error(ErrorKind::Usage, "noise magnitude sigma must lie in [0, 1)");
  const int n = grid_side(points_per_plane);
  z_planes = resolve_planes(slices, std::move(z_planes));
  Rng rng(seed);
  SliceStack stack;
  for (double z : z_planes) {
    SlicePlane plane{z, Image(n, n)};
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        const Eigen::Vector3d p = pixel_coordinate(r, c, n, z);
        const double inner = geometry.inner(p);
        const double outer = geometry.outer(p);
        const double draw = rng.uniform();
        double v;
        if (inner < 0.0 && outer < 0.0) {
          v = (1.0 - sigma) + sigma * draw;
        } else if (outer < 0.0) {
          v = draw;
        } else {
          v = sigma * draw;
        }
        plane.grid(r, c) = std::min(v, 1.0);
      }
    }
    stack.planes.push_back(std::move(plane));
  }
  stack.metadata["seed"] = std::to_string(seed);
  stack.metadata["sigma"] = format_double(sigma);
  return stack;
}

}  // namespace phasevol
