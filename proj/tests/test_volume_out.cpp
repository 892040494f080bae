#include <cmath>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>

#include <Eigen/Geometry>

#include <doctest.h>

#include "phasevol/error.hpp"
#include "phasevol/volume_out.hpp"

using namespace phasevol;

namespace {

// Smooth ball indicator: 1 inside radius R around c, 0 outside, tanh profile of width w.
auto ball(Eigen::Vector3d c, double R, double w = 0.02) {
  return [c, R, w](const Eigen::Vector3d& p) { return 0.5 * (1.0 - std::tanh(((p - c).norm() - R) / w)); };
}

// Every directed edge must be matched by its reverse exactly once.
bool closed_and_consistent(const VolumeMesh& mesh) {
  std::map<std::pair<int, int>, int> directed;
  for (const auto& t : mesh.triangles)
    for (int q = 0; q < 3; ++q) ++directed[{t[q], t[(q + 1) % 3]}];
  for (const auto& [e, n] : directed) {
    if (n != 1) return false;
    const auto rev = directed.find({e.second, e.first});
    if (rev == directed.end() || rev->second != 1) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("sphere isosurface recovers volume and area with outward normals") {
  const double R = 0.3;
  const auto grid = sample_field(ball({0.5, 0.5, 0.5}, R), 80);
  const auto mesh = extract_isosurface(grid);
  const double volume = 4.0 / 3.0 * std::numbers::pi * R * R * R;
  const double area = 4.0 * std::numbers::pi * R * R;
  CHECK(mesh.signed_volume() == doctest::Approx(volume).epsilon(0.01));
  CHECK(mesh.area() == doctest::Approx(area).epsilon(0.02));
  CHECK(closed_and_consistent(mesh));
}

TEST_CASE("complement region flips the orientation") {
  const auto f = ball({0.5, 0.5, 0.5}, 0.25);
  const auto grid = sample_field([&](const Eigen::Vector3d& p) { return 1.0 - f(p); }, 40);
  const auto mesh = extract_isosurface(grid);
  CHECK(mesh.signed_volume() < 0.0);
  CHECK(closed_and_consistent(mesh));
}

TEST_CASE("saddle configurations still give a closed surface") {
  // Two balls that nearly touch plus a coarse grid produce ambiguous faces.
  const auto a = ball({0.35, 0.5, 0.5}, 0.16, 0.01);
  const auto b = ball({0.65, 0.52, 0.48}, 0.16, 0.01);
  for (int n : {9, 13, 17, 23}) {
    const auto grid = sample_field([&](const Eigen::Vector3d& p) { return std::max(a(p), b(p)); }, n);
    CHECK(closed_and_consistent(extract_isosurface(grid)));
  }
  // Random field away from the boundary: wrap in a ball mask.
  const auto mask = ball({0.5, 0.5, 0.5}, 0.35, 0.01);
  const auto noisy = [&](const Eigen::Vector3d& p) {
    return mask(p) * (0.5 + 0.5 * std::sin(37.0 * p.x() + 11.0 * p.y()) * std::cos(29.0 * p.z() - 7.0 * p.x()) + 0.01);
  };
  CHECK(closed_and_consistent(extract_isosurface(sample_field(noisy, 31), 0.4)));
}

TEST_CASE("constant field has no surface") {
  const auto grid = sample_field([](const Eigen::Vector3d&) { return 0.2; }, 10);
  CHECK_THROWS_AS(extract_isosurface(grid), Error);
  try {
    extract_isosurface(grid);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EmptySurface);
  }
}

TEST_CASE("component counting uses face connectivity") {
  const auto a = ball({0.25, 0.5, 0.5}, 0.15);
  const auto b = ball({0.75, 0.5, 0.5}, 0.15);
  const auto two = components(sample_field([&](const Eigen::Vector3d& p) { return std::max(a(p), b(p)); }, 40));
  CHECK(two.component_count == 2);
  CHECK(two.component_voxels[0] == two.component_voxels[1]);
  CHECK(two.plane_areas.size() == 40);

  // Diagonal neighbors only: three voxels touching along edges and corners.
  ProbeGrid g;
  g.dims = {3, 3, 3};
  g.values = Eigen::VectorXd::Zero(27);
  g.values(g.index(0, 0, 0)) = 1.0;
  g.values(g.index(1, 1, 0)) = 1.0;
  g.values(g.index(2, 2, 1)) = 1.0;
  CHECK(components(g).component_count == 3);
  g.values(g.index(1, 0, 0)) = 1.0;
  CHECK(components(g).component_count == 2);
  CHECK(components(g).total_voxels() == 4);

  const auto none = components(sample_field([](const Eigen::Vector3d&) { return 0.0; }, 5));
  CHECK(none.component_count == 0);
}

TEST_CASE("component report formats") {
  const auto report = components(sample_field(ball({0.5, 0.5, 0.5}, 0.3), 10));
  CHECK(report.to_text().find("connected components: 1") != std::string::npos);
  CHECK(report.to_key_value().find("component_count=1\n") != std::string::npos);
  CHECK(report.to_key_value().find("resolution=10\n") != std::string::npos);
}

TEST_CASE("section components see holes through the complement") {
  const int n = 64;
  Image annulus(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      const double d = std::hypot((c + 0.5) / n - 0.5, (r + 0.5) / n - 0.5);
      annulus(r, c) = (d > 0.15 && d < 0.35) ? 1.0 : 0.0;
    }
  CHECK(section_components(annulus) == 1);
  CHECK(section_components(annulus, 0.5, true) == 2);
  CHECK(section_area(annulus) == doctest::Approx(std::numbers::pi * (0.35 * 0.35 - 0.15 * 0.15)).epsilon(0.03));
}

TEST_CASE("cross sections are laid out row = second axis, column = first axis") {
  PhaseFieldNet<double> net({3, 1});
  net.weight(0) << 4.0, 0.0, 0.0;  // increases with x only
  net.bias(0) << -2.0;
  const Image z = cross_section(net, Axis::Z, 0.5, 8);
  CHECK(z(0, 7) > z(0, 0));
  CHECK(z(0, 3) == z(7, 3));
  const Image x = cross_section(net, Axis::X, 0.25, 8);
  CHECK((x.array() == x(0, 0)).all());
  const Image y = cross_section(net, Axis::Y, 0.5, 8);  // columns run along x
  CHECK(y(2, 6) > y(2, 1));
  CHECK_THROWS_AS(cross_section(net, Axis::Z, 1.5, 8), Error);
  CHECK(parse_axis("y") == Axis::Y);
  CHECK_THROWS_AS(parse_axis("w"), Error);
}

TEST_CASE("interface width of a tanh profile") {
  // u = (1 - tanh((r - R) / w)) / 2 has slope -1 / (2 w) at r = R.
  const double R = 0.25, w = 0.03;
  const auto f = ball({0.5, 0.5, 0.5}, R, w);
  const auto width = interface_width(f, 0.5);
  REQUIRE(width.has_value());
  CHECK(*width == doctest::Approx(2.0 * w).epsilon(1e-4));

  // A crossing close to the domain face is still measured although the
  // profile never gets near 0 before the face.
  const auto wide = ball({0.5, 0.5, 0.5}, 0.45, 0.1);
  const auto near_face = interface_width(wide, 0.5);
  REQUIRE(near_face.has_value());
  CHECK(*near_face == doctest::Approx(0.2).epsilon(1e-4));

  const auto flat = interface_width([](const Eigen::Vector3d&) { return 0.5; }, 0.5);
  CHECK_FALSE(flat.has_value());
}

TEST_CASE("probing the zero network") {
  const PhaseFieldNet<double> net({3, 30, 30, 1});
  const auto grid = probe(net, 50);
  CHECK(grid.values.size() == 125000);
  CHECK((grid.values.array() == 0.5).all());
  CHECK(grid.node(0, 0, 0).isApprox(Eigen::Vector3d::Constant(0.01)));
  CHECK(cross_section(net, Axis::Z, 0.5, 17).rows() == 17);
  CHECK((cross_section(net, Axis::Z, 0.5, 17).array() == 0.5).all());
}

TEST_CASE("probe is deterministic and mesh vertices sit on the level set") {
  const auto net = init_net<double>({3, 30, 30, 1}, 3);
  const auto a = probe(net, 20);
  CHECK(a.values == probe(net, 20).values);
  // Shift the iso level to the median so the surface is nonempty.
  std::vector<double> sorted(a.values.data(), a.values.data() + a.values.size());
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double iso = sorted[sorted.size() / 2];
  const auto mesh = extract_isosurface(a, iso);
  double worst = 0.0;
  for (const auto& v : mesh.vertices) worst = std::max(worst, std::abs(forward(net, v) - iso));
  // Linear interpolation error over one cell of width 1/20.
  CHECK(worst < 0.02);
  for (const auto& t : mesh.triangles) {
    const double area =
        0.5 * (mesh.vertices[t[1]] - mesh.vertices[t[0]]).cross(mesh.vertices[t[2]] - mesh.vertices[t[0]]).norm();
    CHECK(area > 1e-12);
  }
}

TEST_CASE("constant grids and monotonicity in iso") {
  const auto low = sample_field([](const Eigen::Vector3d&) { return 0.4; }, 6);
  CHECK(components(low).component_count == 0);
  const auto high = sample_field([](const Eigen::Vector3d&) { return 0.6; }, 6);
  CHECK(components(high).component_count == 1);
  CHECK(components(high).total_voxels() == 216);
  CHECK_THROWS_AS(extract_isosurface(high), Error);

  const auto f = sample_field(ball({0.5, 0.5, 0.5}, 0.3, 0.1), 20);
  long previous = components(f, 0.0).total_voxels();
  for (double iso = 0.1; iso < 1.0; iso += 0.1) {
    const long now = components(f, iso).total_voxels();
    CHECK(now <= previous);
    previous = now;
  }
}

TEST_CASE("two separated cubes of ones") {
  ProbeGrid g;
  g.dims = {10, 10, 10};
  g.values = Eigen::VectorXd::Zero(1000);
  for (int k = 2; k < 5; ++k)
    for (int j = 2; j < 5; ++j)
      for (int i = 1; i < 4; ++i) {
        g.values(g.index(i, j, k)) = 1.0;
        g.values(g.index(i + 5, j + 3, k + 4)) = 1.0;
      }
  const auto report = components(g);
  CHECK(report.component_count == 2);
  CHECK(report.component_voxels == std::vector<long>{27, 27});
}

TEST_CASE("OBJ export line counts") {
  VolumeMesh square;
  square.vertices = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
  square.triangles = {{0, 1, 2}, {0, 2, 3}};
  const auto path = std::filesystem::temp_directory_path() / "phasevol_test_square.obj";
  export_mesh(square, path);
  std::ifstream is(path);
  int v = 0, f = 0;
  for (std::string line; std::getline(is, line);) {
    v += line.rfind("v ", 0) == 0;
    f += line.rfind("f ", 0) == 0;
  }
  CHECK(v == 4);
  CHECK(f == 2);
  export_mesh(VolumeMesh{}, path);
  CHECK(import_mesh(path).triangles.empty());
  std::filesystem::remove(path);
  CHECK_THROWS_AS(export_mesh(square, "/nonexistent-dir/x.obj"), Error);
}

TEST_CASE("mesh OBJ round trip") {
  const auto mesh = extract_isosurface(sample_field(ball({0.5, 0.5, 0.5}, 0.3), 12));
  const auto path = std::filesystem::temp_directory_path() / "phasevol_test_mesh.obj";
  export_mesh(mesh, path);
  const auto back = import_mesh(path);
  std::filesystem::remove(path);
  REQUIRE(back.vertices.size() == mesh.vertices.size());
  CHECK(back.triangles == mesh.triangles);
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) CHECK(back.vertices[v] == mesh.vertices[v]);
}
