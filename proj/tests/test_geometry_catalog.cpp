#include <cmath>

#include <doctest.h>

#include "phasevol/error.hpp"
#include "phasevol/geometry_catalog.hpp"
#include "phasevol/random.hpp"

using namespace phasevol;

namespace {

double phi(const std::string& name, double x, double y, double z) {
  return find_geometry(name).level_set(Eigen::Vector3d(x, y, z));
}

}  // namespace

TEST_CASE("catalog holds the six geometries") {
  CHECK(catalog().size() == 6);
  for (const char* name :
       {"hourglass", "cylinder", "sideways_cylinder", "two_way_branch", "four_way_branch", "hollow_tilted_cylinder"})
    CHECK(find_geometry(name).name == name);
  try {
    find_geometry("bunny");
    FAIL("expected UnknownGeometry");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnknownGeometry);
  }
}

TEST_CASE("level sets evaluated by hand") {
  CHECK(phi("hourglass", 0.5, 0.5, 0.5) == doctest::Approx(-0.01));
  // (0.1)^2 + 0 - 1.5 * 0.5^4 - 0.01 = 0.01 - 0.09375 - 0.01
  CHECK(phi("hourglass", 0.6, 0.5, 1.0) == doctest::Approx(-0.09375));
  for (double z : {0.0, 0.3, 1.0}) CHECK(phi("cylinder", 0.5, 0.5, z) == doctest::Approx(-0.2));
  for (double x : {0.0, 0.3, 1.0}) CHECK(phi("sideways_cylinder", x, 0.5, 0.5) == doctest::Approx(-0.2));
  // Two-way at x=0.5, y=0.5, z=0: (cos(pi) - 1)^2 = 4; inner subtracts 0.2, outer 0.5.
  CHECK(phi("two_way_branch", 0.5, 0.5, 0.0) == doctest::Approx(3.8));
  CHECK((*find_geometry("two_way_branch").outer)(Eigen::Vector3d(0.5, 0.5, 0.0)) == doctest::Approx(3.5));
  // Four-way inner at (0, 0.5, 1): (1 - (-1))^2 + 0 + (cos(pi) + 1)^2 + 9 * 0.25 - 2.75 = 4 + 0 + 2.25 - 2.75
  CHECK(phi("four_way_branch", 0.0, 0.5, 1.0) == doctest::Approx(3.5));
  // Hollow tilted cylinder at z=0 centred on x = 0.4: (-0.15) * (-0.05) > 0 on the axis, negative in the wall.
  CHECK(phi("hollow_tilted_cylinder", 0.4, 0.5, 0.0) == doctest::Approx(0.0075));
  CHECK(phi("hollow_tilted_cylinder", 0.4 + std::sqrt(0.1), 0.5, 0.0) < 0.0);
  CHECK(phi("hollow_tilted_cylinder", 0.6, 0.5, 1.0) == doctest::Approx(0.0075));
}

TEST_CASE("experiment settings carried by the catalog") {
  CHECK(find_geometry("cylinder").slices == 2);
  CHECK(find_geometry("cylinder").eps_z == 10.0);
  CHECK(find_geometry("hollow_tilted_cylinder").hidden_width == 50);
  CHECK(find_geometry("four_way_branch").noisy());
  CHECK_FALSE(find_geometry("hourglass").noisy());
  const auto& b = find_geometry("four_way_branch");
  CHECK(b.sigma == 0.3);
  CHECK(b.threshold == 0.75);
  CHECK(b.points_per_plane == 625);
}

TEST_CASE("default plane heights") {
  CHECK(default_z_planes(1) == std::vector<double>{0.5});
  CHECK(default_z_planes(2) == std::vector<double>{0.0, 1.0});
  CHECK(default_z_planes(3) == std::vector<double>{0.0, 0.5, 1.0});
  CHECK(default_z_planes(5) == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
  CHECK_THROWS_AS(default_z_planes(0), Error);
}

TEST_CASE("grid size must be a perfect square") {
  CHECK(grid_side(1600) == 40);
  CHECK(grid_side(625) == 25);
  for (long bad : {0L, -4L, 1601L, 2L}) {
    try {
      grid_side(bad);
      FAIL("expected BadGrid");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::BadGrid);
    }
  }
}

TEST_CASE("noiseless slices are binary and use the strict sign test") {
  const auto stack = sample_noiseless(find_geometry("cylinder").level_set, 2, 1600);
  REQUIRE(stack.planes.size() == 2);
  CHECK(stack.planes[0].z == 0.0);
  CHECK(stack.planes[1].z == 1.0);
  for (const auto& p : stack.planes) CHECK(((p.grid.array() == 0.0) || (p.grid.array() == 1.0)).all());
  CHECK(stack.planes[0].grid(20, 20) == 1.0);
  CHECK(stack.planes[0].grid(0, 0) == 0.0);

  // Phi = 0 exactly maps to 0; here Phi = x - 0.5 vanishes on the column x = 0.5 of a 1x1 grid.
  const auto zero = sample_noiseless([](const Eigen::Vector3d& p) { return p.x() - 0.5; }, 1, 1);
  CHECK(zero.planes[0].grid(0, 0) == 0.0);
  CHECK_THROWS_AS(sample_noiseless(find_geometry("cylinder").level_set, 2, 1500), Error);
  CHECK_THROWS_AS(sample_noiseless(find_geometry("cylinder").level_set, 2, 1600, {0.0}), Error);
}

TEST_CASE("noise model bounds per region") {
  const auto& g = find_geometry("two_way_branch");
  for (double sigma : {0.0, 0.1, 0.3}) {
    const auto noisy = g.with_noise(sigma);
    const auto stack = sample_noisy(noisy, 4, 400, {}, 5);
    int band = 0;
    for (const auto& plane : stack.planes) {
      const int n = static_cast<int>(plane.grid.rows());
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
          const auto x = pixel_coordinate(r, c, n, plane.z);
          const double v = plane.grid(r, c);
          const double inner = noisy.inner(x), outer = noisy.outer(x);
          if (inner < 0 && outer < 0) {
            CHECK(v >= 1.0 - sigma);
            if (sigma == 0.0) CHECK(v == 1.0);
          } else if (outer < 0) {
            ++band;
          } else {
            CHECK(v <= sigma);
            if (sigma == 0.0) CHECK(v == 0.0);
          }
          CHECK(v >= 0.0);
          CHECK(v <= 1.0);
        }
    }
    CHECK(band > 0);
  }
}

TEST_CASE("two-way band is nonempty on every plane that meets the vessel") {
  const auto& g = find_geometry("two_way_branch");
  for (double z : default_z_planes(g.slices)) {
    int vessel = 0, band = 0;
    for (int r = 0; r < 20; ++r)
      for (int c = 0; c < 20; ++c) {
        const auto x = pixel_coordinate(r, c, 20, z);
        vessel += g.level_set(x) < 0;
        band += (*g.outer)(x) < 0 && g.level_set(x) >= 0;
      }
    if (vessel > 0) CHECK(band > 0);
  }
}

TEST_CASE("noisy generation is deterministic per seed and follows the draw order") {
  const auto noisy = find_geometry("four_way_branch").with_noise(0.3);
  const auto a = sample_noisy(noisy, 5, 625, {}, 42);
  const auto b = sample_noisy(noisy, 5, 625, {}, 42);
  CHECK(a == b);
  CHECK_FALSE(a == sample_noisy(noisy, 5, 625, {}, 43));
  CHECK(a.metadata.at("seed") == "42");

  // The first pixel consumes the first draw.
  Rng rng(42);
  const double u = rng.uniform();
  const auto x = pixel_coordinate(0, 0, 25, 0.0);
  const double inner = noisy.inner(x), outer = noisy.outer(x);
  const double expected = (inner < 0 && outer < 0) ? 0.7 + 0.3 * u : (outer < 0 ? u : 0.3 * u);
  CHECK(a.planes[0].grid(0, 0) == expected);
  CHECK_THROWS_AS(sample_noisy(find_geometry("four_way_branch").with_noise(1.0), 5, 625, {}, 1), Error);
}

TEST_CASE("four-way branch label counts") {
  const auto& g = find_geometry("four_way_branch");
  double inside = 0, outside = 0, unassigned = 0;
  const int runs = 20;
  for (int seed = 0; seed < runs; ++seed) {
    const auto stack = sample_noisy(g.with_noise(g.sigma), g.slices, g.points_per_plane, {}, derive_seed(seed, 1));
    const auto labels = assign_phases(stack, g.threshold);
    CHECK(labels.total_count() == 3125);
    inside += labels.inside_count() / double(runs);
    outside += labels.outside_count() / double(runs);
    unassigned += labels.unassigned_count / double(runs);
  }
  MESSAGE("mean counts inside " << inside << " outside " << outside << " unassigned " << unassigned);
  CHECK(std::abs(inside - 575) <= 0.15 * 575);
  CHECK(std::abs(outside - 1719) <= 0.15 * 1719);
  CHECK(std::abs(unassigned - 831) <= 0.15 * 831);
}
