#include <cmath>

#include <doctest.h>

#include "phasevol/objective.hpp"
#include "test_support.hpp"

using namespace phasevol;

namespace {

// Two 4x4 planes at z = 0 and z = 1, left half dark and right half bright.
SliceStack half_stack() {
  SliceStack stack;
  for (double z : {0.0, 1.0}) {
    SlicePlane plane{z, Image::Zero(4, 4)};
    plane.grid.rightCols(2).setOnes();
    stack.planes.push_back(plane);
  }
  return stack;
}

// u depends on x only: u = (tanh(a x + b) + 1) / 2.
PhaseFieldNet<double> ramp_net(double a, double b) {
  PhaseFieldNet<double> net({3, 1});
  net.weight(0) << a, 0.0, 0.0;
  net.bias(0) << b;
  return net;
}

// Composite Simpson integral over x of the energy density of ramp_net.
double ramp_energy(double a, double b, const DiffusionTensor& eps, int intervals = 20000) {
  auto density = [&](double x) {
    const double t = std::tanh(a * x + b);
    const double u = 0.5 * (t + 1.0);
    const double ux = 0.5 * a * (1.0 - t * t);
    return energy_integrand<double>(u, Eigen::Vector3d(ux, 0.0, 0.0), eps);
  };
  const double h = 1.0 / intervals;
  double sum = density(0.0) + density(1.0);
  for (int i = 1; i < intervals; ++i) sum += (i % 2 ? 4.0 : 2.0) * density(i * h);
  return sum * h / 3.0;
}

}  // namespace

TEST_CASE("energy integrand by hand") {
  const DiffusionTensor eps{1.0, 1.0, 10.0};  // mean 4
  CHECK(energy_integrand<double>(0.5, Eigen::Vector3d::Zero(), eps) == 0.0078125);
  for (double g : {0.0, 0.3, -2.0}) {
    CHECK(energy_integrand<double>(0.0, Eigen::Vector3d(0.0, 0.0, g), eps) == doctest::Approx(5.0 * g * g));
    CHECK(energy_integrand<double>(1.0, Eigen::Vector3d(0.0, 0.0, g), eps) == doctest::Approx(5.0 * g * g));
  }
  // 1/2 (1*1 + 1*4 + 10*9) + 0 = 47.5
  CHECK(energy_integrand<double>(1.0, Eigen::Vector3d(1.0, 2.0, 3.0), eps) == doctest::Approx(47.5));
}

TEST_CASE("isotropic tensor gives the standard energy") {
  for (double e : {0.01, 0.5, 3.0}) {
    const Eigen::Vector3d g(0.3, -1.2, 2.0);
    const double u = 0.2;
    const double standard = 0.5 * e * g.squaredNorm() + u * u * (1 - u) * (1 - u) / (2.0 * e);
    CHECK(energy_integrand<double>(u, g, DiffusionTensor::isotropic(e)) == doctest::Approx(standard).epsilon(1e-15));
  }
}

TEST_CASE("zero network objective by hand") {
  const PhaseFieldNet<double> net({3, 30, 30, 1});
  const auto labels = assign_phases(half_stack(), 0.75);
  REQUIRE(labels.assigned_count() > 0);
  ObjectiveSpec spec;
  spec.penalty = 1000.0;
  spec.diffusion = {1.0, 1.0, 10.0};
  spec.estimator = MonteCarlo{64};
  // Every labeled point contributes 0.25: (1000 / (2 S*)) * S* * 0.25.
  CHECK(regression_loss<double>(net, labels, 1000.0) == doctest::Approx(125.0).epsilon(1e-14));
  Rng rng(1);
  const auto terms = total_objective<double>(net, labels, spec, rng);
  CHECK(terms.regression == doctest::Approx(125.0).epsilon(1e-14));
  CHECK(terms.energy == doctest::Approx(0.0078125).epsilon(1e-14));
  CHECK(terms.total() == doctest::Approx(125.0078125).epsilon(1e-14));
  spec.estimator = FixedGrid{5};
  CHECK(total_objective<double>(net, labels, spec, rng).total() == doctest::Approx(125.0078125).epsilon(1e-14));
}

TEST_CASE("regression weights points by the labeled count only") {
  // A mid-gray column stays unassigned and must not change the normalization.
  auto stack = half_stack();
  for (auto& plane : stack.planes) plane.grid.col(1).setConstant(0.5);
  const auto labels = assign_phases(stack, 0.75);
  CHECK(labels.unassigned_count > 0);
  const PhaseFieldNet<double> net({3, 4, 1});
  CHECK(regression_loss<double>(net, labels, 8.0) == doctest::Approx(1.0));
}

TEST_CASE("regression is linear in p and blind to point order") {
  const auto net = init_net<double>({3, 6, 6, 1}, 8);
  auto labels = assign_phases(half_stack(), 0.75);
  const double base = regression_loss<double>(net, labels, 10.0);
  CHECK(base > 0.0);
  CHECK(regression_loss<double>(net, labels, 20.0) == doctest::Approx(2.0 * base).epsilon(1e-14));
  labels.inside_points = labels.inside_points.rowwise().reverse().eval();
  labels.outside_points = labels.outside_points.rowwise().reverse().eval();
  CHECK(regression_loss<double>(net, labels, 10.0) == doctest::Approx(base).epsilon(1e-13));
}

TEST_CASE("fixed grid of 75 points per axis has 421875 nodes") { CHECK(grid_nodes(75).cols() == 421875); }

TEST_CASE("energy estimators converge to the analytic integral") {
  const double a = 12.0, b = -6.0;
  const auto net = ramp_net(a, b);
  for (const DiffusionTensor eps : {DiffusionTensor::isotropic(0.01), DiffusionTensor{0.02, 1.0, 5.0}}) {
    const double exact = ramp_energy(a, b, eps);
    // x-only field: the grid reduces to the 1D midpoint rule, error O(h^2).
    CHECK(grid_energy<double>(net, eps, 75) == doctest::Approx(exact).epsilon(1e-3));
    CHECK(grid_energy<double>(net, eps, 150) == doctest::Approx(exact).epsilon(3e-4));
    Rng rng(17);
    CHECK(mc_energy<double>(net, eps, 200000, rng) == doctest::Approx(exact).epsilon(0.01));
  }
}

TEST_CASE("Monte Carlo and fixed grid agree on a trained-looking field") {
  const auto net = init_net<double>({3, 30, 30, 1}, 5);
  const DiffusionTensor eps{1.0, 1.0, 5.0};
  const double g75 = grid_energy<double>(net, eps, 75);
  const double g150 = grid_energy<double>(net, eps, 150);
  CHECK(std::abs(g75 - g150) / g150 < 0.005);
  Rng rng(8);
  double mean = 0.0;
  for (int rep = 0; rep < 20; ++rep) mean += mc_energy<double>(net, eps, 5000, rng) / 20.0;
  CHECK(std::abs(mean - g150) / g150 < 0.02);
}

TEST_CASE("Monte Carlo batches are fresh on every draw") {
  const auto net = init_net<double>({3, 8, 1}, 2);
  Rng rng(3);
  const double first = mc_energy<double>(net, DiffusionTensor{}, 100, rng);
  const double second = mc_energy<double>(net, DiffusionTensor{}, 100, rng);
  CHECK(first != second);
  Rng replay(3);
  CHECK(mc_energy<double>(net, DiffusionTensor{}, 100, replay) == first);
}

TEST_CASE("grid nodes are cell centered with x fastest") {
  const auto nodes = grid_nodes(3);
  REQUIRE(nodes.cols() == 27);
  CHECK(nodes.col(0).isApprox(Eigen::Vector3d(1.0 / 6, 1.0 / 6, 1.0 / 6)));
  CHECK(nodes.col(1).isApprox(Eigen::Vector3d(0.5, 1.0 / 6, 1.0 / 6)));
  CHECK(nodes.col(3).isApprox(Eigen::Vector3d(1.0 / 6, 0.5, 1.0 / 6)));
  CHECK(nodes.col(26).isApprox(Eigen::Vector3d(5.0 / 6, 5.0 / 6, 5.0 / 6)));
}

TEST_CASE("full objective gradient matches finite differences") {
  const auto net = init_net<double>({3, 4, 4, 1}, 31);
  const auto labels = assign_phases(half_stack(), 0.75);
  ObjectiveSpec spec;
  spec.penalty = 1000.0;
  spec.diffusion = {1.0, 1.0, 10.0};
  spec.estimator = MonteCarlo{16};
  Rng rng(12);
  const Points3<double> batch = rng.uniform_points<double>(16);

  const auto analytic = objective_gradient<double>(net, labels, spec, batch);
  auto objective = [&](const PhaseFieldNet<double>& n) {
    return regression_loss<double>(n, labels, spec.penalty) + mean_energy<double>(n, batch, spec.diffusion);
  };
  CHECK(analytic.terms.total() == doctest::Approx(objective(net)).epsilon(1e-13));
  const Eigen::VectorXd fd = testing::central_difference_parameters(net, objective, 1e-6);
  CHECK(testing::max_relative_error(analytic.gradient, fd, 1e-6) < 1e-4);

  // Same batch reproduced from the generator state.
  Rng again(12);
  const auto from_rng = objective_gradient<double>(net, labels, spec, again);
  CHECK(from_rng.gradient == analytic.gradient);
}

TEST_CASE("estimator parsing") {
  CHECK(std::get<MonteCarlo>(parse_estimator("mc")).batch_size == 5000);
  CHECK(std::get<MonteCarlo>(parse_estimator("mc:128")).batch_size == 128);
  CHECK(std::get<FixedGrid>(parse_estimator("grid:75")).points_per_axis == 75);
  CHECK(to_string(parse_estimator("grid:40")) == "grid:40");
  for (const char* bad : {"grid", "grid:1", "mc:0", "mc:-3", "mc:12x", "sobol"})
    CHECK_THROWS_AS(parse_estimator(bad), Error);
}

TEST_CASE("invalid objective settings are rejected") {
  ObjectiveSpec spec;
  spec.penalty = 0.0;
  CHECK_THROWS_AS(spec.validate(), Error);
  spec.penalty = 1.0;
  spec.diffusion.z = -1.0;
  CHECK_THROWS_AS(spec.validate(), Error);
  spec.diffusion.z = 1.0;
  spec.estimator = MonteCarlo{0};
  CHECK_THROWS_AS(spec.validate(), Error);
}

TEST_CASE("single precision objective agrees with double") {
  const auto net = init_net<double>({3, 8, 8, 1}, 4);
  PhaseFieldNet<float> netf(net.widths());
  netf.parameters() = net.parameters().cast<float>();
  const auto labels = assign_phases(half_stack(), 0.75);
  Rng rng(1);
  const Points3<double> pts = rng.uniform_points<double>(500);
  const DiffusionTensor eps{};
  CHECK(mean_energy<float>(netf, pts.cast<float>(), eps) ==
        doctest::Approx(mean_energy<double>(net, pts, eps)).epsilon(1e-4));
  CHECK(regression_loss<float>(netf, labels, 10.0) == doctest::Approx(regression_loss<double>(net, labels, 10.0)).epsilon(1e-4));
}
