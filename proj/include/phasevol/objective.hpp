#pragma once

#include <cmath>
#include <string>
#include <type_traits>
#include <variant>

#include <Eigen/Core>

#include "phasevol/error.hpp"
#include "phasevol/phase_net.hpp"
#include "phasevol/random.hpp"
#include "phasevol/slice_data.hpp"

namespace phasevol {

/// Diagonal diffusion tensor diag(eps_x, eps_y, eps_z).
struct DiffusionTensor {
  double x = 1.0;
  double y = 1.0;
  double z = 5.0;

  static DiffusionTensor isotropic(double eps) { return {eps, eps, eps}; }
  /// trace / 3
  double mean() const { return (x + y + z) / 3.0; }
  Eigen::Vector3d diagonal() const { return {x, y, z}; }
  void validate() const;
};

struct MonteCarlo {
  Eigen::Index batch_size = 5000;
};

/// Tensor grid of n cell-centered nodes per axis, (k + 0.5) / n.
struct FixedGrid {
  int points_per_axis = 75;
};

using Estimator = std::variant<MonteCarlo, FixedGrid>;

/// "mc", "mc:<B>", "grid:<n>". Throws Usage on anything else.
Estimator parse_estimator(const std::string& text);
std::string to_string(const Estimator& estimator);

struct ObjectiveSpec {
  double penalty = 1000.0;
  DiffusionTensor diffusion;
  Estimator estimator = MonteCarlo{};

  void validate() const;
};

struct ObjectiveTerms {
  double regression = 0.0;
  double energy = 0.0;
  double total() const { return regression + energy; }
};

/// 1/2 g^T eps g + u^2 (1 - u)^2 / (2 eps_bar)
template <typename Scalar>
Scalar energy_integrand(Scalar u, const Vec3<Scalar>& grad, const DiffusionTensor& eps) {
  const Scalar diffusion =
      Scalar(0.5) * (Scalar(eps.x) * grad.x() * grad.x() + Scalar(eps.y) * grad.y() * grad.y() +
                     Scalar(eps.z) * grad.z() * grad.z());
  const Scalar well = u * u * (Scalar(1) - u) * (Scalar(1) - u);
  return diffusion + well / (Scalar(2) * Scalar(eps.mean()));
}

/// Cell-centered n^3 nodes, x varying fastest.
Points3<double> grid_nodes(int points_per_axis);

/// The energy quadrature points for one evaluation: a fresh uniform batch
/// (advancing `rng`) or the fixed grid.
Points3<double> integration_points(const Estimator& estimator, Rng& rng);

namespace detail {

template <typename Scalar>
Points3<Scalar> as_scalar(const Eigen::Matrix3Xd& pts) {
  if constexpr (std::is_same_v<Scalar, double>) {
    return pts;
  } else {
    return pts.cast<Scalar>();
  }
}

}  // namespace detail

/// (p / (2 S*)) * (sum_out u^2 + sum_in (u - 1)^2), evaluated on every
/// labeled point. Adds the parameter gradient into `grad` when given.
template <typename Scalar>
Scalar regression_loss(const PhaseFieldNet<Scalar>& net, const PhaseLabels& labels, double penalty,
                       VectorX<Scalar>* grad = nullptr) {
  const auto assigned = labels.assigned_count();
  if (assigned == 0) throw Error(ErrorKind::DegenerateLabels, "no labeled points");
  const Scalar weight = Scalar(penalty) / (Scalar(2) * Scalar(assigned));
  NetTape<Scalar> tape;

  auto term = [weight](Scalar target) {
    return [weight, target](const RowVectorX<Scalar>& u, const Points3<Scalar>&, RowVectorX<Scalar>& value_seed,
                            Points3<Scalar>&) {
      const auto residual = (u.array() - target).eval();
      value_seed = (Scalar(2) * weight * residual).matrix();
      return weight * residual.square().sum();
    };
  };
  const Scalar outside =
      accumulate_pointwise<Scalar>(net, detail::as_scalar<Scalar>(labels.outside_points), false, term(Scalar(0)), grad, tape);
  const Scalar inside =
      accumulate_pointwise<Scalar>(net, detail::as_scalar<Scalar>(labels.inside_points), false, term(Scalar(1)), grad, tape);
  return outside + inside;
}

/// Mean energy integrand over `points`, with optional parameter gradient.
template <typename Scalar>
Scalar mean_energy(const PhaseFieldNet<Scalar>& net, const std::type_identity_t<Eigen::Ref<const Points3<Scalar>>>& points,
                   const DiffusionTensor& eps, VectorX<Scalar>* grad = nullptr) {
  if (points.cols() == 0) return Scalar(0);
  const Scalar scale = Scalar(1) / Scalar(points.cols());
  const Scalar inv_well = Scalar(1) / (Scalar(2) * Scalar(eps.mean()));
  const Eigen::Array<Scalar, 3, 1> diag = eps.diagonal().cast<Scalar>().array();
  NetTape<Scalar> tape;
  auto integrand = [&](const RowVectorX<Scalar>& u, const Points3<Scalar>& g, RowVectorX<Scalar>& value_seed,
                       Points3<Scalar>& grad_seed) {
    const auto ua = u.array();
    const auto one_minus = (Scalar(1) - ua).eval();
    // d/du [u^2 (1-u)^2] = 2 u (1-u) (1-2u)
    value_seed = (scale * inv_well * Scalar(2) * ua * one_minus * (Scalar(1) - Scalar(2) * ua)).matrix();
    grad_seed = (scale * (g.array().colwise() * diag)).matrix();
    const Scalar diffusion = Scalar(0.5) * (g.array().square().colwise() * diag).sum();
    const Scalar well = inv_well * (ua.square() * one_minus.square()).sum();
    return diffusion + well;
  };
  return scale * accumulate_pointwise<Scalar>(net, points, true, integrand, grad, tape);
}

/// Monte Carlo estimate with B fresh i.i.d. uniform points drawn from `rng`.
template <typename Scalar>
Scalar mc_energy(const PhaseFieldNet<Scalar>& net, const DiffusionTensor& eps, Eigen::Index batch_size, Rng& rng) {
  if (batch_size < 1) throw Error(ErrorKind::Usage, "batch size must be at least 1");
  return mean_energy<Scalar>(net, detail::as_scalar<Scalar>(rng.uniform_points<double>(batch_size)), eps);
}

/// Riemann mean over the cell-centered n^3 grid.
template <typename Scalar>
Scalar grid_energy(const PhaseFieldNet<Scalar>& net, const DiffusionTensor& eps, int points_per_axis) {
  if (points_per_axis < 2) throw Error(ErrorKind::Usage, "fixed grid needs at least 2 points per axis");
  return mean_energy<Scalar>(net, detail::as_scalar<Scalar>(grid_nodes(points_per_axis)), eps);
}

/// Regression term plus the selected energy estimator. In Monte Carlo mode the
/// batch is drawn from `rng`.
template <typename Scalar>
ObjectiveTerms total_objective(const PhaseFieldNet<Scalar>& net, const PhaseLabels& labels, const ObjectiveSpec& spec,
                               Rng& rng) {
  spec.validate();
  const Points3<double> points = integration_points(spec.estimator, rng);
  ObjectiveTerms terms;
  terms.regression = static_cast<double>(regression_loss<Scalar>(net, labels, spec.penalty));
  terms.energy = static_cast<double>(mean_energy<Scalar>(net, detail::as_scalar<Scalar>(points), spec.diffusion));
  return terms;
}

template <typename Scalar>
struct ObjectiveGradient {
  ObjectiveTerms terms;
  VectorX<Scalar> gradient;
};

/// Objective terms and d(total)/d(theta) on explicit energy points.
/// Throws NonFiniteLoss when anything comes out non-finite.
template <typename Scalar>
ObjectiveGradient<Scalar> objective_gradient(const PhaseFieldNet<Scalar>& net, const PhaseLabels& labels,
                                             const ObjectiveSpec& spec,
                                             const std::type_identity_t<Eigen::Ref<const Points3<Scalar>>>& energy_points) {
  ObjectiveGradient<Scalar> out{{}, VectorX<Scalar>::Zero(net.parameter_count())};
  out.terms.regression = static_cast<double>(regression_loss<Scalar>(net, labels, spec.penalty, &out.gradient));
  out.terms.energy = static_cast<double>(mean_energy<Scalar>(net, energy_points, spec.diffusion, &out.gradient));
  if (!std::isfinite(out.terms.total())) throw Error(ErrorKind::NonFiniteLoss, "objective is not finite");
  if (!out.gradient.allFinite()) throw Error(ErrorKind::NonFiniteLoss, "objective gradient is not finite");
  return out;
}

template <typename Scalar>
ObjectiveGradient<Scalar> objective_gradient(const PhaseFieldNet<Scalar>& net, const PhaseLabels& labels,
                                             const ObjectiveSpec& spec, Rng& rng) {
  spec.validate();
  return objective_gradient<Scalar>(net, labels, spec, detail::as_scalar<Scalar>(integration_points(spec.estimator, rng)));
}

}  // namespace phasevol
