#include "phasevol/objective.hpp"

#include "phasevol/image_io.hpp"

namespace phasevol {

void DiffusionTensor::validate() const {
  if (!(x > 0.0 && y > 0.0 && z > 0.0 && std::isfinite(x) && std::isfinite(y) && std::isfinite(z)))
    throw Error(ErrorKind::Usage, "diffusion coefficients must be positive and finite");
}

void ObjectiveSpec::validate() const {
  if (!(penalty > 0.0 && std::isfinite(penalty))) throw Error(ErrorKind::Usage, "penalty p must be positive");
  diffusion.validate();
  if (const auto* mc = std::get_if<MonteCarlo>(&estimator); mc && mc->batch_size < 1)
    throw Error(ErrorKind::Usage, "batch size must be at least 1");
  if (const auto* grid = std::get_if<FixedGrid>(&estimator); grid && grid->points_per_axis < 2)
    throw Error(ErrorKind::Usage, "fixed grid needs at least 2 points per axis");
}

Estimator parse_estimator(const std::string& text) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  long count = -1;
  if (colon != std::string::npos) {
    const std::string number = text.substr(colon + 1);
    try {
      std::size_t used = 0;
      count = std::stol(number, &used);
      if (used != number.size()) count = -1;
    } catch (const std::exception&) {
      count = -1;
    }
    if (count < 1) throw Error(ErrorKind::Usage, "bad estimator size in '" + text + "'");
  }
  if (kind == "mc") return MonteCarlo{count > 0 ? count : MonteCarlo{}.batch_size};
  if (kind == "grid") {
    if (count < 2) throw Error(ErrorKind::Usage, "grid estimator needs grid:<n> with n >= 2");
    return FixedGrid{static_cast<int>(count)};
  }
  throw Error(ErrorKind::Usage, "estimator must be mc, mc:<B> or grid:<n>, got '" + text + "'");
}

std::string to_string(const Estimator& estimator) {
  if (const auto* mc = std::get_if<MonteCarlo>(&estimator)) return "mc:" + std::to_string(mc->batch_size);
  return "grid:" + std::to_string(std::get<FixedGrid>(estimator).points_per_axis);
}

Points3<double> grid_nodes(int points_per_axis) {
  const Eigen::Index n = points_per_axis;
  Points3<double> nodes(3, n * n * n);
  Eigen::Index j = 0;
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index h = 0; h < n; ++h, ++j)
        nodes.col(j) << (static_cast<double>(h) + 0.5) / static_cast<double>(n),
            (static_cast<double>(i) + 0.5) / static_cast<double>(n), (static_cast<double>(k) + 0.5) / static_cast<double>(n);
  return nodes;
}

Points3<double> integration_points(const Estimator& estimator, Rng& rng) {
  if (const auto* mc = std::get_if<MonteCarlo>(&estimator)) return rng.uniform_points<double>(mc->batch_size);
  return grid_nodes(std::get<FixedGrid>(estimator).points_per_axis);
}

}  // namespace phasevol
