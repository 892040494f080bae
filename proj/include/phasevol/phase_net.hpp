#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <type_traits>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "phasevol/error.hpp"
#include "phasevol/random.hpp"

namespace phasevol {

template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Points3 = Eigen::Matrix<Scalar, 3, Eigen::Dynamic>;
template <typename Scalar>
using RowVectorX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

inline const std::vector<int> kDefaultWidths{3, 30, 30, 1};

/// Multilayer perceptron u(x; theta) : R^3 -> (0, 1).
///
/// Hidden layers use tanh; the output layer uses (tanh(t) + 1) / 2 so the
/// field stays strictly inside (0, 1). All parameters live in one flat vector
/// laid out as [W_1, b_1, W_2, b_2, ...] with each W_l stored column-major
/// (shape widths[l] x widths[l-1]). Gradients use the same layout.
template <typename Scalar = double>
class PhaseFieldNet {
 public:
  using Vector = VectorX<Scalar>;
  using Matrix = MatrixX<Scalar>;
  using MatrixMap = Eigen::Map<Matrix>;
  using ConstMatrixMap = Eigen::Map<const Matrix>;
  using VectorMap = Eigen::Map<Vector>;
  using ConstVectorMap = Eigen::Map<const Vector>;

  PhaseFieldNet() = default;

  /// All-zero parameters. Throws BadShape unless widths is 3 -> ... -> 1.
  explicit PhaseFieldNet(std::vector<int> widths) : widths_(std::move(widths)) {
    validate_widths(widths_);
    offsets_.reserve(widths_.size());
    Eigen::Index offset = 0;
    for (std::size_t l = 1; l < widths_.size(); ++l) {
      offsets_.push_back(offset);
      offset += static_cast<Eigen::Index>(widths_[l]) * (widths_[l - 1] + 1);
    }
    offsets_.push_back(offset);
    theta_ = Vector::Zero(offset);
  }

  static void validate_widths(const std::vector<int>& widths) {
    if (widths.size() < 2 || widths.front() != 3 || widths.back() != 1)
      throw Error(ErrorKind::BadShape, "layer widths must run from 3 inputs to 1 output");
    for (int w : widths)
      if (w <= 0) throw Error(ErrorKind::BadShape, "layer widths must be positive");
  }

  const std::vector<int>& widths() const noexcept { return widths_; }
  /// Number of affine layers (hidden layers + output layer).
  int layer_count() const noexcept { return static_cast<int>(widths_.size()) - 1; }
  Eigen::Index parameter_count() const noexcept { return theta_.size(); }

  const Vector& parameters() const noexcept { return theta_; }
  Vector& parameters() noexcept { return theta_; }

  ConstMatrixMap weight(int layer) const { return weight_in(theta_, layer); }
  MatrixMap weight(int layer) { return weight_in(theta_, layer); }
  ConstVectorMap bias(int layer) const { return bias_in(theta_, layer); }
  VectorMap bias(int layer) { return bias_in(theta_, layer); }

  /// Views of layer `layer` inside any vector with the parameter layout.
  ConstMatrixMap weight_in(const Vector& flat, int layer) const {
    return ConstMatrixMap(flat.data() + offsets_[layer], widths_[layer + 1], widths_[layer]);
  }
  MatrixMap weight_in(Vector& flat, int layer) const {
    return MatrixMap(flat.data() + offsets_[layer], widths_[layer + 1], widths_[layer]);
  }
  ConstVectorMap bias_in(const Vector& flat, int layer) const {
    return ConstVectorMap(flat.data() + bias_offset(layer), widths_[layer + 1]);
  }
  VectorMap bias_in(Vector& flat, int layer) const {
    return VectorMap(flat.data() + bias_offset(layer), widths_[layer + 1]);
  }

  friend bool operator==(const PhaseFieldNet& a, const PhaseFieldNet& b) {
    return a.widths_ == b.widths_ && a.theta_.size() == b.theta_.size() &&
           (a.theta_.array() == b.theta_.array()).all();
  }

 private:
  Eigen::Index bias_offset(int layer) const {
    return offsets_[layer] + static_cast<Eigen::Index>(widths_[layer + 1]) * widths_[layer];
  }

  std::vector<int> widths_;
  std::vector<Eigen::Index> offsets_;
  Vector theta_;
};

/// Fan-in scaled uniform weights U(-1/sqrt(fan_in), 1/sqrt(fan_in)), zero
/// biases, drawn in parameter-layout order.
template <typename Scalar = double>
PhaseFieldNet<Scalar> init_net(const std::vector<int>& widths, std::uint64_t seed) {
  PhaseFieldNet<Scalar> net(widths);
  Rng rng(seed);
  for (int l = 0; l < net.layer_count(); ++l) {
    auto w = net.weight(l);
    const double bound = 1.0 / std::sqrt(static_cast<double>(w.cols()));
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = static_cast<Scalar>(rng.uniform(-bound, bound));
  }
  return net;
}

namespace detail {

// tanh through the vectorized exp. Saturates cleanly: exp overflow gives +1,
// underflow gives -1.
template <typename Derived>
auto tanh_array(const Eigen::ArrayBase<Derived>& z) {
  using Scalar = typename Derived::Scalar;
  return Scalar(1) - Scalar(2) / ((Scalar(2) * z).exp() + Scalar(1));
}

}  // namespace detail

/// Forward/backward workspace for one chunk of n points.
///
/// Each layer keeps its input as one block [y | dy/dx | dy/dy | dy/dz]
/// (4n columns in spatial mode, n otherwise), so a single product per layer
/// carries values and tangents forward, and a single product per layer
/// carries their adjoints back. backward() pulls seeds dL/du and
/// dL/d(grad u) to the parameters, including the mixed second derivatives
/// that appear when the loss depends on grad u.
template <typename Scalar = double>
class NetTape {
 public:
  using Net = PhaseFieldNet<Scalar>;
  using Matrix = MatrixX<Scalar>;
  using Vector = VectorX<Scalar>;
  using RowVector = RowVectorX<Scalar>;

  void forward(const Net& net, const Eigen::Ref<const Points3<Scalar>>& x, bool spatial) {
    const int layers = net.layer_count();
    const Eigen::Index n = x.cols();
    const Eigen::Index blocks = spatial ? 4 : 1;
    spatial_ = spatial;
    count_ = n;
    input_.resize(layers);
    slope_.resize(layers);
    curvature_.resize(layers);
    pre_.resize(layers);

    Matrix& in0 = input_[0];
    in0.resize(3, blocks * n);
    in0.leftCols(n) = x;
    if (spatial) {
      in0.rightCols(3 * n).setZero();
      for (int k = 0; k < 3; ++k) in0.row(k).segment((k + 1) * n, n).setOnes();
    }

    for (int l = 0; l < layers; ++l) {
      const auto w = net.weight(l);
      Matrix& z = pre_[l];
      z.noalias() = w * input_[l];
      z.leftCols(n).colwise() += net.bias(l);
      const bool hidden = l + 1 < layers;
      if (hidden) {
        input_[l + 1].resize(w.rows(), blocks * n);
      } else {
        out_act_.resize(w.rows(), n);
      }
      auto t = hidden ? input_[l + 1].leftCols(n) : out_act_.leftCols(n);
      t.array() = detail::tanh_array(z.leftCols(n).array());
      Matrix& s1 = slope_[l];
      s1 = (Scalar(1) - t.array().square()).matrix();
      if (spatial) curvature_[l] = (Scalar(-2) * t.array() * s1.array()).matrix();
      if (hidden)
        for (Eigen::Index k = 1; k < blocks; ++k)
          input_[l + 1].middleCols(k * n, n).array() = s1.array() * z.middleCols(k * n, n).array();
    }
    const Matrix& t_out = out_act_;
    values_ = ((t_out.array() + Scalar(1)) * Scalar(0.5)).matrix();
    if (spatial) {
      gradients_.resize(3, n);
      const Matrix& z_out = pre_[layers - 1];
      for (int k = 0; k < 3; ++k)
        gradients_.row(k).array() = Scalar(0.5) * slope_[layers - 1].array() * z_out.middleCols((k + 1) * n, n).array();
    } else {
      gradients_.resize(3, 0);
    }
  }

  Eigen::Index size() const noexcept { return count_; }
  const RowVector& values() const noexcept { return values_; }
  /// 3 x n spatial gradients; empty unless forward() ran in spatial mode.
  const Points3<Scalar>& gradients() const noexcept { return gradients_; }

  /// Accumulates d(loss)/d(theta) into `grad` given per-point seeds.
  /// `grad_seed` (3 x n) is ignored unless forward() ran in spatial mode.
  void backward(const Net& net, const Eigen::Ref<const RowVector>& value_seed,
                const Eigen::Ref<const Points3<Scalar>>& grad_seed, Vector& grad) {
    const int layers = net.layer_count();
    const Eigen::Index n = count_;
    const bool spatial = spatial_;
    const Eigen::Index blocks = spatial ? 4 : 1;

    // Output: u = (t + 1) / 2, du/dz = s1 / 2, d2u/dz2 = -t s1.
    adj_.resize(1, blocks * n);
    {
      const auto t = out_act_.array();
      const auto s1 = slope_[layers - 1].array();
      adj_.leftCols(n).array() = Scalar(0.5) * value_seed.array() * s1;
      if (spatial) {
        const Matrix& z = pre_[layers - 1];
        for (int k = 0; k < 3; ++k) {
          const auto gk = grad_seed.row(k).array();
          adj_.leftCols(n).array() -= gk * t * s1 * z.middleCols((k + 1) * n, n).array();
          adj_.middleCols((k + 1) * n, n).array() = Scalar(0.5) * gk * s1;
        }
      }
    }

    for (int l = layers - 1; l >= 0; --l) {
      net.weight_in(grad, l).noalias() += adj_ * input_[l].transpose();
      net.bias_in(grad, l).noalias() += adj_.leftCols(n).rowwise().sum();
      if (l == 0) break;

      in_adj_.noalias() = net.weight(l).transpose() * adj_;
      // Hidden layer l-1: y = tanh(z), y' = s1, y'' = -2 t s1.
      const auto s1 = slope_[l - 1].array();
      const Matrix& z = pre_[l - 1];
      adj_.resize(in_adj_.rows(), blocks * n);
      if (spatial) {
        const auto d = [&](Eigen::Index k) { return in_adj_.middleCols(k * n, n).array(); };
        const auto zk = [&](Eigen::Index k) { return z.middleCols(k * n, n).array(); };
        adj_.leftCols(n).array() =
            d(0) * s1 + curvature_[l - 1].array() * (d(1) * zk(1) + d(2) * zk(2) + d(3) * zk(3));
        for (Eigen::Index k = 1; k < 4; ++k) adj_.middleCols(k * n, n).array() = d(k) * s1;
      } else {
        adj_.array() = in_adj_.array() * s1;
      }
    }
  }

 private:
  bool spatial_ = false;
  Eigen::Index count_ = 0;
  std::vector<Matrix> input_;  // layer inputs [y | dy/dx | dy/dy | dy/dz]
  std::vector<Matrix> pre_;    // pre-activations with tangents, same blocks
  Matrix out_act_;             // tanh(z) of the output layer
  std::vector<Matrix> slope_;  // 1 - tanh(z)^2
  std::vector<Matrix> curvature_;  // -2 tanh(z) (1 - tanh(z)^2), spatial mode only
  RowVector values_;
  Points3<Scalar> gradients_;
  Matrix adj_, in_adj_;
};

/// Points per forward/backward chunk. Sums are formed per chunk and then
/// across chunks in order, so results do not depend on anything but inputs.
inline constexpr Eigen::Index kChunkSize = 64;

/// Sum over points of a pointwise loss f(u_j, grad u_j), optionally with its
/// parameter gradient accumulated into `grad` (pass nullptr to skip).
///
/// `loss(values, gradients, value_seed, grad_seed)` receives one chunk and
/// returns the chunk's loss sum, filling the seeds with df/du and
/// df/d(grad u) per point. In non-spatial mode `gradients` is empty and
/// `grad_seed` is ignored.
template <typename Scalar, typename PointLoss>
Scalar accumulate_pointwise(const PhaseFieldNet<Scalar>& net, const std::type_identity_t<Eigen::Ref<const Points3<Scalar>>>& points,
                            bool spatial, PointLoss&& loss, VectorX<Scalar>* grad, NetTape<Scalar>& tape) {
  Scalar total(0);
  RowVectorX<Scalar> value_seed;
  Points3<Scalar> grad_seed;
  for (Eigen::Index start = 0; start < points.cols(); start += kChunkSize) {
    const Eigen::Index n = std::min(kChunkSize, points.cols() - start);
    tape.forward(net, points.middleCols(start, n), spatial);
    value_seed.resize(n);
    grad_seed.resize(3, spatial ? n : 0);
    total += loss(tape.values(), tape.gradients(), value_seed, grad_seed);
    if (grad != nullptr) tape.backward(net, value_seed, grad_seed, *grad);
  }
  return total;
}

template <typename Scalar>
RowVectorX<Scalar> evaluate(const PhaseFieldNet<Scalar>& net, const std::type_identity_t<Eigen::Ref<const Points3<Scalar>>>& points) {
  RowVectorX<Scalar> out(points.cols());
  NetTape<Scalar> tape;
  for (Eigen::Index start = 0; start < points.cols(); start += kChunkSize) {
    const Eigen::Index n = std::min(kChunkSize, points.cols() - start);
    tape.forward(net, points.middleCols(start, n), false);
    out.segment(start, n) = tape.values();
  }
  return out;
}

template <typename Scalar>
Scalar forward(const PhaseFieldNet<Scalar>& net, const Vec3<Scalar>& x) {
  NetTape<Scalar> tape;
  tape.forward(net, x, false);
  return tape.values()(0);
}

template <typename Scalar>
struct PhaseValue {
  Scalar value;
  Vec3<Scalar> gradient;
};

template <typename Scalar>
PhaseValue<Scalar> forward_with_grad(const PhaseFieldNet<Scalar>& net, const Vec3<Scalar>& x) {
  NetTape<Scalar> tape;
  tape.forward(net, x, true);
  return {tape.values()(0), tape.gradients().col(0)};
}

template <typename Scalar>
struct LossAndGradient {
  Scalar loss;
  VectorX<Scalar> gradient;
};

template <typename Scalar>
struct LossSeeds {
  Scalar loss;
  RowVectorX<Scalar> value_seed;  // dL/du_j
  Points3<Scalar> grad_seed;      // dL/d(grad u_j), 3 x n
};

/// Exact d(loss)/d(theta) for an arbitrary scalar loss of the values and
/// spatial gradients at `points`. `fn(values, gradients)` returns the loss
/// and its partial derivatives with respect to every value and gradient.
/// Throws NonFiniteLoss if the loss or any gradient entry is not finite.
template <typename Scalar, typename LossFn>
LossAndGradient<Scalar> loss_gradient(const PhaseFieldNet<Scalar>& net, const Points3<Scalar>& points,
                                      LossFn&& fn) {
  const Eigen::Index total = points.cols();
  RowVectorX<Scalar> values(total);
  Points3<Scalar> gradients(3, total);
  NetTape<Scalar> tape;
  for (Eigen::Index start = 0; start < total; start += kChunkSize) {
    const Eigen::Index n = std::min(kChunkSize, total - start);
    tape.forward(net, points.middleCols(start, n), true);
    values.segment(start, n) = tape.values();
    gradients.middleCols(start, n) = tape.gradients();
  }
  LossSeeds<Scalar> seeds = fn(std::as_const(values), std::as_const(gradients));
  if (!std::isfinite(static_cast<double>(seeds.loss))) throw Error(ErrorKind::NonFiniteLoss, "loss is not finite");

  LossAndGradient<Scalar> out{seeds.loss, VectorX<Scalar>::Zero(net.parameter_count())};
  for (Eigen::Index start = 0; start < total; start += kChunkSize) {
    const Eigen::Index n = std::min(kChunkSize, total - start);
    tape.forward(net, points.middleCols(start, n), true);
    tape.backward(net, seeds.value_seed.segment(start, n), seeds.grad_seed.middleCols(start, n), out.gradient);
  }
  if (!out.gradient.allFinite()) throw Error(ErrorKind::NonFiniteLoss, "parameter gradient is not finite");
  return out;
}

// Checkpoints: a text header with the widths followed by one parameter per
// line in shortest round-trip decimal form.

template <typename Scalar>
void write_net(std::ostream& os, const PhaseFieldNet<Scalar>& net) {
  os << "phasevol-net 1\nwidths";
  for (int w : net.widths()) os << ' ' << w;
  os << "\nparameters " << net.parameter_count() << '\n';
  char buf[64];
  for (Eigen::Index i = 0; i < net.parameter_count(); ++i) {
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), net.parameters()(i));
    os.write(buf, end - buf);
    os.put('\n');
  }
}

template <typename Scalar = double>
PhaseFieldNet<Scalar> read_net(std::istream& is) {
  std::string tag;
  int version = 0;
  if (!(is >> tag >> version) || tag != "phasevol-net" || version != 1)
    throw Error(ErrorKind::Format, "not a phasevol network checkpoint");
  std::string line;
  std::getline(is, line);
  std::getline(is, line);
  std::istringstream widths_line(line);
  widths_line >> tag;
  if (tag != "widths") throw Error(ErrorKind::Format, "missing widths header");
  std::vector<int> widths;
  for (int w; widths_line >> w;) widths.push_back(w);
  PhaseFieldNet<Scalar> net(widths);
  Eigen::Index count = -1;
  if (!(is >> tag >> count) || tag != "parameters" || count != net.parameter_count())
    throw Error(ErrorKind::Format, "parameter count does not match widths");
  for (Eigen::Index i = 0; i < count; ++i) {
    std::string token;
    if (!(is >> token)) throw Error(ErrorKind::Format, "truncated parameter list");
    Scalar v{};
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc{} || ptr != token.data() + token.size())
      throw Error(ErrorKind::Format, "bad parameter value '" + token + "'");
    net.parameters()(i) = v;
  }
  return net;
}

/// Writes via a temporary file and rename so readers never see a partial file.
template <typename Scalar>
void save_net(const PhaseFieldNet<Scalar>& net, const std::filesystem::path& path) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
    write_net(os, net);
    if (!os) throw Error(ErrorKind::Io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot rename " + tmp.string() + ": " + ec.message());
}

template <typename Scalar = double>
PhaseFieldNet<Scalar> load_net(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return read_net<Scalar>(is);
}

}  // namespace phasevol
