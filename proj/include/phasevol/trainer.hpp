#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "phasevol/error.hpp"
#include "phasevol/objective.hpp"
#include "phasevol/phase_net.hpp"
#include "phasevol/random.hpp"
#include "phasevol/slice_data.hpp"
#include "phasevol/volume_out.hpp"

namespace phasevol {

struct AdamParams {
  double learning_rate = 5e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
};

template <typename Scalar>
struct AdamState {
  VectorX<Scalar> m;
  VectorX<Scalar> v;
  long step = 0;

  AdamState() = default;
  explicit AdamState(Eigen::Index size) : m(VectorX<Scalar>::Zero(size)), v(VectorX<Scalar>::Zero(size)) {}
};

/// One bias-corrected ADAM update of `theta`. Nothing is modified when the
/// update would produce a non-finite parameter or moment (NonFiniteUpdate).
template <typename Scalar>
void adam_step(VectorX<Scalar>& theta, const std::type_identity_t<VectorX<Scalar>>& grad, AdamState<Scalar>& state,
               const AdamParams& params) {
  if (grad.size() != theta.size() || state.m.size() != theta.size() || state.v.size() != theta.size())
    throw Error(ErrorKind::Usage, "ADAM state and gradient must match the parameter count");
  const Scalar b1 = Scalar(params.beta1), b2 = Scalar(params.beta2);
  const long step = state.step + 1;
  const VectorX<Scalar> m = b1 * state.m + (Scalar(1) - b1) * grad;
  const VectorX<Scalar> v = b2 * state.v + (Scalar(1) - b2) * grad.cwiseAbs2();
  const Scalar m_scale = Scalar(1) / (Scalar(1) - std::pow(b1, Scalar(step)));
  const Scalar v_scale = Scalar(1) / (Scalar(1) - std::pow(b2, Scalar(step)));
  const VectorX<Scalar> next =
      theta.array() - Scalar(params.learning_rate) * (m_scale * m.array()) /
                          ((v_scale * v.array()).sqrt() + Scalar(params.eps));
  if (!next.allFinite() || !m.allFinite() || !v.allFinite())
    throw Error(ErrorKind::NonFiniteUpdate, "ADAM step " + std::to_string(step) + " produced a non-finite value");
  theta = next;
  state.m = m;
  state.v = v;
  state.step = step;
}

struct TrainConfig {
  int epochs = 5000;
  AdamParams adam;
  std::uint64_t seed = 0;
  int log_every = 10;
  /// Write a checkpoint every this many epochs (0: only at the end, and only
  /// when checkpoint_path is set).
  int checkpoint_every = 0;
  std::filesystem::path checkpoint_path;

  void validate() const;
};

/// Seed of the energy batch used at `epoch`.
inline std::uint64_t epoch_batch_seed(std::uint64_t seed, long epoch) {
  return derive_seed(derive_seed(seed, streams::batches), static_cast<std::uint64_t>(epoch));
}

inline std::uint64_t init_seed(std::uint64_t seed) { return derive_seed(seed, streams::init); }

struct LogRecord {
  long epoch = 0;
  double total = 0.0;
  double regression = 0.0;
  double energy = 0.0;
  double ms = 0.0;  // wall clock since training started
};

/// Objective terms at the parameters of each logged epoch, evaluated on that
/// epoch's batch, before the update.
struct TrainLog {
  std::vector<LogRecord> records;

  /// Header: epoch,total,regression,energy,ms
  void write_csv(std::ostream& os) const;
  void save_csv(const std::filesystem::path& path) const;
  static TrainLog read_csv(std::istream& is);
  static TrainLog load_csv(const std::filesystem::path& path);
};

struct Reconstruction {
  PhaseFieldNet<double> net;
  TrainLog log;
  double seconds = 0.0;
};

/// Raised when training stops on a non-finite loss or update. Carries the
/// log so far and the last finite parameters.
class TrainingFailure : public Error {
 public:
  TrainingFailure(const Error& cause, long epoch, TrainLog log, PhaseFieldNet<double> net);

  long epoch() const noexcept { return epoch_; }
  const TrainLog& log() const noexcept { return log_; }
  const PhaseFieldNet<double>& net() const noexcept { return net_; }

 private:
  long epoch_;
  TrainLog log_;
  PhaseFieldNet<double> net_;
};

using LogCallback = std::function<void(const LogRecord&)>;

/// Minimizes the objective from `initial` with ADAM. The log records epoch 0,
/// every log_every-th epoch, and the final parameters at epoch = epochs.
Reconstruction train(PhaseFieldNet<double> initial, const PhaseLabels& labels, const ObjectiveSpec& spec,
                     const TrainConfig& config, const LogCallback& on_log = {});

/// Labels the stack, initializes a network from the config seed and trains it.
Reconstruction reconstruct(const SliceStack& stack, double threshold, const std::vector<int>& widths,
                           const ObjectiveSpec& spec, const TrainConfig& config, const LogCallback& on_log = {});

Reconstruction reconstruct(const PhaseLabels& labels, const std::vector<int>& widths, const ObjectiveSpec& spec,
                           const TrainConfig& config, const LogCallback& on_log = {});

/// Re-evaluates the objective a log record should hold, from the parameters
/// and the epoch's batch seed.
ObjectiveTerms evaluate_epoch(const PhaseFieldNet<double>& net, const PhaseLabels& labels, const ObjectiveSpec& spec,
                              std::uint64_t seed, long epoch);

struct SweepSetting {
  int index = 0;
  double eps_xy = 1.0;
  double eps_z = 5.0;
  double penalty = 1000.0;
  Eigen::Index batch_size = 5000;
  int epochs = 5000;
};

/// The nine hourglass settings of the parameter study.
std::vector<SweepSetting> table1_settings();

/// CSV with header `setting,eps_xy,eps_z,p,B,epochs`. Blank lines and lines
/// starting with '#' are skipped.
std::vector<SweepSetting> read_sweep_table(std::istream& is);
std::vector<SweepSetting> load_sweep_table(const std::filesystem::path& path);
void write_sweep_table(std::ostream& os, const std::vector<SweepSetting>& table);

struct SweepResult {
  SweepSetting setting;
  std::uint64_t seed = 0;
  std::optional<PhaseFieldNet<double>> net;
  TrainLog log;
  std::optional<ComponentReport> report;
  double seconds = 0.0;
  std::string error;  // empty on success

  bool ok() const { return error.empty(); }
};

/// Seed used for one sweep setting.
inline std::uint64_t sweep_seed(std::uint64_t seed, int index) {
  return derive_seed(derive_seed(seed, streams::sweep), static_cast<std::uint64_t>(index));
}

/// One reconstruction per setting on shared labels. The base spec supplies
/// anything a setting does not override; epochs and B come from the setting.
/// Failures are recorded per setting and the sweep continues.
std::vector<SweepResult> sweep(const PhaseLabels& labels, const std::vector<int>& widths, const ObjectiveSpec& base_spec,
                               const TrainConfig& base_config, const std::vector<SweepSetting>& table,
                               int probe_resolution = 50,
                               const std::function<void(const SweepResult&)>& on_result = {});

}  // namespace phasevol
