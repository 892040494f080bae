#include "phasevol/trainer.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include "phasevol/image_io.hpp"

namespace phasevol {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  for (std::string field; std::getline(ss, field, ',');) {
    const auto first = field.find_first_not_of(" \t\r");
    const auto last = field.find_last_not_of(" \t\r");
    fields.push_back(first == std::string::npos ? "" : field.substr(first, last - first + 1));
  }
  return fields;
}

double parse_number(const std::string& text, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::Format, "bad number '" + text + "' in " + where);
}

}  // namespace

void AdamParams::validate() const {
  if (!(learning_rate > 0.0 && std::isfinite(learning_rate)))
    throw Error(ErrorKind::Usage, "learning rate must be positive");
  if (!(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0))
    throw Error(ErrorKind::Usage, "ADAM betas must lie in (0, 1)");
  if (!(eps > 0.0)) throw Error(ErrorKind::Usage, "ADAM eps must be positive");
}

void TrainConfig::validate() const {
  if (epochs < 0) throw Error(ErrorKind::Usage, "epochs must be non-negative");
  if (log_every < 1) throw Error(ErrorKind::Usage, "log interval must be at least 1");
  if (checkpoint_every < 0) throw Error(ErrorKind::Usage, "checkpoint interval must be non-negative");
  adam.validate();
}

void TrainLog::write_csv(std::ostream& os) const {
  os << "epoch,total,regression,energy,ms\n";
  for (const auto& r : records)
    os << r.epoch << ',' << format_double(r.total) << ',' << format_double(r.regression) << ','
       << format_double(r.energy) << ',' << format_double(r.ms) << '\n';
}

void TrainLog::save_csv(const std::filesystem::path& path) const {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::Io, "cannot write " + path.string());
  write_csv(os);
  if (!os) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

TrainLog TrainLog::read_csv(std::istream& is) {
  TrainLog log;
  std::string line;
  if (!std::getline(is, line) || split_csv(line) != std::vector<std::string>{"epoch", "total", "regression", "energy", "ms"})
    throw Error(ErrorKind::Format, "training log must start with 'epoch,total,regression,energy,ms'");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 5) throw Error(ErrorKind::Format, "training log rows need 5 fields");
    LogRecord r;
    r.epoch = static_cast<long>(parse_number(f[0], "training log"));
    r.total = parse_number(f[1], "training log");
    r.regression = parse_number(f[2], "training log");
    r.energy = parse_number(f[3], "training log");
    r.ms = parse_number(f[4], "training log");
    log.records.push_back(r);
  }
  return log;
}

TrainLog TrainLog::load_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return read_csv(is);
}

TrainingFailure::TrainingFailure(const Error& cause, long epoch, TrainLog log, PhaseFieldNet<double> net)
    : Error(cause.kind(), "training stopped at epoch " + std::to_string(epoch) + ": " + cause.detail()),
      epoch_(epoch),
      log_(std::move(log)),
      net_(std::move(net)) {}

ObjectiveTerms evaluate_epoch(const PhaseFieldNet<double>& net, const PhaseLabels& labels, const ObjectiveSpec& spec,
                              std::uint64_t seed, long epoch) {
  Rng rng(epoch_batch_seed(seed, epoch));
  return total_objective<double>(net, labels, spec, rng);
}

Reconstruction train(PhaseFieldNet<double> initial, const PhaseLabels& labels, const ObjectiveSpec& spec,
                     const TrainConfig& config, const LogCallback& on_log) {
  spec.validate();
  config.validate();
  if (labels.assigned_count() == 0) throw Error(ErrorKind::DegenerateLabels, "no labeled points");

  Reconstruction out{std::move(initial), {}, 0.0};
  PhaseFieldNet<double>& net = out.net;
  AdamState<double> adam(net.parameter_count());
  const auto start = Clock::now();

  // The fixed grid is the same every epoch, so build it once.
  std::optional<Points3<double>> grid;
  if (const auto* fixed = std::get_if<FixedGrid>(&spec.estimator)) grid = grid_nodes(fixed->points_per_axis);
  Points3<double> batch;
  auto points_for = [&](long epoch) -> const Points3<double>& {
    if (grid) return *grid;
    Rng rng(epoch_batch_seed(config.seed, epoch));
    batch = integration_points(spec.estimator, rng);
    return batch;
  };
  auto record = [&](long epoch, const ObjectiveTerms& terms) {
    out.log.records.push_back({epoch, terms.total(), terms.regression, terms.energy, elapsed_ms(start)});
    if (on_log) on_log(out.log.records.back());
  };
  auto checkpoint = [&] {
    if (!config.checkpoint_path.empty()) save_net(net, config.checkpoint_path);
  };

  long epoch = 0;
  try {
    for (; epoch < config.epochs; ++epoch) {
      const auto step = objective_gradient<double>(net, labels, spec, points_for(epoch));
      if (epoch % config.log_every == 0) record(epoch, step.terms);
      adam_step(net.parameters(), step.gradient, adam, config.adam);
      if (config.checkpoint_every > 0 && (epoch + 1) % config.checkpoint_every == 0 && epoch + 1 < config.epochs)
        checkpoint();
    }
    // Final parameters, scored on the batch the next epoch would have drawn.
    const auto& points = points_for(epoch);
    ObjectiveTerms terms;
    terms.regression = regression_loss<double>(net, labels, spec.penalty);
    terms.energy = mean_energy<double>(net, points, spec.diffusion);
    if (!std::isfinite(terms.total())) throw Error(ErrorKind::NonFiniteLoss, "final objective is not finite");
    record(epoch, terms);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NonFiniteLoss && e.kind() != ErrorKind::NonFiniteUpdate) throw;
    throw TrainingFailure(e, epoch, out.log, net);
  }
  checkpoint();
  out.seconds = elapsed_ms(start) / 1000.0;
  return out;
}

Reconstruction reconstruct(const PhaseLabels& labels, const std::vector<int>& widths, const ObjectiveSpec& spec,
                           const TrainConfig& config, const LogCallback& on_log) {
  return train(init_net<double>(widths, init_seed(config.seed)), labels, spec, config, on_log);
}

Reconstruction reconstruct(const SliceStack& stack, double threshold, const std::vector<int>& widths,
                           const ObjectiveSpec& spec, const TrainConfig& config, const LogCallback& on_log) {
  return reconstruct(assign_phases(stack, threshold), widths, spec, config, on_log);
}

std::vector<SweepSetting> table1_settings() {
  return {
      {1, 1.0, 1.0, 10.0, 5000, 5000},     {2, 1.0, 0.1, 1000.0, 5000, 5000},  {3, 1.0, 100.0, 1000.0, 5000, 5000},
      {4, 1.0, 5.0, 1000.0, 5000, 5000},   {5, 1.0, 5.0, 2500.0, 5000, 5000},  {6, 1.0, 5.0, 1000.0, 10000, 5000},
      {7, 1.0, 5.0, 1000.0, 5000, 10000},  {8, 1.0, 2.5, 2500.0, 2500, 10000}, {9, 1.0, 2.5, 2500.0, 10000, 2500},
  };
}

std::vector<SweepSetting> read_sweep_table(std::istream& is) {
  std::vector<SweepSetting> table;
  bool header_seen = false;
  for (std::string line; std::getline(is, line);) {
    const auto f = split_csv(line);
    if (f.empty() || f[0].empty() || f[0][0] == '#') continue;
    if (!header_seen) {
      if (f != std::vector<std::string>{"setting", "eps_xy", "eps_z", "p", "B", "epochs"})
        throw Error(ErrorKind::Format, "sweep table must start with 'setting,eps_xy,eps_z,p,B,epochs'");
      header_seen = true;
      continue;
    }
    if (f.size() != 6) throw Error(ErrorKind::Format, "sweep table rows need 6 fields: " + line);
    SweepSetting s;
    s.index = static_cast<int>(parse_number(f[0], "sweep table"));
    s.eps_xy = parse_number(f[1], "sweep table");
    s.eps_z = parse_number(f[2], "sweep table");
    s.penalty = parse_number(f[3], "sweep table");
    s.batch_size = static_cast<Eigen::Index>(parse_number(f[4], "sweep table"));
    s.epochs = static_cast<int>(parse_number(f[5], "sweep table"));
    if (!(s.eps_xy > 0 && s.eps_z > 0 && s.penalty > 0 && s.batch_size >= 1 && s.epochs >= 0))
      throw Error(ErrorKind::Format, "sweep setting " + f[0] + " is out of range");
    table.push_back(s);
  }
  return table;
}

std::vector<SweepSetting> load_sweep_table(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return read_sweep_table(is);
}

void write_sweep_table(std::ostream& os, const std::vector<SweepSetting>& table) {
  os << "setting,eps_xy,eps_z,p,B,epochs\n";
  for (const auto& s : table)
    os << s.index << ',' << format_double(s.eps_xy) << ',' << format_double(s.eps_z) << ','
       << format_double(s.penalty) << ',' << s.batch_size << ',' << s.epochs << '\n';
}

std::vector<SweepResult> sweep(const PhaseLabels& labels, const std::vector<int>& widths, const ObjectiveSpec& base_spec,
                               const TrainConfig& base_config, const std::vector<SweepSetting>& table,
                               int probe_resolution, const std::function<void(const SweepResult&)>& on_result) {
  std::vector<SweepResult> results;
  for (const auto& setting : table) {
    SweepResult result;
    result.setting = setting;
    result.seed = sweep_seed(base_config.seed, setting.index);
    ObjectiveSpec spec = base_spec;
    spec.penalty = setting.penalty;
    spec.diffusion = {setting.eps_xy, setting.eps_xy, setting.eps_z};
    spec.estimator = MonteCarlo{setting.batch_size};
    TrainConfig config = base_config;
    config.epochs = setting.epochs;
    config.seed = result.seed;
    if (!base_config.checkpoint_path.empty())
      config.checkpoint_path = base_config.checkpoint_path.parent_path() /
                               ("setting_" + std::to_string(setting.index) + "_" +
                                base_config.checkpoint_path.filename().string());
    try {
      auto run = reconstruct(labels, widths, spec, config);
      result.seconds = run.seconds;
      result.log = std::move(run.log);
      result.report = components(probe(run.net, probe_resolution));
      result.net = std::move(run.net);
    } catch (const TrainingFailure& e) {
      result.log = e.log();
      result.error = e.what();
    } catch (const Error& e) {
      result.error = e.what();
    }
    if (on_result) on_result(result);
    results.push_back(std::move(result));
  }
  return results;
}

}  // namespace phasevol
