#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "phasevol/error.hpp"
#include "phasevol/geometry_catalog.hpp"
#include "phasevol/image_io.hpp"
#include "phasevol/random.hpp"
#include "phasevol/slice_data.hpp"
#include "phasevol/trainer.hpp"
#include "phasevol/volume_out.hpp"

namespace fs = std::filesystem;
using namespace phasevol;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage:
      return kExitUsage;
    case ErrorKind::NonFiniteLoss:
    case ErrorKind::NonFiniteUpdate:
      return kExitNumeric;
    default:
      return kExitData;
  }
}

std::string join(const std::vector<double>& values) {
  std::string out;
  for (double v : values) out += (out.empty() ? "" : ",") + format_double(v);
  return out;
}

/// Resolved settings written next to every run. Keys are the long flag
/// names under a [subcommand] section, so the file can be passed back
/// through --config.
class EffectiveConfig {
 public:
  void add(const std::string& key, const std::string& value) { entries_.emplace_back(key, value); }
  void add(const std::string& key, double value) { add(key, format_double(value)); }
  void add(const std::string& key, long value) { add(key, std::to_string(value)); }
  void add(const std::string& key, int value) { add(key, std::to_string(value)); }
  void add(const std::string& key, std::uint64_t value) { add(key, std::to_string(value)); }

  void save(const fs::path& path, const std::string& command) const {
    std::ofstream os(path);
    if (!os) throw Error(ErrorKind::Io, "cannot write " + path.string());
    os << "# phasevol effective configuration; rerun with: phasevol --config <this file> " << command << "\n";
    os << '[' << command << "]\n";
    for (const auto& [key, value] : entries_) os << key << " = \"" << value << "\"\n";
  }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

bool given(const CLI::App& app, const std::string& name) {
  const auto* opt = app.get_option_no_throw(name);
  return opt != nullptr && opt->count() > 0;
}

// Slice data: either a stored manifest or a catalog geometry sampled on the fly.
struct DataOptions {
  std::string manifest;
  std::string geometry;
  int slices = 3;
  long points = 1600;
  double sigma = 0.0;
  double threshold = 0.5;
  std::vector<double> z_planes;

  void add_sampling(CLI::App& app) {
    app.add_option("--geometry", geometry, "Catalog geometry to sample");
    app.add_option("--slices", slices, "Number of slice planes S (geometry default when omitted)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--n", points, "Points per plane N, a perfect square (geometry default when omitted)")
        ->capture_default_str();
    app.add_option("--sigma", sigma, "Noise level sigma in [0, 1) (geometry default when omitted)")
        ->capture_default_str();
    app.add_option("--z-planes", z_planes, "Plane heights (default: equally spaced on [0, 1])")->delimiter(',');
  }

  void add_threshold(CLI::App& app) {
    app.add_option("--threshold,-c", threshold, "Phase threshold c in [0.5, 1) (geometry default when omitted)")
        ->capture_default_str();
  }

  void add_source(CLI::App& app) {
    app.add_option("--manifest", manifest, "Slice stack manifest (or its directory)");
    add_sampling(app);
    add_threshold(app);
  }

  // Fills fields the command line left unset from the catalog entry.
  void resolve(const CLI::App& app) {
    if (geometry.empty()) return;
    const auto& g = find_geometry(geometry);
    if (!given(app, "--slices")) slices = g.slices;
    if (!given(app, "--n")) points = g.points_per_plane;
    if (!given(app, "--sigma")) sigma = g.sigma;
    if (!given(app, "--threshold")) threshold = g.threshold;
  }

  SliceStack sample(std::uint64_t seed) const {
    const auto& g = find_geometry(geometry);
    auto stack = sigma > 0.0 ? sample_noisy(g.with_noise(sigma), slices, points, z_planes, derive_seed(seed, streams::data))
                             : sample_noiseless(g.level_set, slices, points, z_planes);
    stack.metadata["geometry"] = g.name;
    stack.metadata["sigma"] = format_double(sigma);
    return stack;
  }

  SliceStack load(std::uint64_t seed) const {
    if (!manifest.empty() && !geometry.empty())
      throw Error(ErrorKind::Usage, "give either --manifest or --geometry, not both");
    if (!manifest.empty()) return load_stack(manifest);
    if (geometry.empty()) throw Error(ErrorKind::Usage, "a data source is required: --manifest or --geometry");
    return sample(seed);
  }

  void describe(EffectiveConfig& cfg) const {
    if (!manifest.empty()) {
      cfg.add("manifest", fs::absolute(manifest).string());
    } else {
      cfg.add("geometry", geometry);
      cfg.add("slices", slices);
      cfg.add("n", points);
      cfg.add("sigma", sigma);
      cfg.add("z-planes", join(z_planes.empty() ? default_z_planes(slices) : z_planes));
    }
    cfg.add("threshold", threshold);
  }
};

// Network, objective and optimizer settings. Defaults follow the recommended
// parameter ranges: eps_x = eps_y = 1, p = 1000, eps_z = 5, B = 5000, 5000 epochs.
struct ModelOptions {
  int width = 30;
  int layers = 2;
  double penalty = 1000.0;
  double eps_x = 1.0;
  double eps_y = 1.0;
  double eps_z = 5.0;
  long batch = 5000;
  std::string estimator = "mc";
  int epochs = 5000;
  double learning_rate = 5e-3;
  std::uint64_t seed = 0;
  int log_every = 10;
  int checkpoint_every = 0;
  int probe_resolution = 50;
  int mesh_resolution = 80;
  int progress_every = 500;

  void add(CLI::App& app, bool with_estimator = true) {
    app.add_option("--width", width, "Hidden layer width (geometry default when omitted)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--layers", layers, "Hidden layer count")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--p", penalty, "Data penalty p")->capture_default_str();
    app.add_option("--eps-x", eps_x, "In-plane diffusion eps_x")->capture_default_str();
    app.add_option("--eps-y", eps_y, "In-plane diffusion eps_y")->capture_default_str();
    app.add_option("--eps-z", eps_z, "Out-of-plane diffusion eps_z (geometry default when omitted)")
        ->capture_default_str();
    if (with_estimator) {
      app.add_option("--batch,-B", batch, "Monte Carlo batch size B")->capture_default_str();
      app.add_option("--estimator", estimator, "Energy integration: mc, mc:<B> or grid:<n>")->capture_default_str();
      app.add_option("--epochs", epochs, "Training epochs")->capture_default_str();
    }
    app.add_option("--lr", learning_rate, "ADAM learning rate")->capture_default_str();
    app.add_option("--seed", seed, "Top-level seed for data, initialization and batches")->capture_default_str();
    app.add_option("--log-every", log_every, "Epochs between log records")->capture_default_str();
    app.add_option("--checkpoint-every", checkpoint_every, "Epochs between checkpoints (0: end only)")
        ->capture_default_str();
    app.add_option("--probe", probe_resolution, "Probe grid resolution for component counts")->capture_default_str();
    app.add_option("--mesh-resolution", mesh_resolution, "Probe grid resolution for the exported mesh")
        ->capture_default_str();
    app.add_option("--progress-every", progress_every, "Epochs between progress lines (0: silent)")
        ->capture_default_str();
  }

  void resolve(const CLI::App& app, const DataOptions& data) {
    if (data.geometry.empty()) return;
    const auto& g = find_geometry(data.geometry);
    if (!given(app, "--width")) width = g.hidden_width;
    if (!given(app, "--eps-z")) eps_z = g.eps_z;
  }

  std::vector<int> widths() const {
    std::vector<int> w{3};
    for (int i = 0; i < layers; ++i) w.push_back(width);
    w.push_back(1);
    return w;
  }

  ObjectiveSpec spec() const {
    ObjectiveSpec s;
    s.penalty = penalty;
    s.diffusion = {eps_x, eps_y, eps_z};
    s.estimator = estimator == "mc" ? Estimator{MonteCarlo{batch}} : parse_estimator(estimator);
    s.validate();
    return s;
  }

  TrainConfig train_config() const {
    TrainConfig c;
    c.epochs = epochs;
    c.adam.learning_rate = learning_rate;
    c.seed = seed;
    c.log_every = log_every;
    c.checkpoint_every = checkpoint_every;
    c.validate();
    if (probe_resolution < 2 || mesh_resolution < 2) throw Error(ErrorKind::Usage, "probe resolutions must be at least 2");
    return c;
  }

  void describe(EffectiveConfig& cfg, bool with_estimator = true) const {
    cfg.add("width", width);
    cfg.add("layers", layers);
    cfg.add("p", penalty);
    cfg.add("eps-x", eps_x);
    cfg.add("eps-y", eps_y);
    cfg.add("eps-z", eps_z);
    if (with_estimator) {
      cfg.add("batch", batch);
      cfg.add("estimator", to_string(spec().estimator));
      cfg.add("epochs", epochs);
    }
    cfg.add("lr", learning_rate);
    cfg.add("seed", seed);
    cfg.add("log-every", log_every);
    cfg.add("checkpoint-every", checkpoint_every);
    cfg.add("probe", probe_resolution);
    cfg.add("mesh-resolution", mesh_resolution);
    cfg.add("progress-every", progress_every);
  }

  LogCallback progress(const std::string& tag) const {
    if (progress_every <= 0) return {};
    const int every = progress_every;
    return [tag, every](const LogRecord& r) {
      if (r.epoch % every != 0) return;
      std::printf("%sepoch %ld  objective %.6g  regression %.6g  energy %.6g  %.1f s\n", tag.c_str(), r.epoch, r.total,
                  r.regression, r.energy, r.ms / 1000.0);
      std::fflush(stdout);
    };
  }
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::Io, "cannot write " + path.string());
  os << text;
}

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
}

struct RunSummary {
  int components = 0;
  std::optional<std::size_t> triangles;
};

// Writes checkpoint, log, component report and mesh for one trained net.
RunSummary write_artifacts(const fs::path& dir, const PhaseFieldNet<double>& net, const TrainLog& log,
                           int probe_resolution, int mesh_resolution) {
  save_net(net, dir / "net.txt");
  log.save_csv(dir / "log.csv");
  const auto report = components(probe(net, probe_resolution));
  write_text(dir / "report.txt", report.to_text());
  write_text(dir / "report.kv", report.to_key_value());
  RunSummary summary{report.component_count, std::nullopt};
  try {
    const auto mesh = extract_isosurface(probe(net, mesh_resolution));
    export_mesh(mesh, dir / "mesh.obj");
    summary.triangles = mesh.triangles.size();
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::EmptySurface) throw;
    std::fprintf(stderr, "warning: %s; no mesh written\n", e.what());
  }
  return summary;
}

// Saves what a failed run produced before stopping.
void write_partial(const fs::path& dir, const TrainingFailure& failure) {
  save_net(failure.net(), dir / "net.txt");
  failure.log().save_csv(dir / "log.csv");
}

void write_stack_copy(const SliceStack& stack, const fs::path& dir) { save_stack(stack, dir / "slices"); }

int cmd_generate(const CLI::App& app, DataOptions& data, std::uint64_t seed, const std::string& out, const std::string& format) {
  if (data.geometry.empty()) throw Error(ErrorKind::Usage, "--geometry is required");
  data.resolve(app);
  const auto stack = data.sample(seed);
  const PixelFormat pf = format == "csv" ? PixelFormat::Csv : PixelFormat::Graymap;
  const auto manifest = save_stack(stack, out, pf);
  EffectiveConfig cfg;
  data.describe(cfg);
  cfg.add("seed", seed);
  cfg.add("out", fs::absolute(out).string());
  cfg.add("format", format);
  cfg.save(fs::path(out) / "run_config.ini", "generate");
  const auto labels = assign_phases(stack, data.threshold);
  std::printf("wrote %zu planes to %s\n", stack.planes.size(), manifest.string().c_str());
  std::printf("labels at c = %g: inside %zu outside %zu unassigned %zu\n", data.threshold, labels.inside_count(),
              labels.outside_count(), labels.unassigned_count);
  return 0;
}

int cmd_reconstruct(const CLI::App& app, DataOptions& data, ModelOptions& model, const fs::path& out) {
  data.resolve(app);
  model.resolve(app, data);
  const auto spec = model.spec();
  const auto config = model.train_config();
  const auto stack = data.load(model.seed);
  prepare_dir(out);
  EffectiveConfig cfg;
  data.describe(cfg);
  model.describe(cfg);
  cfg.add("out", fs::absolute(out).string());
  cfg.save(out / "run_config.ini", "reconstruct");
  write_stack_copy(stack, out);

  const auto labels = assign_phases(stack, data.threshold);
  std::printf("labels: inside %zu outside %zu unassigned %zu\n", labels.inside_count(), labels.outside_count(),
              labels.unassigned_count);
  auto train_config = config;
  train_config.checkpoint_path = out / "net.txt";
  try {
    const auto run = reconstruct(labels, model.widths(), spec, train_config, model.progress(""));
    const auto summary = write_artifacts(out, run.net, run.log, model.probe_resolution, model.mesh_resolution);
    std::printf("wall clock: %.2f s\n", run.seconds);
    std::printf("connected components: %d\n", summary.components);
    if (summary.triangles) std::printf("mesh triangles: %zu\n", *summary.triangles);
  } catch (const TrainingFailure& e) {
    write_partial(out, e);
    throw;
  }
  return 0;
}

int cmd_slice(const std::string& checkpoint, const std::string& axis_name, double coord, int resolution, double iso,
              const std::string& out) {
  const auto net = load_net<double>(checkpoint);
  const Axis axis = parse_axis(axis_name);
  const auto section = cross_section(net, axis, coord, resolution);
  if (!out.empty()) export_image(section, out);
  std::printf("section area: %.6g\n", section_area(section, iso));
  std::printf("components: %d\n", section_components(section, iso));
  std::printf("complement components: %d\n", section_components(section, iso, true));
  if (axis == Axis::Z) {
    const auto w = interface_width(net, coord);
    if (w)
      std::printf("interface width: %.6g\n", *w);
    else
      std::printf("interface width: none\n");
  }
  return 0;
}

int cmd_mesh(const std::string& checkpoint, int resolution, double iso, const std::string& out) {
  const auto net = load_net<double>(checkpoint);
  const auto grid = probe(net, resolution);
  const auto report = components(grid, iso);
  const auto mesh = extract_isosurface(grid, iso);
  export_mesh(mesh, out);
  std::printf("vertices: %zu\ntriangles: %zu\n", mesh.vertices.size(), mesh.triangles.size());
  std::printf("surface area: %.6g\nenclosed volume: %.6g\n", mesh.area(), mesh.signed_volume());
  std::printf("connected components: %d\n", report.component_count);
  return 0;
}

struct ArmResult {
  std::string name;
  int epochs = 0;
  double seconds = 0.0;
  int components = 0;
  std::vector<std::optional<double>> widths;
  std::string error;
};

int cmd_compare(const CLI::App& app, DataOptions& data, ModelOptions& model, const std::vector<long>& mc_batches, int mc_epochs, int grid,
                int grid_epochs, const std::vector<double>& sections, const fs::path& out) {
  data.resolve(app);
  model.resolve(app, data);
  model.train_config();
  const auto stack = data.load(model.seed);
  prepare_dir(out);
  EffectiveConfig cfg;
  data.describe(cfg);
  model.describe(cfg, false);
  std::string batches;
  for (long b : mc_batches) batches += (batches.empty() ? "" : ",") + std::to_string(b);
  cfg.add("mc-batches", batches);
  cfg.add("mc-epochs", mc_epochs);
  cfg.add("grid", grid);
  cfg.add("grid-epochs", grid_epochs);
  cfg.add("sections", join(sections));
  cfg.add("out", fs::absolute(out).string());
  cfg.save(out / "run_config.ini", "compare-integration");
  write_stack_copy(stack, out);
  const auto labels = assign_phases(stack, data.threshold);

  struct Arm {
    std::string name;
    Estimator estimator;
    int epochs;
  };
  std::vector<Arm> arms;
  for (long b : mc_batches) arms.push_back({"mc_" + std::to_string(b), MonteCarlo{b}, mc_epochs});
  if (grid > 0) arms.push_back({"grid_" + std::to_string(grid), FixedGrid{grid}, grid_epochs});

  std::vector<ArmResult> results;
  bool numeric_failure = false;
  for (const auto& arm : arms) {
    ObjectiveSpec spec;
    spec.penalty = model.penalty;
    spec.diffusion = {model.eps_x, model.eps_y, model.eps_z};
    spec.estimator = arm.estimator;
    auto config = model.train_config();
    config.epochs = arm.epochs;
    const fs::path dir = out / arm.name;
    prepare_dir(dir);
    config.checkpoint_path = dir / "net.txt";
    ArmResult r{arm.name, arm.epochs, 0.0, 0, {}, {}};
    std::printf("%s: %s for %d epochs\n", arm.name.c_str(), to_string(arm.estimator).c_str(), arm.epochs);
    std::fflush(stdout);
    try {
      const auto run = reconstruct(labels, model.widths(), spec, config, model.progress("  "));
      r.seconds = run.seconds;
      r.components = write_artifacts(dir, run.net, run.log, model.probe_resolution, model.mesh_resolution).components;
      for (double z : sections) r.widths.push_back(interface_width(run.net, z));
    } catch (const TrainingFailure& e) {
      write_partial(dir, e);
      r.error = e.what();
      numeric_failure = true;
    }
    results.push_back(r);
  }

  std::ostringstream table;
  table << "arm,epochs,seconds,components";
  for (double z : sections) table << ",width_z" << format_double(z);
  table << ",error\n";
  for (const auto& r : results) {
    table << r.name << ',' << r.epochs << ',' << format_double(r.seconds) << ',' << r.components;
    for (const auto& w : r.widths) table << ',' << (w ? format_double(*w) : "none");
    for (std::size_t i = r.widths.size(); i < sections.size(); ++i) table << ",none";
    table << ',' << r.error << '\n';
  }
  write_text(out / "comparison.csv", table.str());
  std::printf("\n%s", table.str().c_str());
  if (results.size() >= 2 && results.front().seconds > 0.0)
    std::printf("wall clock ratio %s / %s: %.2f\n", results.back().name.c_str(), results.front().name.c_str(),
                results.back().seconds / results.front().seconds);
  return numeric_failure ? kExitNumeric : 0;
}

int cmd_sweep(const CLI::App& app, DataOptions& data, ModelOptions& model, const std::string& table_path, const fs::path& out) {
  if (data.geometry.empty() && data.manifest.empty()) data.geometry = "hourglass";
  data.resolve(app);
  model.resolve(app, data);
  const auto table = table_path.empty() ? table1_settings() : load_sweep_table(table_path);
  const auto base_config = model.train_config();
  const auto stack = data.load(model.seed);
  prepare_dir(out);
  EffectiveConfig cfg;
  data.describe(cfg);
  model.describe(cfg, false);
  cfg.add("table", table_path.empty() ? std::string() : fs::absolute(table_path).string());
  cfg.add("out", fs::absolute(out).string());
  cfg.save(out / "run_config.ini", "sweep");
  {
    std::ofstream os(out / "table.csv");
    write_sweep_table(os, table);
  }
  write_stack_copy(stack, out);
  const auto labels = assign_phases(stack, data.threshold);
  ObjectiveSpec base_spec;
  base_spec.penalty = model.penalty;
  base_spec.diffusion = {model.eps_x, model.eps_y, model.eps_z};

  std::ostringstream summary;
  summary << "setting,seed,eps_xy,eps_z,p,B,epochs,seconds,components,error\n";
  int failures = 0;
  auto on_result = [&](const SweepResult& r) {
    const fs::path dir = out / ("setting_" + std::to_string(r.setting.index));
    prepare_dir(dir);
    int comps = -1;
    if (r.ok()) {
      comps = write_artifacts(dir, *r.net, r.log, model.probe_resolution, model.mesh_resolution).components;
    } else {
      ++failures;
      if (!r.log.records.empty()) r.log.save_csv(dir / "log.csv");
      write_text(dir / "error.txt", r.error + "\n");
    }
    if (r.ok())
      std::printf("setting %d: connected components %d, %.2f s\n", r.setting.index, comps, r.seconds);
    else
      std::printf("setting %d: %s\n", r.setting.index, r.error.c_str());
    std::fflush(stdout);
    summary << r.setting.index << ',' << r.seed << ',' << format_double(r.setting.eps_xy) << ','
            << format_double(r.setting.eps_z) << ',' << format_double(r.setting.penalty) << ',' << r.setting.batch_size
            << ',' << r.setting.epochs << ',' << format_double(r.seconds) << ',' << comps << ',' << r.error << '\n';
  };
  sweep(labels, model.widths(), base_spec, base_config, table, model.probe_resolution, on_result);
  write_text(out / "summary.csv", summary.str());
  return failures > 0 ? kExitNumeric : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Volume reconstruction from slice images with a neural phase field"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");
  app.set_config("--config", "", "Read options from a key = value file; values go under a [subcommand] section");
  app.fallthrough();

  std::string catalog_names;
  for (const auto& g : catalog()) catalog_names += (catalog_names.empty() ? "" : ", ") + g.name;
  app.footer("Geometries: " + catalog_names + "\nExit codes: 0 success, 1 usage, 2 data error, 3 numeric failure");

  DataOptions data;
  ModelOptions model;
  std::string out;
  std::string format = "pgm";
  std::uint64_t seed = 0;

  auto* gen = app.add_subcommand("generate", "Sample a catalog geometry into a slice stack");
  data.add_sampling(*gen);
  data.add_threshold(*gen);
  gen->add_option("--seed", seed, "Seed for the noise draws")->capture_default_str();
  gen->add_option("--out", out, "Output directory")->required();
  gen->add_option("--format", format, "Image format")->check(CLI::IsMember({"pgm", "csv"}))->capture_default_str();

  auto* rec = app.add_subcommand("reconstruct", "Train a phase field on slice data and export the volume");
  data.add_source(*rec);
  model.add(*rec);
  rec->add_option("--out", out, "Output directory")->required();

  std::string checkpoint, axis = "z", image_out;
  double coord = 0.5, iso = 0.5;
  int section_resolution = 100, mesh_resolution = 80;

  auto* sl = app.add_subcommand("slice", "Export a cross-section of a trained phase field");
  sl->add_option("--checkpoint", checkpoint, "Trained network file")->required();
  sl->add_option("--axis", axis, "Section normal: x, y or z")->capture_default_str();
  sl->add_option("--coord", coord, "Section coordinate in [0, 1]")->capture_default_str();
  sl->add_option("--resolution", section_resolution, "Pixels per side")->capture_default_str();
  sl->add_option("--iso", iso, "Phase level")->capture_default_str();
  sl->add_option("--out", image_out, "Image file (.pgm or .csv)");

  auto* me = app.add_subcommand("mesh", "Export the phase boundary of a trained network as an OBJ mesh");
  me->add_option("--checkpoint", checkpoint, "Trained network file")->required();
  me->add_option("--resolution", mesh_resolution, "Probe grid points per axis")->capture_default_str();
  me->add_option("--iso", iso, "Phase level")->capture_default_str();
  me->add_option("--out", image_out, "OBJ file")->required();

  std::vector<long> mc_batches{5000};
  int mc_epochs = 5000, grid = 75, grid_epochs = 10000;
  std::vector<double> sections{0.5};
  auto* cmp = app.add_subcommand("compare-integration", "Train Monte Carlo and fixed-grid variants on shared data");
  data.add_source(*cmp);
  model.add(*cmp, false);
  cmp->add_option("--mc-batches", mc_batches, "Monte Carlo batch sizes, one arm each")
      ->delimiter(',')
      ->capture_default_str();
  cmp->add_option("--mc-epochs", mc_epochs, "Epochs for the Monte Carlo arms")->capture_default_str();
  cmp->add_option("--grid", grid, "Fixed grid points per axis (0: skip the grid arm)")->capture_default_str();
  cmp->add_option("--grid-epochs", grid_epochs, "Epochs for the fixed-grid arm")->capture_default_str();
  cmp->add_option("--sections", sections, "z heights for interface widths")->delimiter(',')->capture_default_str();
  cmp->add_option("--out", out, "Output directory")->required();

  std::string table_path;
  auto* sw = app.add_subcommand("sweep", "Run one reconstruction per parameter setting");
  data.add_source(*sw);
  model.add(*sw, false);
  sw->add_option("--table", table_path, "CSV table: setting,eps_xy,eps_z,p,B,epochs (default: the nine-setting study)");
  sw->add_option("--out", out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_generate(*gen, data, seed, out, format);
    if (rec->parsed()) return cmd_reconstruct(*rec, data, model, out);
    if (sl->parsed()) return cmd_slice(checkpoint, axis, coord, section_resolution, iso, image_out);
    if (me->parsed()) return cmd_mesh(checkpoint, mesh_resolution, iso, image_out);
    if (cmp->parsed()) return cmd_compare(*cmp, data, model, mc_batches, mc_epochs, grid, grid_epochs, sections, out);
    if (sw->parsed()) return cmd_sweep(*sw, data, model, table_path, out);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
  return kExitUsage;
}
