#include "phasevol/slice_data.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "phasevol/error.hpp"
#include "phasevol/image_io.hpp"

namespace phasevol {

namespace fs = std::filesystem;

std::size_t SliceStack::point_count() const {
  std::size_t total = 0;
  for (const auto& p : planes) total += static_cast<std::size_t>(p.grid.size());
  return total;
}

void SliceStack::validate() const {
  if (planes.empty()) throw Error(ErrorKind::Format, "slice stack has no planes");
  const auto n = planes.front().grid.rows();
  for (std::size_t i = 0; i < planes.size(); ++i) {
    const auto& p = planes[i];
    const std::string where = "plane " + std::to_string(i);
    if (!(p.z >= 0.0 && p.z <= 1.0)) throw Error(ErrorKind::Format, where + ": z = " + format_double(p.z) + " outside [0,1]");
    if (p.grid.rows() == 0 || p.grid.rows() != p.grid.cols())
      throw Error(ErrorKind::Format, where + ": grid must be square and non-empty");
    if (p.grid.rows() != n) throw Error(ErrorKind::Format, where + ": grid size differs from plane 0");
    if (!((p.grid.array() >= 0.0) && (p.grid.array() <= 1.0)).all())
      throw Error(ErrorKind::Format, where + ": pixel values must lie in [0,1]");
  }
}

SlicePlane blur_plane(const SlicePlane& plane) {
  const Image& in = plane.grid;
  const Eigen::Index rows = in.rows();
  const Eigen::Index cols = in.cols();
  auto clamp_index = [](Eigen::Index i, Eigen::Index n) { return i < 0 ? Eigen::Index{0} : (i >= n ? n - 1 : i); };

  SlicePlane out{plane.z, Image(rows, cols)};
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      double sum = 0.0;
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) sum += in(clamp_index(r + dr, rows), clamp_index(c + dc, cols));
      out.grid(r, c) = sum / 9.0;
    }
  }
  return out;
}

PhaseLabels assign_phases(const SliceStack& stack, double threshold) {
  if (!(threshold >= 0.5 && threshold < 1.0)) throw Error(ErrorKind::Usage, "threshold c must lie in [0.5, 1)");
  stack.validate();

  std::vector<Eigen::Vector3d> inside;
  std::vector<Eigen::Vector3d> outside;
  PhaseLabels labels;
  labels.threshold = threshold;
  for (const auto& plane : stack.planes) {
    const SlicePlane blurred = blur_plane(plane);
    const int n = static_cast<int>(blurred.grid.rows());
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        const double v = blurred.grid(r, c);
        if (v < 1.0 - threshold) {
          outside.push_back(pixel_coordinate(r, c, n, plane.z));
        } else if (v >= threshold) {
          inside.push_back(pixel_coordinate(r, c, n, plane.z));
        } else {
          ++labels.unassigned_count;
        }
      }
    }
  }
  if (inside.empty() && outside.empty())
    throw Error(ErrorKind::DegenerateLabels, "no pixel was assigned a phase at c = " + format_double(threshold));

  auto pack = [](const std::vector<Eigen::Vector3d>& pts) {
    Eigen::Matrix3Xd m(3, static_cast<Eigen::Index>(pts.size()));
    for (std::size_t j = 0; j < pts.size(); ++j) m.col(static_cast<Eigen::Index>(j)) = pts[j];
    return m;
  };
  labels.inside_points = pack(inside);
  labels.outside_points = pack(outside);
  return labels;
}

namespace {

constexpr const char* kManifestName = "manifest.txt";
constexpr const char* kFormatTag = "phasevol-slices 1";

bool on_byte_lattice(const Image& image) {
  for (Eigen::Index i = 0; i < image.size(); ++i) {
    const double v = image.data()[i];
    if (std::lround(v * 255.0) / 255.0 != v) return false;
  }
  return true;
}

long parse_count(const std::string& text) {
  try {
    std::size_t used = 0;
    const long v = std::stol(text, &used);
    if (used == text.size() && v >= 0) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::Format, "bad count '" + text + "' in manifest");
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

fs::path save_stack(const SliceStack& stack, const fs::path& dir, PixelFormat format) {
  stack.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());

  const fs::path manifest = dir / kManifestName;
  std::ofstream os(manifest);
  if (!os) throw Error(ErrorKind::Io, "cannot write " + manifest.string());
  os << "# phasevol slice manifest\n";
  os << "format = " << kFormatTag << '\n';
  os << "grid = " << stack.grid_size() << '\n';
  os << "planes = " << stack.planes.size() << '\n';
  for (const auto& [key, value] : stack.metadata) os << "meta." << key << " = " << value << '\n';

  for (std::size_t i = 0; i < stack.planes.size(); ++i) {
    const auto& plane = stack.planes[i];
    char name[32];
    std::snprintf(name, sizeof(name), "plane_%03zu.%s", i, format == PixelFormat::Csv ? "csv" : "pgm");
    if (format == PixelFormat::Csv) {
      write_csv_image(plane.grid, dir / name);
    } else {
      write_graymap(plane.grid, dir / name, on_byte_lattice(plane.grid) ? 255 : 65535);
    }
    os << "plane = " << format_double(plane.z) << ' ' << name << '\n';
  }
  if (!os) throw Error(ErrorKind::Io, "write failed for " + manifest.string());
  return manifest;
}

SliceStack load_stack(const fs::path& manifest_path) {
  fs::path path = manifest_path;
  if (fs::is_directory(path)) path /= kManifestName;
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::Io, "cannot open manifest " + path.string());
  const fs::path base = path.parent_path();

  SliceStack stack;
  long grid = -1;
  long expected_planes = -1;
  bool format_seen = false;
  int line_no = 0;
  for (std::string line; std::getline(is, line);) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorKind::Format, path.string() + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "format") {
      if (value != kFormatTag) throw Error(ErrorKind::Format, "unsupported manifest format '" + value + "'");
      format_seen = true;
    } else if (key == "grid") {
      grid = parse_count(value);
    } else if (key == "planes") {
      expected_planes = parse_count(value);
    } else if (key == "plane") {
      std::istringstream ss(value);
      std::string z_text, file;
      if (!(ss >> z_text >> file))
        throw Error(ErrorKind::Format, path.string() + ":" + std::to_string(line_no) + ": plane needs '<z> <image>'");
      double z = 0.0;
      try {
        std::size_t used = 0;
        z = std::stod(z_text, &used);
        if (used != z_text.size()) throw std::invalid_argument(z_text);
      } catch (const std::exception&) {
        throw Error(ErrorKind::Format, "bad z value '" + z_text + "'");
      }
      stack.planes.push_back({z, read_image(base / file)});
    } else if (key.rfind("meta.", 0) == 0) {
      stack.metadata[key.substr(5)] = value;
    } else {
      throw Error(ErrorKind::Format, "unknown manifest key '" + key + "'");
    }
  }
  if (!format_seen) throw Error(ErrorKind::Format, "manifest is missing the format line");
  if (expected_planes >= 0 && static_cast<std::size_t>(expected_planes) != stack.planes.size())
    throw Error(ErrorKind::Format, "manifest declares " + std::to_string(expected_planes) + " planes but lists " +
                                       std::to_string(stack.planes.size()));
  stack.validate();
  if (grid >= 0 && grid != stack.grid_size())
    throw Error(ErrorKind::Format, "images are " + std::to_string(stack.grid_size()) + " pixels wide, manifest says " +
                                       std::to_string(grid));
  return stack;
}

}  // namespace phasevol
