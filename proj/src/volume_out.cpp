#include "phasevol/volume_out.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <Eigen/Geometry>

#include "phasevol/error.hpp"
#include "phasevol/image_io.hpp"

namespace phasevol {

namespace {

void check_resolution(int resolution) {
  if (resolution < 2) throw Error(ErrorKind::Usage, "probe resolution must be at least 2");
}

// Scan-order flood fill over a dims[0] x dims[1] x dims[2] mask with face
// connectivity. Returns per-component sizes.
std::vector<long> label_components(const std::vector<char>& mask, const std::array<int, 3>& dims) {
  const long nx = dims[0], ny = dims[1], nz = dims[2];
  std::vector<char> seen(mask.size(), 0);
  std::vector<long> sizes;
  std::vector<long> stack;
  for (long start = 0; start < static_cast<long>(mask.size()); ++start) {
    if (!mask[start] || seen[start]) continue;
    long size = 0;
    seen[start] = 1;
    stack.push_back(start);
    while (!stack.empty()) {
      const long v = stack.back();
      stack.pop_back();
      ++size;
      const long i = v % nx, j = (v / nx) % ny, k = v / (nx * ny);
      auto visit = [&](long w) {
        if (mask[w] && !seen[w]) {
          seen[w] = 1;
          stack.push_back(w);
        }
      };
      if (i > 0) visit(v - 1);
      if (i + 1 < nx) visit(v + 1);
      if (j > 0) visit(v - nx);
      if (j + 1 < ny) visit(v + nx);
      if (k > 0) visit(v - nx * ny);
      if (k + 1 < nz) visit(v + nx * ny);
    }
    sizes.push_back(size);
  }
  return sizes;
}

std::optional<double> first_drop(const std::vector<double>& r, const std::vector<double>& u, double level,
                                 std::size_t from, std::size_t& at) {
  for (std::size_t i = std::max<std::size_t>(from, 1); i < u.size(); ++i) {
    if (u[i - 1] >= level && u[i] < level) {
      const double t = (u[i - 1] - level) / (u[i - 1] - u[i]);
      at = i;
      return r[i - 1] + t * (r[i] - r[i - 1]);
    }
  }
  return std::nullopt;
}

}  // namespace

ProbeGrid probe(const PhaseFieldNet<double>& net, int resolution) {
  check_resolution(resolution);
  ProbeGrid grid;
  grid.dims = {resolution, resolution, resolution};
  const Eigen::Index plane = static_cast<Eigen::Index>(resolution) * resolution;
  grid.values.resize(plane * resolution);
  Points3<double> pts(3, plane);
  for (int k = 0; k < resolution; ++k) {
    Eigen::Index j = 0;
    for (int y = 0; y < resolution; ++y)
      for (int x = 0; x < resolution; ++x, ++j) pts.col(j) = grid.node(x, y, k);
    grid.values.segment(k * plane, plane) = evaluate(net, pts).transpose();
  }
  return grid;
}

ProbeGrid sample_field(const std::function<double(const Eigen::Vector3d&)>& field, int resolution) {
  check_resolution(resolution);
  ProbeGrid grid;
  grid.dims = {resolution, resolution, resolution};
  grid.values.resize(static_cast<Eigen::Index>(resolution) * resolution * resolution);
  for (int k = 0; k < resolution; ++k)
    for (int j = 0; j < resolution; ++j)
      for (int i = 0; i < resolution; ++i) grid.values(grid.index(i, j, k)) = field(grid.node(i, j, k));
  return grid;
}

long ComponentReport::total_voxels() const {
  long total = 0;
  for (long v : component_voxels) total += v;
  return total;
}

std::string ComponentReport::to_text() const {
  std::ostringstream os;
  os << "probe grid: " << dims[0] << " x " << dims[1] << " x " << dims[2] << '\n';
  os << "iso level: " << iso << '\n';
  os << "connected components: " << component_count << '\n';
  for (std::size_t c = 0; c < component_voxels.size(); ++c)
    os << "  component " << c + 1 << ": " << component_voxels[c] << " voxels\n";
  os << "volume fraction: " << static_cast<double>(total_voxels()) / (static_cast<double>(dims[0]) * dims[1] * dims[2])
     << '\n';
  return os.str();
}

std::string ComponentReport::to_key_value() const {
  std::ostringstream os;
  os << "resolution=" << dims[0] << '\n';
  os << "iso=" << format_double(iso) << '\n';
  os << "component_count=" << component_count << '\n';
  os << "component_voxels=";
  for (std::size_t c = 0; c < component_voxels.size(); ++c) os << (c ? "," : "") << component_voxels[c];
  os << '\n' << "plane_areas=";
  for (std::size_t k = 0; k < plane_areas.size(); ++k) os << (k ? "," : "") << format_double(plane_areas[k]);
  os << '\n';
  return os.str();
}

ComponentReport components(const ProbeGrid& grid, double iso) {
  ComponentReport report;
  report.iso = iso;
  report.dims = grid.dims;
  std::vector<char> mask(static_cast<std::size_t>(grid.values.size()));
  for (Eigen::Index v = 0; v < grid.values.size(); ++v) mask[static_cast<std::size_t>(v)] = grid.values(v) >= iso;
  report.component_voxels = label_components(mask, grid.dims);
  report.component_count = static_cast<int>(report.component_voxels.size());

  const long plane = static_cast<long>(grid.dims[0]) * grid.dims[1];
  for (int k = 0; k < grid.dims[2]; ++k) {
    long count = 0;
    for (long v = 0; v < plane; ++v) count += mask[static_cast<std::size_t>(k * plane + v)];
    report.plane_areas.push_back(static_cast<double>(count) / static_cast<double>(plane));
  }
  return report;
}

double VolumeMesh::area() const {
  double total = 0.0;
  for (const auto& t : triangles)
    total += 0.5 * (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]).norm();
  return total;
}

double VolumeMesh::signed_volume() const {
  double total = 0.0;
  for (const auto& t : triangles) total += vertices[t[0]].dot(vertices[t[1]].cross(vertices[t[2]])) / 6.0;
  return total;
}

Axis parse_axis(const std::string& text) {
  if (text == "x") return Axis::X;
  if (text == "y") return Axis::Y;
  if (text == "z") return Axis::Z;
  throw Error(ErrorKind::Usage, "axis must be x, y or z, got '" + text + "'");
}

Image cross_section(const PhaseFieldNet<double>& net, Axis axis, double coordinate, int resolution) {
  if (resolution < 1) throw Error(ErrorKind::Usage, "section resolution must be positive");
  if (!(coordinate >= 0.0 && coordinate <= 1.0)) throw Error(ErrorKind::Usage, "section coordinate must lie in [0,1]");
  const int normal = static_cast<int>(axis);
  const int first = normal == 0 ? 1 : 0;
  const int second = normal == 2 ? 1 : 2;
  Points3<double> pts(3, static_cast<Eigen::Index>(resolution) * resolution);
  Eigen::Index j = 0;
  for (int r = 0; r < resolution; ++r) {
    for (int c = 0; c < resolution; ++c, ++j) {
      pts(normal, j) = coordinate;
      pts(first, j) = (c + 0.5) / resolution;
      pts(second, j) = (r + 0.5) / resolution;
    }
  }
  const auto values = evaluate(net, pts);
  return Eigen::Map<const Image>(values.data(), resolution, resolution);
}

double section_area(const Image& section, double iso) {
  return static_cast<double>((section.array() >= iso).count()) / static_cast<double>(section.size());
}

int section_components(const Image& section, double iso, bool complement) {
  std::vector<char> mask(static_cast<std::size_t>(section.size()));
  for (Eigen::Index r = 0; r < section.rows(); ++r)
    for (Eigen::Index c = 0; c < section.cols(); ++c)
      mask[static_cast<std::size_t>(r * section.cols() + c)] = (section(r, c) >= iso) != complement;
  return static_cast<int>(
      label_components(mask, {static_cast<int>(section.cols()), static_cast<int>(section.rows()), 1}).size());
}

std::optional<double> interface_width(const std::function<double(const Eigen::Vector3d&)>& field, double z,
                                      Eigen::Vector2d center, int samples, double iso) {
  const std::array<Eigen::Vector2d, 4> directions{Eigen::Vector2d(1, 0), Eigen::Vector2d(-1, 0),
                                                  Eigen::Vector2d(0, 1), Eigen::Vector2d(0, -1)};
  double sum = 0.0;
  int valid = 0;
  for (const auto& d : directions) {
    // Distance to the domain face along d.
    double reach = 0.0;
    for (int a = 0; a < 2; ++a) {
      if (d(a) > 0) reach = 1.0 - center(a);
      if (d(a) < 0) reach = center(a);
    }
    const int count = std::max(2, static_cast<int>(std::ceil(reach * samples)) + 1);
    std::vector<double> r(static_cast<std::size_t>(count)), u(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
      r[i] = reach * i / (count - 1);
      const Eigen::Vector2d p = center + r[i] * d;
      u[i] = field(Eigen::Vector3d(p.x(), p.y(), z));
    }
    std::size_t at = 0;
    if (!first_drop(r, u, iso, 1, at)) continue;
    const double slope = (u[at - 1] - u[at]) / (r[at] - r[at - 1]);
    sum += 1.0 / slope;
    ++valid;
  }
  if (valid == 0) return std::nullopt;
  return sum / valid;
}

std::optional<double> interface_width(const PhaseFieldNet<double>& net, double z, Eigen::Vector2d center, int samples,
                                      double iso) {
  return interface_width([&net](const Eigen::Vector3d& p) { return forward(net, p); }, z, center, samples, iso);
}

void export_mesh(const VolumeMesh& mesh, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::Io, "cannot write " + path.string());
  os << "# phasevol isosurface: " << mesh.vertices.size() << " vertices, " << mesh.triangles.size() << " faces\n";
  for (const auto& v : mesh.vertices)
    os << "v " << format_double(v.x()) << ' ' << format_double(v.y()) << ' ' << format_double(v.z()) << '\n';
  for (const auto& t : mesh.triangles) os << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  if (!os) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

VolumeMesh import_mesh(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::Io, "cannot open " + path.string());
  VolumeMesh mesh;
  for (std::string line; std::getline(is, line);) {
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "v") {
      Eigen::Vector3d v;
      if (!(ss >> v.x() >> v.y() >> v.z())) throw Error(ErrorKind::Format, "bad vertex line in " + path.string());
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::array<int, 3> t{};
      for (int& idx : t) {
        std::string token;
        if (!(ss >> token)) throw Error(ErrorKind::Format, "bad face line in " + path.string());
        idx = std::stoi(token.substr(0, token.find('/'))) - 1;
        if (idx < 0 || idx >= static_cast<int>(mesh.vertices.size()))
          throw Error(ErrorKind::Format, "face index out of range in " + path.string());
      }
      mesh.triangles.push_back(t);
    }
  }
  return mesh;
}

void export_image(const Image& image, const std::filesystem::path& path) { write_image(image, path); }

}  // namespace phasevol
