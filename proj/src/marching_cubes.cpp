#include <array>
#include <vector>

#include <Eigen/Geometry>

#include "phasevol/error.hpp"
#include "phasevol/volume_out.hpp"

namespace phasevol {

namespace {

using Corner = std::array<int, 3>;

// Cube faces with corners listed counter-clockwise seen from outside the cube.
constexpr std::array<std::array<Corner, 4>, 6> kFaces{{
    {{{0, 0, 0}, {0, 0, 1}, {0, 1, 1}, {0, 1, 0}}},
    {{{1, 0, 0}, {1, 1, 0}, {1, 1, 1}, {1, 0, 1}}},
    {{{0, 0, 0}, {1, 0, 0}, {1, 0, 1}, {0, 0, 1}}},
    {{{0, 1, 0}, {0, 1, 1}, {1, 1, 1}, {1, 1, 0}}},
    {{{0, 0, 0}, {0, 1, 0}, {1, 1, 0}, {1, 0, 0}}},
    {{{0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}}},
}};

// Slivers at or below this area are dropped.
constexpr double kMinArea = 1e-12;

struct Segment {
  long from;  // global edge id where the face boundary leaves {>= iso}
  long to;    // global edge id where it re-enters
  int face;
};

class Extractor {
 public:
  Extractor(const ProbeGrid& grid, double iso)
      : grid_(grid), iso_(iso), vertex_of_edge_(3 * static_cast<std::size_t>(grid.values.size()), -1) {}

  VolumeMesh run() {
    const auto& d = grid_.dims;
    for (int k = 0; k + 1 < d[2]; ++k)
      for (int j = 0; j + 1 < d[1]; ++j)
        for (int i = 0; i + 1 < d[0]; ++i) cube(i, j, k);
    return std::move(mesh_);
  }

 private:
  long edge_id(const Corner& a, const Corner& b) const {
    const Corner lo{std::min(a[0], b[0]), std::min(a[1], b[1]), std::min(a[2], b[2])};
    const int axis = a[0] != b[0] ? 0 : (a[1] != b[1] ? 1 : 2);
    return 3 * grid_.index(lo[0], lo[1], lo[2]) + axis;
  }

  int vertex(long edge) {
    int& slot = vertex_of_edge_[static_cast<std::size_t>(edge)];
    if (slot >= 0) return slot;
    const int axis = static_cast<int>(edge % 3);
    const long node = edge / 3;
    const int nx = grid_.dims[0], ny = grid_.dims[1];
    const int i = static_cast<int>(node % nx), j = static_cast<int>((node / nx) % ny),
              k = static_cast<int>(node / (static_cast<long>(nx) * ny));
    Corner b{i, j, k};
    ++b[axis];
    const double va = grid_.at(i, j, k), vb = grid_.at(b[0], b[1], b[2]);
    const double t = (iso_ - va) / (vb - va);
    const Eigen::Vector3d pa = grid_.node(i, j, k), pb = grid_.node(b[0], b[1], b[2]);
    slot = static_cast<int>(mesh_.vertices.size());
    mesh_.vertices.push_back(pa + t * (pb - pa));
    return slot;
  }

  void face_segments(int i, int j, int k, int f, std::vector<Segment>& out) const {
    const auto& face = kFaces[f];
    std::array<Corner, 4> c;
    std::array<bool, 4> in;
    double mean = 0.0;
    for (int q = 0; q < 4; ++q) {
      c[q] = {i + face[q][0], j + face[q][1], k + face[q][2]};
      const double v = grid_.at(c[q][0], c[q][1], c[q][2]);
      in[q] = v >= iso_;
      mean += 0.25 * v;
    }
    // Crossings in counter-clockwise order, tagged as exits (in -> out) or entries.
    std::array<long, 4> edge{};
    std::array<bool, 4> exit{};
    int count = 0;
    for (int q = 0; q < 4; ++q) {
      const int r = (q + 1) % 4;
      if (in[q] == in[r]) continue;
      edge[count] = edge_id(c[q], c[r]);
      exit[count] = in[q];
      ++count;
    }
    if (count == 2) {
      out.push_back(exit[0] ? Segment{edge[0], edge[1], f} : Segment{edge[1], edge[0], f});
    } else if (count == 4) {
      // Rotate so crossing 0 is an exit: order is exit, entry, exit, entry.
      const int s = exit[0] ? 0 : 1;
      const long x1 = edge[s], e1 = edge[(s + 1) % 4], x2 = edge[(s + 2) % 4], e2 = edge[(s + 3) % 4];
      if (mean >= iso_) {
        // Inside joined across the face: each segment cuts off an outside corner.
        out.push_back({x1, e1, f});
        out.push_back({x2, e2, f});
      } else {
        out.push_back({x1, e2, f});
        out.push_back({x2, e1, f});
      }
    }
  }

  void add_triangle(int a, int b, int c) {
    const auto& v = mesh_.vertices;
    if (0.5 * (v[b] - v[a]).cross(v[c] - v[a]).norm() <= kMinArea) return;
    mesh_.triangles.push_back({a, b, c});
  }

  void cube(int i, int j, int k) {
    segments_.clear();
    for (int f = 0; f < 6; ++f) face_segments(i, j, k, f, segments_);
    if (segments_.empty()) return;
    std::vector<char> used(segments_.size(), 0);
    for (std::size_t s = 0; s < segments_.size(); ++s) {
      if (used[s]) continue;
      loop_.clear();
      int face_mask = 0;
      bool repeated_face = false;
      std::size_t cur = s;
      while (!used[cur]) {
        used[cur] = 1;
        loop_.push_back(segments_[cur].from);
        repeated_face |= (face_mask >> segments_[cur].face) & 1;
        face_mask |= 1 << segments_[cur].face;
        const long next = segments_[cur].to;
        for (std::size_t t = 0; t < segments_.size(); ++t) {
          if (!used[t] && segments_[t].from == next) {
            cur = t;
            break;
          }
        }
      }
      if (loop_.size() < 3) continue;
      if (!repeated_face) {
        const int v0 = vertex(loop_[0]);
        for (std::size_t q = 1; q + 1 < loop_.size(); ++q)
          add_triangle(v0, vertex(loop_[q + 1]), vertex(loop_[q]));
        continue;
      }
      // A loop crossing one face twice would put a fan chord on that face,
      // where the neighboring cube may reuse it. Triangulate around the centroid.
      Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
      for (long e : loop_) centroid += mesh_.vertices[vertex(e)];
      const int c = static_cast<int>(mesh_.vertices.size());
      mesh_.vertices.push_back(centroid / static_cast<double>(loop_.size()));
      for (std::size_t q = 0; q < loop_.size(); ++q)
        add_triangle(c, vertex(loop_[(q + 1) % loop_.size()]), vertex(loop_[q]));
    }
  }

  const ProbeGrid& grid_;
  double iso_;
  std::vector<int> vertex_of_edge_;
  std::vector<Segment> segments_;
  std::vector<long> loop_;
  VolumeMesh mesh_;
};

}  // namespace

VolumeMesh extract_isosurface(const ProbeGrid& grid, double iso) {
  for (int a = 0; a < 3; ++a)
    if (grid.dims[a] < 2) throw Error(ErrorKind::Usage, "isosurface extraction needs at least 2 nodes per axis");
  VolumeMesh mesh = Extractor(grid, iso).run();
  if (mesh.triangles.empty()) throw Error(ErrorKind::EmptySurface, "field never crosses the iso level on the probe grid");
  return mesh;
}

}  // namespace phasevol
