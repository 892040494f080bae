#include "phasevol/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "phasevol/error.hpp"

namespace phasevol {

namespace fs = std::filesystem;

std::string format_double(double value) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, end);
}

namespace {

// Skips whitespace and '#' comments in a graymap header.
void skip_header_space(std::istream& is) {
  for (;;) {
    int ch = is.peek();
    if (ch == '#') {
      std::string comment;
      std::getline(is, comment);
    } else if (ch != EOF && std::isspace(ch)) {
      is.get();
    } else {
      return;
    }
  }
}

int read_header_int(std::istream& is, const fs::path& path) {
  skip_header_space(is);
  int value = -1;
  if (!(is >> value) || value < 0) throw Error(ErrorKind::Format, "bad graymap header in " + path.string());
  return value;
}

double parse_double(const std::string& token, const fs::path& path) {
  const char* first = token.data();
  const char* last = token.data() + token.size();
  while (first < last && std::isspace(static_cast<unsigned char>(*first))) ++first;
  while (last > first && std::isspace(static_cast<unsigned char>(last[-1]))) --last;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || first == last)
    throw Error(ErrorKind::Format, "bad number '" + token + "' in " + path.string());
  return value;
}

}  // namespace

Image read_graymap(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::string magic;
  is >> magic;
  if (magic != "P2" && magic != "P5") throw Error(ErrorKind::Format, path.string() + " is not a P2/P5 graymap");
  const int width = read_header_int(is, path);
  const int height = read_header_int(is, path);
  const int maxval = read_header_int(is, path);
  if (width == 0 || height == 0 || maxval == 0 || maxval > 65535)
    throw Error(ErrorKind::Format, "bad graymap dimensions in " + path.string());

  Image image(height, width);
  if (magic == "P2") {
    for (Eigen::Index i = 0; i < image.size(); ++i) {
      const int v = read_header_int(is, path);
      if (v > maxval) throw Error(ErrorKind::Format, "pixel exceeds maxval in " + path.string());
      image.data()[i] = static_cast<double>(v) / maxval;
    }
  } else {
    is.get();  // single whitespace byte after maxval
    const int bytes = maxval < 256 ? 1 : 2;
    std::vector<unsigned char> raw(static_cast<std::size_t>(image.size()) * bytes);
    if (!is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
      throw Error(ErrorKind::Format, "truncated graymap " + path.string());
    for (Eigen::Index i = 0; i < image.size(); ++i) {
      const int v = bytes == 1 ? raw[i] : (raw[2 * i] << 8) | raw[2 * i + 1];
      if (v > maxval) throw Error(ErrorKind::Format, "pixel exceeds maxval in " + path.string());
      image.data()[i] = static_cast<double>(v) / maxval;
    }
  }
  return image;
}

void write_graymap(const Image& image, const fs::path& path, int maxval) {
  if (maxval < 1 || maxval > 65535) throw Error(ErrorKind::Usage, "graymap maxval must be in [1, 65535]");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::Io, "cannot write " + path.string());
  os << "P5\n" << image.cols() << ' ' << image.rows() << '\n' << maxval << '\n';
  for (Eigen::Index i = 0; i < image.size(); ++i) {
    const double v = std::clamp(image.data()[i], 0.0, 1.0);
    const auto q = static_cast<unsigned>(std::lround(v * maxval));
    if (maxval < 256) {
      os.put(static_cast<char>(q));
    } else {
      os.put(static_cast<char>(q >> 8));
      os.put(static_cast<char>(q & 0xff));
    }
  }
  if (!os) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

Image read_csv_image(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  for (std::string line; std::getline(is, line);) {
    if (line.empty() || line == "\r") continue;
    std::vector<double> row;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) row.push_back(parse_double(cell, path));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorKind::Format, "empty CSV image " + path.string());
  Image image(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows.front().size()) throw Error(ErrorKind::Format, "ragged CSV image " + path.string());
    for (std::size_t c = 0; c < rows[r].size(); ++c) image(r, c) = rows[r][c];
  }
  return image;
}

void write_csv_image(const Image& image, const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::Io, "cannot write " + path.string());
  for (Eigen::Index r = 0; r < image.rows(); ++r) {
    for (Eigen::Index c = 0; c < image.cols(); ++c) {
      if (c) os << ',';
      os << format_double(image(r, c));
    }
    os << '\n';
  }
  if (!os) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

Image read_image(const fs::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".csv") return read_csv_image(path);
  if (ext == ".pgm") return read_graymap(path);
  throw Error(ErrorKind::Format, "unsupported image extension '" + ext + "'");
}

void write_image(const Image& image, const fs::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".csv") return write_csv_image(image, path);
  if (ext == ".pgm") return write_graymap(image, path, 255);
  throw Error(ErrorKind::Format, "unsupported image extension '" + ext + "'");
}

}  // namespace phasevol
