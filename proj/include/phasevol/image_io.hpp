#pragma once

#include <filesystem>
#include <string>

#include "phasevol/slice_data.hpp"

namespace phasevol {

// Portable graymap (P2 ASCII / P5 binary, maxval up to 65535) and CSV images.
// Pixel value v in [0, 1] is stored as round(v * maxval).

Image read_graymap(const std::filesystem::path& path);
void write_graymap(const Image& image, const std::filesystem::path& path, int maxval = 255);

Image read_csv_image(const std::filesystem::path& path);
void write_csv_image(const Image& image, const std::filesystem::path& path);

/// Dispatches on extension: .pgm -> graymap, .csv -> CSV.
Image read_image(const std::filesystem::path& path);
void write_image(const Image& image, const std::filesystem::path& path);

/// Shortest decimal representation that round-trips exactly.
std::string format_double(double value);

}  // namespace phasevol
