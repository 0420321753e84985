#pragma once

// Binary PPM (P6) image files and reconstruction-grid export. PPM keeps the
// corpus toolable with standard image viewers without pulling in a codec
// dependency.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "semcom/tensor.hpp"

namespace semcom::imageio {

struct ImageU8 {
  int height = 0;
  int width = 0;
  int channels = 3;
  std::vector<uint8_t> pixels;  // row-major, interleaved RGB
};

void write_ppm(const std::filesystem::path& path, const ImageU8& img);
ImageU8 read_ppm(const std::filesystem::path& path);

// Converts one (c, h, w) double image in [0,1] to interleaved uint8.
ImageU8 from_chw(const double* chw, int c, int h, int w);

// Converts interleaved uint8 back to planar (c, h, w) doubles in [0,1].
void to_chw(const ImageU8& img, double* chw);

// Writes a grid of images (rows x cols, 2px white separators) to one PPM.
// Images are (c, h, w) slices of a (n, c, h, w) tensor, clamped to [0,1].
void write_grid(const std::filesystem::path& path, const Tensor& images,
                int cols);

}  // namespace semcom::imageio
