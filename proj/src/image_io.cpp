#include "semcom/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "semcom/errors.hpp"

namespace semcom::imageio {

namespace fs = std::filesystem;

void write_ppm(const fs::path& path, const ImageU8& img) {
  if (img.channels != 3) throw ValidationError("ppm: only 3-channel images");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw NotFoundError("ppm: cannot open for writing: " + path.string());
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
  if (!out) throw IntegrityError("ppm: short write: " + path.string());
}

ImageU8 read_ppm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("ppm: cannot open: " + path.string());
  std::string magic;
  in >> magic;
  if (magic != "P6") {
    throw IntegrityError("ppm: bad magic in " + path.string());
  }
  int w = 0, h = 0, maxval = 0;
  in >> w >> h >> maxval;
  in.get();  // single whitespace after header
  if (w <= 0 || h <= 0 || maxval != 255) {
    throw IntegrityError("ppm: bad header in " + path.string());
  }
  ImageU8 img;
  img.width = w;
  img.height = h;
  img.channels = 3;
  img.pixels.resize(static_cast<size_t>(w) * h * 3);
  in.read(reinterpret_cast<char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) {
    throw IntegrityError("ppm: truncated pixel data in " + path.string());
  }
  return img;
}

ImageU8 from_chw(const double* chw, int c, int h, int w) {
  ImageU8 img;
  img.height = h;
  img.width = w;
  img.channels = 3;
  img.pixels.resize(static_cast<size_t>(h) * w * 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int ch = 0; ch < 3; ++ch) {
        const int src_ch = c == 1 ? 0 : ch;
        double v = chw[(static_cast<size_t>(src_ch) * h + y) * w + x];
        v = std::clamp(v, 0.0, 1.0);
        img.pixels[(static_cast<size_t>(y) * w + x) * 3 + ch] =
            static_cast<uint8_t>(std::lround(v * 255.0));
      }
    }
  }
  return img;
}

void to_chw(const ImageU8& img, double* chw) {
  const int h = img.height, w = img.width;
  for (int ch = 0; ch < 3; ++ch) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        chw[(static_cast<size_t>(ch) * h + y) * w + x] =
            img.pixels[(static_cast<size_t>(y) * w + x) * 3 + ch] / 255.0;
      }
    }
  }
}

void write_grid(const fs::path& path, const Tensor& images, int cols) {
  if (images.shape.size() != 4) throw ValidationError("grid: need (n,c,h,w)");
  const int n = static_cast<int>(images.dim(0));
  const int c = static_cast<int>(images.dim(1));
  const int h = static_cast<int>(images.dim(2));
  const int w = static_cast<int>(images.dim(3));
  if (n == 0 || cols <= 0) throw ValidationError("grid: empty input");
  const int rows = (n + cols - 1) / cols;
  const int sep = 2;
  ImageU8 grid;
  grid.height = rows * h + (rows + 1) * sep;
  grid.width = cols * w + (cols + 1) * sep;
  grid.channels = 3;
  grid.pixels.assign(static_cast<size_t>(grid.height) * grid.width * 3, 255);
  for (int i = 0; i < n; ++i) {
    const int r = i / cols, cidx = i % cols;
    const ImageU8 cell = from_chw(images.row(i), c, h, w);
    const int y0 = sep + r * (h + sep);
    const int x0 = sep + cidx * (w + sep);
    for (int y = 0; y < h; ++y) {
      std::copy_n(cell.pixels.data() + static_cast<size_t>(y) * w * 3, w * 3,
                  grid.pixels.data() +
                      (static_cast<size_t>(y0 + y) * grid.width + x0) * 3);
    }
  }
  write_ppm(path, grid);
}

}  // namespace semcom::imageio
