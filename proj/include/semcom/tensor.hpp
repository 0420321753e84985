#pragma once

#include <cstddef>
#include <numeric>
#include <vector>

#include "semcom/errors.hpp"

namespace semcom {

// Dense row-major tensor of doubles. Shapes used in practice are
// (n, d) feature blocks and (n, c, h, w) image batches.
struct Tensor {
  std::vector<size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<size_t> s) : shape(std::move(s)) {
    data.assign(numel_of(shape), 0.0);
  }
  Tensor(std::vector<size_t> s, std::vector<double> d)
      : shape(std::move(s)), data(std::move(d)) {
    if (data.size() != numel_of(shape)) {
      throw ValidationError("tensor data does not match shape");
    }
  }

  static size_t numel_of(const std::vector<size_t>& s) {
    size_t n = 1;
    for (size_t v : s) n *= v;
    return n;
  }

  size_t numel() const { return data.size(); }
  size_t dim(size_t i) const { return shape.at(i); }
  size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  // Elements per leading-dimension slice (e.g. one image or feature row).
  size_t row_size() const { return shape.empty() ? 0 : numel() / shape[0]; }

  double* row(size_t i) { return data.data() + i * row_size(); }
  const double* row(size_t i) const { return data.data() + i * row_size(); }

  Tensor reshaped(std::vector<size_t> s) const {
    if (numel_of(s) != numel()) {
      throw ValidationError("reshape changes element count");
    }
    return Tensor(std::move(s), data);
  }
};

}  // namespace semcom
