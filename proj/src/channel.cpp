#include "semcom/channel.hpp"

#include <cmath>
#include <string>

namespace semcom::channel {

namespace {

int int_sqrt(int m) {
  int r = static_cast<int>(std::lround(std::sqrt(static_cast<double>(m))));
  while (r * r > m) --r;
  while ((r + 1) * (r + 1) <= m) ++r;
  return r;
}

inline int gray_encode(int b) { return b ^ (b >> 1); }

inline int gray_decode(int g) {
  int b = 0;
  for (; g; g >>= 1) b ^= g;
  return b;
}

// Per-axis amplitude scale for unit average symbol energy.
double axis_scale(int m_per_axis) {
  return std::sqrt(3.0 / (2.0 * (static_cast<double>(m_per_axis) *
                                     m_per_axis -
                                 1.0)));
}

}  // namespace

bool is_square_power_of_two(int m) {
  if (m < 4) return false;
  const int r = int_sqrt(m);
  if (r * r != m) return false;
  return (m & (m - 1)) == 0;
}

void ChannelConfig::validate() const {
  if (!std::isfinite(snr_db)) {
    throw ValidationError("channel config: snr_db must be finite");
  }
  if (modulation == Modulation::kQam && !is_square_power_of_two(qam_order)) {
    throw ValidationError("channel config: QAM order must be a square power "
                          "of two, got " + std::to_string(qam_order));
  }
}

double SymbolBlock::average_power() const {
  double total = 0.0;
  for (const auto& s : symbols) total += std::norm(s);
  return symbols.empty() ? 0.0 : total / static_cast<double>(symbols.size());
}

SymbolBlock power_normalize(const std::vector<double>& features) {
  if (features.size() % 2 != 0) {
    throw ValidationError("power_normalize: feature length must be even");
  }
  if (features.empty()) {
    throw ValidationError("power_normalize: empty feature vector");
  }
  double ss = 0.0;
  for (double v : features) ss += v * v;
  if (ss == 0.0) {
    throw DegenerateInputError("power_normalize: all-zero feature vector");
  }
  const double d = static_cast<double>(features.size());
  const double scale = std::sqrt(d / 2.0) / std::sqrt(ss);
  SymbolBlock out;
  out.scale = scale;
  out.symbols.resize(features.size() / 2);
  for (size_t i = 0; i < out.symbols.size(); ++i) {
    out.symbols[i] = cplx(features[2 * i] * scale, features[2 * i + 1] * scale);
  }
  return out;
}

std::vector<double> de_normalize(const SymbolBlock& block) {
  std::vector<double> out(block.symbols.size() * 2);
  const double inv = 1.0 / block.scale;
  for (size_t i = 0; i < block.symbols.size(); ++i) {
    out[2 * i] = block.symbols[i].real() * inv;
    out[2 * i + 1] = block.symbols[i].imag() * inv;
  }
  return out;
}

std::vector<double> real_view(const SymbolBlock& block) {
  std::vector<double> out(block.symbols.size() * 2);
  for (size_t i = 0; i < block.symbols.size(); ++i) {
    out[2 * i] = block.symbols[i].real();
    out[2 * i + 1] = block.symbols[i].imag();
  }
  return out;
}

SymbolBlock from_real_view(const std::vector<double>& values, double scale) {
  if (values.size() % 2 != 0) {
    throw ValidationError("from_real_view: length must be even");
  }
  SymbolBlock out;
  out.scale = scale;
  out.symbols.resize(values.size() / 2);
  for (size_t i = 0; i < out.symbols.size(); ++i) {
    out.symbols[i] = cplx(values[2 * i], values[2 * i + 1]);
  }
  return out;
}

SymbolBlock awgn(const SymbolBlock& block, double snr_db, uint64_t seed) {
  if (snr_db == kNoiselessSnrDb) return block;
  const double sigma2 = noise_variance(snr_db);
  const double per_axis = std::sqrt(sigma2 / 2.0);
  Rng rng(seed);
  SymbolBlock out = block;
  for (auto& s : out.symbols) {
    const double ni = rng.normal(0.0, per_axis);
    const double nq = rng.normal(0.0, per_axis);
    s += cplx(ni, nq);
  }
  return out;
}

cplx qam_point(int index, int order) {
  if (!is_square_power_of_two(order)) {
    throw ValidationError("qam: order must be a square power of two");
  }
  if (index < 0 || index >= order) {
    throw ValidationError("qam: index " + std::to_string(index) +
                          " out of range for M=" + std::to_string(order));
  }
  const int m_axis = int_sqrt(order);
  int bits_axis = 0;
  for (int v = m_axis; v > 1; v >>= 1) ++bits_axis;
  const int gi = index >> bits_axis;         // high bits -> I axis
  const int gq = index & (m_axis - 1);       // low bits  -> Q axis
  const int pi = gray_decode(gi);
  const int pq = gray_decode(gq);
  const double a = axis_scale(m_axis);
  const double li = (2.0 * pi - (m_axis - 1)) * a;
  const double lq = (2.0 * pq - (m_axis - 1)) * a;
  return cplx(li, lq);
}

SymbolBlock qam_modulate(const std::vector<int>& indices, int order) {
  SymbolBlock out;
  out.scale = 1.0;
  out.symbols.reserve(indices.size());
  for (int idx : indices) out.symbols.push_back(qam_point(idx, order));
  return out;
}

std::vector<int> qam_demodulate(const SymbolBlock& block, int order) {
  if (!is_square_power_of_two(order)) {
    throw ValidationError("qam: order must be a square power of two");
  }
  const int m_axis = int_sqrt(order);
  int bits_axis = 0;
  for (int v = m_axis; v > 1; v >>= 1) ++bits_axis;
  const double a = axis_scale(m_axis);
  std::vector<int> out;
  out.reserve(block.symbols.size());
  for (const auto& s : block.symbols) {
    // Nearest level per axis; levels are a*(2p - (m-1)) for p in [0, m).
    auto nearest = [&](double v) {
      int p = static_cast<int>(std::lround((v / a + (m_axis - 1)) / 2.0));
      if (p < 0) p = 0;
      if (p >= m_axis) p = m_axis - 1;
      return p;
    };
    const int pi = nearest(s.real());
    const int pq = nearest(s.imag());
    out.push_back((gray_encode(pi) << bits_axis) | gray_encode(pq));
  }
  return out;
}

}  // namespace semcom::channel
