#pragma once

// Transmit-side power normalization, AWGN corruption and square-QAM
// modulation. SNR is defined per complex symbol against unit signal power;
// noise is split equally between the I and Q components. All operations are
// pure given (input, seed).

#include <complex>
#include <cstdint>
#include <limits>
#include <vector>

#include "semcom/errors.hpp"
#include "semcom/rng.hpp"

namespace semcom::channel {

using cplx = std::complex<double>;

// Sentinel SNR for a noiseless channel: awgn() returns its input bit-exactly.
inline constexpr double kNoiselessSnrDb = std::numeric_limits<double>::infinity();

enum class Modulation { kAnalogFullResolution, kQam };

struct ChannelConfig {
  double snr_db = 12.0;
  Modulation modulation = Modulation::kAnalogFullResolution;
  int qam_order = 16;
  uint64_t seed = 0;

  void validate() const;
};

// A block of complex channel symbols. `scale` is the factor applied to the
// real feature vector by power_normalize, retained so the receiver can
// de-normalize.
struct SymbolBlock {
  std::vector<cplx> symbols;
  double scale = 1.0;

  double average_power() const;
};

// Pairs consecutive reals into complex symbols and scales to unit average
// symbol power. Input length must be even and the vector must not be all
// zero. scale = sqrt(d/2) / ||x||.
SymbolBlock power_normalize(const std::vector<double>& features);

// Inverse of power_normalize: unpair and divide by the stored scale.
std::vector<double> de_normalize(const SymbolBlock& block);

// Interleaved real view (I0, Q0, I1, Q1, ...) of the symbols, and back.
std::vector<double> real_view(const SymbolBlock& block);
SymbolBlock from_real_view(const std::vector<double>& values, double scale);

// Adds circularly-symmetric complex Gaussian noise with per-symbol variance
// 10^(-snr_db/10). snr_db == kNoiselessSnrDb returns the input unchanged.
SymbolBlock awgn(const SymbolBlock& block, double snr_db, uint64_t seed);

inline double noise_variance(double snr_db) {
  return std::pow(10.0, -snr_db / 10.0);
}

// Gray-mapped square M-QAM with unit average constellation energy.
// M must be a square power of two (4, 16, 64, ...).
SymbolBlock qam_modulate(const std::vector<int>& indices, int order);

// Minimum-Euclidean-distance hard decision per symbol.
std::vector<int> qam_demodulate(const SymbolBlock& block, int order);

// The constellation point for one index; exposed for tests and for the
// Gray-adjacency enumeration.
cplx qam_point(int index, int order);

bool is_square_power_of_two(int m);

}  // namespace semcom::channel
