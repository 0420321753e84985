#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "semcom/channel.hpp"
#include "semcom/rng.hpp"

using namespace semcom;
using namespace semcom::channel;

namespace {

// Analytic square-QAM symbol error rate oracle (test-side, independent of
// the demodulator): per-axis m-PAM error 2(1-1/m) Q(sqrt(3 SNR/(2(m^2-1)))),
// SER = 1 - (1 - P_axis)^2.
double q_func(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

double qam_ser_oracle(int order, double snr_db) {
  const int m = static_cast<int>(std::lround(std::sqrt(order)));
  const double snr = std::pow(10.0, snr_db / 10.0);
  const double arg = std::sqrt(3.0 * snr / (2.0 * (order - 1)));
  const double p_axis = 2.0 * (1.0 - 1.0 / m) * q_func(arg);
  return 1.0 - (1.0 - p_axis) * (1.0 - p_axis);
}

}  // namespace

TEST_CASE("power_normalize scales to unit average symbol power") {
  std::vector<double> v(128, 0.7);
  SymbolBlock b = power_normalize(v);
  CHECK(b.symbols.size() == 64);
  CHECK(b.average_power() == doctest::Approx(1.0).epsilon(1e-9));
  for (const auto& s : b.symbols) {
    CHECK(std::norm(s) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("single-spike vector puts all power in one symbol") {
  std::vector<double> v(128, 0.0);
  v[0] = 1.0;
  SymbolBlock b = power_normalize(v);
  CHECK(std::norm(b.symbols[0]) == doctest::Approx(64.0).epsilon(1e-9));
  CHECK(b.average_power() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(b.scale == doctest::Approx(8.0));
}

TEST_CASE("zero vector is a degenerate input") {
  std::vector<double> v(8, 0.0);
  CHECK_THROWS_AS(power_normalize(v), DegenerateInputError);
}

TEST_CASE("odd length rejected") {
  std::vector<double> v(7, 1.0);
  CHECK_THROWS_AS(power_normalize(v), ValidationError);
}

TEST_CASE("de_normalize inverts power_normalize") {
  Rng rng(3);
  std::vector<double> v(64);
  for (auto& x : v) x = rng.normal();
  SymbolBlock b = power_normalize(v);
  auto back = de_normalize(b);
  for (size_t i = 0; i < v.size(); ++i) {
    CHECK(back[i] == doctest::Approx(v[i]).epsilon(1e-9));
  }
}

TEST_CASE("awgn noiseless sentinel is bit-exact") {
  std::vector<double> v(32, 1.0);
  SymbolBlock b = power_normalize(v);
  SymbolBlock out = awgn(b, kNoiselessSnrDb, 99);
  for (size_t i = 0; i < b.symbols.size(); ++i) {
    CHECK(out.symbols[i].real() == b.symbols[i].real());
    CHECK(out.symbols[i].imag() == b.symbols[i].imag());
  }
}

TEST_CASE("awgn empirical noise power matches 10^(-snr/10)") {
  SymbolBlock b;
  b.symbols.assign(200000, cplx(0.0, 0.0));
  b.scale = 1.0;
  for (double snr : {0.0, 12.0}) {
    SymbolBlock out = awgn(b, snr, 1234);
    double p = out.average_power();
    CHECK(p == doctest::Approx(noise_variance(snr)).epsilon(0.01));
  }
}

TEST_CASE("awgn seeds: same seed same noise, different seed different noise") {
  SymbolBlock b;
  b.symbols.assign(64, cplx(1.0, 0.0));
  SymbolBlock a1 = awgn(b, 10.0, 5);
  SymbolBlock a2 = awgn(b, 10.0, 5);
  SymbolBlock a3 = awgn(b, 10.0, 6);
  bool same = true, diff = false;
  double p1 = 0.0, p3 = 0.0;
  for (size_t i = 0; i < 64; ++i) {
    same = same && a1.symbols[i] == a2.symbols[i];
    diff = diff || a1.symbols[i] != a3.symbols[i];
    p1 += std::norm(a1.symbols[i] - b.symbols[i]);
    p3 += std::norm(a3.symbols[i] - b.symbols[i]);
  }
  CHECK(same);
  CHECK(diff);
  // identical empirical variance within Monte-Carlo tolerance
  CHECK(p1 / 64.0 == doctest::Approx(p3 / 64.0).epsilon(0.5));
}

TEST_CASE("qam constellation has unit average energy") {
  for (int order : {4, 16, 64}) {
    double total = 0.0;
    for (int i = 0; i < order; ++i) total += std::norm(qam_point(i, order));
    CHECK(total / order == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("noiseless modulate-demodulate identity for M in {4,16,64}") {
  for (int order : {4, 16, 64}) {
    std::vector<int> idx(order);
    for (int i = 0; i < order; ++i) idx[i] = i;
    SymbolBlock b = qam_modulate(idx, order);
    auto out = qam_demodulate(b, order);
    CHECK(out == idx);
  }
}

TEST_CASE("gray labeling: adjacent constellation points differ in one bit") {
  // enumerate all 16 points; neighbors along I or Q must have Hamming
  // distance 1 in their index labels
  const int order = 16;
  auto hamming = [](int a, int b) {
    int x = a ^ b, c = 0;
    while (x) {
      c += x & 1;
      x >>= 1;
    }
    return c;
  };
  const double step = 2.0 / std::sqrt(10.0);
  for (int i = 0; i < order; ++i) {
    for (int j = 0; j < order; ++j) {
      const auto pi = qam_point(i, order), pj = qam_point(j, order);
      const double di = std::fabs(pi.real() - pj.real());
      const double dq = std::fabs(pi.imag() - pj.imag());
      const bool adjacent = (di < 1e-9 && std::fabs(dq - step) < 1e-9) ||
                            (dq < 1e-9 && std::fabs(di - step) < 1e-9);
      if (adjacent) CHECK(hamming(i, j) == 1);
    }
  }
}

TEST_CASE("qam index out of range is rejected") {
  CHECK_THROWS_AS(qam_modulate({16}, 16), ValidationError);
  CHECK_THROWS_AS(qam_modulate({-1}, 16), ValidationError);
}

TEST_CASE("qam order must be a square power of two") {
  CHECK_THROWS_AS(qam_modulate({0}, 8), ValidationError);
  CHECK_THROWS_AS(qam_modulate({0}, 2), ValidationError);
  CHECK(is_square_power_of_two(4));
  CHECK(is_square_power_of_two(256));
  CHECK(!is_square_power_of_two(32));
}

TEST_CASE("16-QAM SER at 12 dB tracks the analytic oracle") {
  const int order = 16;
  const int n = 200000;
  Rng rng(77);
  std::vector<int> idx(n);
  for (auto& v : idx) v = static_cast<int>(rng.uniform_int(order));
  SymbolBlock tx = qam_modulate(idx, order);
  SymbolBlock rx = awgn(tx, 12.0, 4242);
  auto out = qam_demodulate(rx, order);
  int errors = 0;
  for (int i = 0; i < n; ++i) errors += out[i] != idx[i];
  const double ser = static_cast<double>(errors) / n;
  const double oracle = qam_ser_oracle(order, 12.0);
  CHECK(ser == doctest::Approx(oracle).epsilon(0.25));
}

TEST_CASE("very low SNR approaches the uniform-guess limit") {
  const int order = 16;
  const int n = 100000;
  Rng rng(88);
  std::vector<int> idx(n);
  for (auto& v : idx) v = static_cast<int>(rng.uniform_int(order));
  SymbolBlock tx = qam_modulate(idx, order);
  SymbolBlock rx = awgn(tx, -20.0, 777);
  auto out = qam_demodulate(rx, order);
  int errors = 0;
  for (int i = 0; i < n; ++i) errors += out[i] != idx[i];
  const double ser = static_cast<double>(errors) / n;
  CHECK(ser == doctest::Approx(15.0 / 16.0).epsilon(0.05));
}

TEST_CASE("channel config validation") {
  ChannelConfig cfg;
  cfg.snr_db = 12.0;
  cfg.modulation = Modulation::kQam;
  cfg.qam_order = 16;
  CHECK_NOTHROW(cfg.validate());
  cfg.qam_order = 8;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg.qam_order = 16;
  cfg.snr_db = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}
