#include "semcom/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "semcom/kernels.hpp"

namespace semcom::nn {

using kernels::Backend;
using kernels::conv_out_dim;
using kernels::gemm;

nlohmann::json Layer::describe() const {
  return nlohmann::json{{"kind", kind()}};
}

// ---------------------------------------------------------------- Linear

Linear::Linear(size_t in, size_t out) : in_(in), out_(out) {
  w_ = ParamTensor{"w", {out, in}, std::vector<double>(out * in, 0.0),
                   std::vector<double>(out * in, 0.0)};
  b_ = ParamTensor{"b", {out}, std::vector<double>(out, 0.0),
                   std::vector<double>(out, 0.0)};
}

void Linear::init(Rng& rng) {
  const double scale = std::sqrt(2.0 / static_cast<double>(in_));
  for (auto& v : w_.value) v = rng.normal(0.0, scale);
  std::fill(b_.value.begin(), b_.value.end(), 0.0);
}

Tensor Linear::forward(const Tensor& x, bool train) {
  if (x.row_size() != in_) throw ValidationError("linear: input dim mismatch");
  const size_t n = x.rows();
  Tensor y({n, out_});
  // y = x * w^T
  gemm(false, true, static_cast<int>(n), static_cast<int>(out_),
       static_cast<int>(in_), 1.0, x.data.data(), static_cast<int>(in_),
       w_.value.data(), static_cast<int>(in_), 0.0, y.data.data(),
       static_cast<int>(out_));
  for (size_t i = 0; i < n; ++i) {
    double* row = y.row(i);
    for (size_t j = 0; j < out_; ++j) row[j] += b_.value[j];
  }
  if (train) x_ = x;
  return y;
}

Tensor Linear::backward(const Tensor& gy) {
  const size_t n = gy.rows();
  // dw += gy^T * x
  gemm(true, false, static_cast<int>(out_), static_cast<int>(in_),
       static_cast<int>(n), 1.0, gy.data.data(), static_cast<int>(out_),
       x_.data.data(), static_cast<int>(in_), 1.0, w_.grad.data(),
       static_cast<int>(in_));
  for (size_t i = 0; i < n; ++i) {
    const double* row = gy.row(i);
    for (size_t j = 0; j < out_; ++j) b_.grad[j] += row[j];
  }
  Tensor gx({n, in_});
  // gx = gy * w
  gemm(false, false, static_cast<int>(n), static_cast<int>(in_),
       static_cast<int>(out_), 1.0, gy.data.data(), static_cast<int>(out_),
       w_.value.data(), static_cast<int>(in_), 0.0, gx.data.data(),
       static_cast<int>(in_));
  return gx;
}

std::vector<size_t> Linear::out_shape(const std::vector<size_t>& in) const {
  return {in.at(0), out_};
}

long long Linear::forward_flops(const std::vector<size_t>& in) const {
  return 2LL * static_cast<long long>(in_) * static_cast<long long>(out_) +
         static_cast<long long>(out_);
}

nlohmann::json Linear::describe() const {
  return {{"kind", "linear"}, {"in", in_}, {"out", out_}};
}

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(size_t cin, size_t cout, int ksize, int stride, int pad)
    : cin_(cin), cout_(cout), k_(ksize), stride_(stride), pad_(pad) {
  const size_t fan = cin * ksize * ksize;
  w_ = ParamTensor{"w", {cout, fan}, std::vector<double>(cout * fan, 0.0),
                   std::vector<double>(cout * fan, 0.0)};
  b_ = ParamTensor{"b", {cout}, std::vector<double>(cout, 0.0),
                   std::vector<double>(cout, 0.0)};
}

void Conv2d::init(Rng& rng) {
  const double scale = std::sqrt(2.0 / static_cast<double>(cin_ * k_ * k_));
  for (auto& v : w_.value) v = rng.normal(0.0, scale);
  std::fill(b_.value.begin(), b_.value.end(), 0.0);
}

std::vector<size_t> Conv2d::out_shape(const std::vector<size_t>& in) const {
  const int oh = conv_out_dim(static_cast<int>(in.at(2)), k_, stride_, pad_);
  const int ow = conv_out_dim(static_cast<int>(in.at(3)), k_, stride_, pad_);
  return {in.at(0), cout_, static_cast<size_t>(oh), static_cast<size_t>(ow)};
}

long long Conv2d::forward_flops(const std::vector<size_t>& in) const {
  const auto out = out_shape(in);
  const long long positions = static_cast<long long>(out[2]) * out[3];
  return 2LL * cin_ * k_ * k_ * cout_ * positions + cout_ * positions;
}

Tensor Conv2d::forward(const Tensor& x, bool train) {
  if (x.shape.size() != 4 || x.dim(1) != cin_) {
    throw ValidationError("conv2d: expected (n, " + std::to_string(cin_) +
                          ", h, w) input");
  }
  const size_t n = x.dim(0);
  const int h = static_cast<int>(x.dim(2)), w = static_cast<int>(x.dim(3));
  const int oh = conv_out_dim(h, k_, stride_, pad_);
  const int ow = conv_out_dim(w, k_, stride_, pad_);
  const size_t fan = cin_ * k_ * k_;
  Tensor y({n, cout_, static_cast<size_t>(oh), static_cast<size_t>(ow)});

  std::vector<double> col(fan * oh * ow);
  for (size_t i = 0; i < n; ++i) {
    kernels::im2col(x.row(i), static_cast<int>(cin_), h, w, k_, k_, stride_,
                    pad_, col.data(), Backend::kSerial);
    // y_i = w * col : (cout, fan) x (fan, oh*ow)
    gemm(false, false, static_cast<int>(cout_), oh * ow,
         static_cast<int>(fan), 1.0, w_.value.data(), static_cast<int>(fan),
         col.data(), oh * ow, 0.0, y.row(i), oh * ow);
    double* yrow = y.row(i);
    for (size_t co = 0; co < cout_; ++co) {
      double* plane = yrow + co * oh * ow;
      const double bias = b_.value[co];
      for (int p = 0; p < oh * ow; ++p) plane[p] += bias;
    }
  }
  if (train) x_ = x;
  return y;
}

Tensor Conv2d::backward(const Tensor& gy) {
  const size_t n = x_.dim(0);
  const int h = static_cast<int>(x_.dim(2)), w = static_cast<int>(x_.dim(3));
  const int oh = conv_out_dim(h, k_, stride_, pad_);
  const int ow = conv_out_dim(w, k_, stride_, pad_);
  const size_t fan = cin_ * k_ * k_;
  Tensor gx(x_.shape);

  std::vector<double> col(fan * oh * ow);
  std::vector<double> gcol(fan * oh * ow);
  for (size_t i = 0; i < n; ++i) {
    kernels::im2col(x_.row(i), static_cast<int>(cin_), h, w, k_, k_, stride_,
                    pad_, col.data(), Backend::kSerial);
    // dw += gy_i * col^T
    gemm(false, true, static_cast<int>(cout_), static_cast<int>(fan), oh * ow,
         1.0, gy.row(i), oh * ow, col.data(), oh * ow, 1.0, w_.grad.data(),
         static_cast<int>(fan));
    const double* grow = gy.row(i);
    for (size_t co = 0; co < cout_; ++co) {
      const double* plane = grow + co * oh * ow;
      double acc = 0.0;
      for (int p = 0; p < oh * ow; ++p) acc += plane[p];
      b_.grad[co] += acc;
    }
    // gcol = w^T * gy_i
    gemm(true, false, static_cast<int>(fan), oh * ow,
         static_cast<int>(cout_), 1.0, w_.value.data(), static_cast<int>(fan),
         gy.row(i), oh * ow, 0.0, gcol.data(), oh * ow);
    kernels::col2im(gcol.data(), static_cast<int>(cin_), h, w, k_, k_, stride_,
                    pad_, gx.row(i), Backend::kSerial);
  }
  return gx;
}

nlohmann::json Conv2d::describe() const {
  return {{"kind", "conv2d"}, {"cin", cin_},     {"cout", cout_},
          {"k", k_},          {"stride", stride_}, {"pad", pad_}};
}

// ------------------------------------------------------------ activations

Tensor ReLU::forward(const Tensor& x, bool train) {
  Tensor y = x;
  for (auto& v : y.data) v = v > 0.0 ? v : 0.0;
  if (train) x_ = x;
  return y;
}

Tensor ReLU::backward(const Tensor& gy) {
  Tensor gx = gy;
  for (size_t i = 0; i < gx.data.size(); ++i) {
    if (x_.data[i] <= 0.0) gx.data[i] = 0.0;
  }
  return gx;
}

Tensor LeakyReLU::forward(const Tensor& x, bool train) {
  Tensor y = x;
  for (auto& v : y.data) {
    if (v < 0.0) v *= slope_;
  }
  if (train) x_ = x;
  return y;
}

Tensor LeakyReLU::backward(const Tensor& gy) {
  Tensor gx = gy;
  for (size_t i = 0; i < gx.data.size(); ++i) {
    if (x_.data[i] < 0.0) gx.data[i] *= slope_;
  }
  return gx;
}

nlohmann::json LeakyReLU::describe() const {
  return {{"kind", "leaky_relu"}, {"slope", slope_}};
}

Tensor Sigmoid::forward(const Tensor& x, bool train) {
  Tensor y = x;
  for (auto& v : y.data) v = 1.0 / (1.0 + std::exp(-v));
  if (train) y_ = y;
  return y;
}

Tensor Sigmoid::backward(const Tensor& gy) {
  Tensor gx = gy;
  for (size_t i = 0; i < gx.data.size(); ++i) {
    const double s = y_.data[i];
    gx.data[i] *= s * (1.0 - s);
  }
  return gx;
}

Tensor Elu::forward(const Tensor& x, bool train) {
  Tensor y = x;
  for (auto& v : y.data) {
    if (v < 0.0) v = std::exp(v) - 1.0;
  }
  if (train) x_ = x;
  return y;
}

Tensor Elu::backward(const Tensor& gy) {
  Tensor gx = gy;
  for (size_t i = 0; i < gx.data.size(); ++i) {
    if (x_.data[i] < 0.0) gx.data[i] *= std::exp(x_.data[i]);
  }
  return gx;
}

// -------------------------------------------------------- shape plumbing

Tensor NearestUpsample2x::forward(const Tensor& x, bool train) {
  const size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  Tensor y({n, c, 2 * h, 2 * w});
  for (size_t i = 0; i < n * c; ++i) {
    const double* src = x.data.data() + i * h * w;
    double* dst = y.data.data() + i * 4 * h * w;
    for (size_t yy = 0; yy < 2 * h; ++yy) {
      for (size_t xx = 0; xx < 2 * w; ++xx) {
        dst[yy * 2 * w + xx] = src[(yy / 2) * w + (xx / 2)];
      }
    }
  }
  if (train) in_shape_ = x.shape;
  return y;
}

Tensor NearestUpsample2x::backward(const Tensor& gy) {
  const size_t n = in_shape_[0], c = in_shape_[1], h = in_shape_[2],
               w = in_shape_[3];
  Tensor gx(in_shape_);
  for (size_t i = 0; i < n * c; ++i) {
    const double* src = gy.data.data() + i * 4 * h * w;
    double* dst = gx.data.data() + i * h * w;
    for (size_t yy = 0; yy < 2 * h; ++yy) {
      for (size_t xx = 0; xx < 2 * w; ++xx) {
        dst[(yy / 2) * w + (xx / 2)] += src[yy * 2 * w + xx];
      }
    }
  }
  return gx;
}

std::vector<size_t> NearestUpsample2x::out_shape(
    const std::vector<size_t>& in) const {
  return {in.at(0), in.at(1), in.at(2) * 2, in.at(3) * 2};
}

Tensor Flatten::forward(const Tensor& x, bool train) {
  if (train) in_shape_ = x.shape;
  return x.reshaped({x.dim(0), x.row_size()});
}

Tensor Flatten::backward(const Tensor& gy) { return gy.reshaped(in_shape_); }

std::vector<size_t> Flatten::out_shape(const std::vector<size_t>& in) const {
  size_t d = 1;
  for (size_t i = 1; i < in.size(); ++i) d *= in[i];
  return {in.at(0), d};
}

Tensor Reshape::forward(const Tensor& x, bool train) {
  if (train) in_shape_ = x.shape;
  return x.reshaped({x.dim(0), c_, h_, w_});
}

Tensor Reshape::backward(const Tensor& gy) { return gy.reshaped(in_shape_); }

std::vector<size_t> Reshape::out_shape(const std::vector<size_t>& in) const {
  return {in.at(0), c_, h_, w_};
}

nlohmann::json Reshape::describe() const {
  return {{"kind", "reshape"}, {"c", c_}, {"h", h_}, {"w", w_}};
}

// --------------------------------------------------------- RowPowerNorm

Tensor RowPowerNorm::forward(const Tensor& x, bool train) {
  const size_t n = x.rows(), d = x.row_size();
  Tensor y = x;
  std::vector<double> norms(n);
  const double target = std::sqrt(static_cast<double>(d) / 2.0);
  for (size_t i = 0; i < n; ++i) {
    const double* row = x.row(i);
    double ss = 0.0;
    for (size_t j = 0; j < d; ++j) ss += row[j] * row[j];
    const double norm = std::sqrt(ss);
    if (norm == 0.0) {
      throw DegenerateInputError("power norm: all-zero feature row");
    }
    norms[i] = norm;
    double* out = y.row(i);
    const double s = target / norm;
    for (size_t j = 0; j < d; ++j) out[j] *= s;
  }
  if (train) {
    x_ = x;
    norm_ = std::move(norms);
  }
  return y;
}

Tensor RowPowerNorm::backward(const Tensor& gy) {
  const size_t n = gy.rows(), d = gy.row_size();
  const double target = std::sqrt(static_cast<double>(d) / 2.0);
  Tensor gx(gy.shape);
  for (size_t i = 0; i < n; ++i) {
    const double* g = gy.row(i);
    const double* x = x_.row(i);
    double* out = gx.row(i);
    const double norm = norm_[i];
    const double s = target / norm;
    double xg = 0.0;
    for (size_t j = 0; j < d; ++j) xg += x[j] * g[j];
    const double coef = xg / (norm * norm);
    for (size_t j = 0; j < d; ++j) out[j] = s * (g[j] - x[j] * coef);
  }
  return gx;
}

// ------------------------------------------------------------ Sequential

Tensor Sequential::forward(const Tensor& x, bool train) {
  Tensor cur = x;
  for (auto& l : layers_) cur = l->forward(cur, train);
  return cur;
}

Tensor Sequential::backward(const Tensor& gy) {
  Tensor cur = gy;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
    cur = (*it)->backward(cur);
  }
  return cur;
}

std::vector<ParamTensor*> Sequential::params() {
  std::vector<ParamTensor*> out;
  for (auto& l : layers_) {
    for (auto* p : l->params()) out.push_back(p);
  }
  return out;
}

void Sequential::zero_grad() {
  for (auto* p : params()) p->zero_grad();
}

void Sequential::init(uint64_t seed) {
  Rng rng(seed);
  for (auto& l : layers_) l->init(rng);
}

size_t Sequential::param_count() {
  size_t n = 0;
  for (auto* p : params()) n += p->size();
  return n;
}

long long Sequential::forward_flops(std::vector<size_t> in_shape) const {
  long long total = 0;
  for (const auto& l : layers_) {
    total += l->forward_flops(in_shape);
    in_shape = l->out_shape(in_shape);
  }
  return total;
}

std::vector<size_t> Sequential::out_shape(std::vector<size_t> in_shape) const {
  for (const auto& l : layers_) in_shape = l->out_shape(in_shape);
  return in_shape;
}

nlohmann::json Sequential::describe() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& l : layers_) arr.push_back(l->describe());
  return arr;
}

// ----------------------------------------------------------------- losses

LossGrad softmax_cross_entropy(const Tensor& logits,
                               const std::vector<int>& labels) {
  const size_t n = logits.rows(), k = logits.row_size();
  if (labels.size() != n) throw ValidationError("cross entropy: n mismatch");
  LossGrad out;
  out.grad = Tensor(logits.shape);
  double total = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const int label = labels[i];
    if (label < 0 || static_cast<size_t>(label) >= k) {
      throw ValidationError("cross entropy: label out of range");
    }
    const double* row = logits.row(i);
    double* grow = out.grad.row(i);
    double mx = row[0];
    for (size_t j = 1; j < k; ++j) mx = std::max(mx, row[j]);
    double z = 0.0;
    for (size_t j = 0; j < k; ++j) z += std::exp(row[j] - mx);
    const double logz = std::log(z) + mx;
    total += logz - row[label];
    const double inv_n = 1.0 / static_cast<double>(n);
    for (size_t j = 0; j < k; ++j) {
      const double p = std::exp(row[j] - logz);
      grow[j] = (p - (static_cast<size_t>(label) == j ? 1.0 : 0.0)) * inv_n;
    }
  }
  out.loss = total / static_cast<double>(n);
  return out;
}

LossGrad bce_with_logits(const Tensor& logits, const std::vector<int>& labels) {
  const size_t n = logits.rows();
  if (logits.row_size() != 1) throw ValidationError("bce: expected (n,1) logits");
  if (labels.size() != n) throw ValidationError("bce: n mismatch");
  LossGrad out;
  out.grad = Tensor(logits.shape);
  double total = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (size_t i = 0; i < n; ++i) {
    const double z = logits.data[i];
    const double y = labels[i] ? 1.0 : 0.0;
    // log(1+e^z) computed stably
    const double softplus = z > 0.0 ? z + std::log1p(std::exp(-z))
                                    : std::log1p(std::exp(z));
    total += softplus - y * z;
    const double p = 1.0 / (1.0 + std::exp(-z));
    out.grad.data[i] = (p - y) * inv_n;
  }
  out.loss = total * inv_n;
  return out;
}

LossGrad mse_loss(const Tensor& pred, const Tensor& target) {
  if (pred.data.size() != target.data.size()) {
    throw ValidationError("mse: shape mismatch");
  }
  LossGrad out;
  out.grad = Tensor(pred.shape);
  double total = 0.0;
  const double inv = 1.0 / static_cast<double>(pred.data.size());
  for (size_t i = 0; i < pred.data.size(); ++i) {
    const double diff = pred.data[i] - target.data[i];
    total += diff * diff;
    out.grad.data[i] = 2.0 * diff * inv;
  }
  out.loss = total * inv;
  return out;
}

KlGrad kl_unit_gaussian(const Tensor& mu, const Tensor& logvar) {
  if (mu.shape != logvar.shape) throw ValidationError("kl: shape mismatch");
  const size_t n = mu.rows();
  KlGrad out;
  out.grad_mu = Tensor(mu.shape);
  out.grad_logvar = Tensor(mu.shape);
  double total = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (size_t i = 0; i < mu.data.size(); ++i) {
    const double m = mu.data[i];
    const double lv = logvar.data[i];
    const double var = std::exp(lv);
    total += 0.5 * (m * m + var - lv - 1.0);
    out.grad_mu.data[i] = m * inv_n;
    out.grad_logvar.data[i] = 0.5 * (var - 1.0) * inv_n;
  }
  out.loss = total * inv_n;
  return out;
}

// ------------------------------------------------------------------- Adam

Adam::Adam(std::vector<ParamTensor*> params, double lr, double beta1,
           double beta2, double eps, double weight_decay)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2),
      eps_(eps), weight_decay_(weight_decay) {
  for (auto* p : params_) {
    m_.emplace_back(p->size(), 0.0);
    v_.emplace_back(p->size(), 0.0);
  }
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t pi = 0; pi < params_.size(); ++pi) {
    ParamTensor* p = params_[pi];
    auto& m = m_[pi];
    auto& v = v_[pi];
    for (size_t i = 0; i < p->size(); ++i) {
      const double g = p->grad[i];
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g;
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p->value[i] -= lr_ * (mhat / (std::sqrt(vhat) + eps_) +
                            weight_decay_ * p->value[i]);
    }
  }
}

std::vector<int> argmax_rows(const Tensor& logits) {
  const size_t n = logits.rows(), k = logits.row_size();
  std::vector<int> out(n);
  for (size_t i = 0; i < n; ++i) {
    const double* row = logits.row(i);
    int best = 0;
    for (size_t j = 1; j < k; ++j) {
      if (row[j] > row[best]) best = static_cast<int>(j);
    }
    out[i] = best;
  }
  return out;
}

}  // namespace semcom::nn
