#pragma once

// Minimal deterministic neural network stack used by the codec, the privacy
// mechanisms, the simulated and real inversion adversaries, and the MI
// critic. Layers cache their forward inputs and implement explicit backward
// passes; gemm-bound work goes through semcom::kernels. Everything is double
// precision so the finite-difference gradient suite can run on the same code
// path as training.

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "semcom/rng.hpp"
#include "semcom/tensor.hpp"

namespace semcom::nn {

struct ParamTensor {
  std::string name;
  std::vector<size_t> shape;
  std::vector<double> value;
  std::vector<double> grad;

  size_t size() const { return value.size(); }
  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
};

class Layer {
 public:
  virtual ~Layer() = default;
  // train=true caches whatever backward needs.
  virtual Tensor forward(const Tensor& x, bool train) = 0;
  virtual Tensor backward(const Tensor& grad_out) = 0;
  virtual std::vector<ParamTensor*> params() { return {}; }
  virtual void init(Rng& rng) {}
  virtual std::string kind() const = 0;
  virtual std::vector<size_t> out_shape(const std::vector<size_t>& in) const = 0;
  // Multiply-add count of one forward pass for the given input shape,
  // counting a multiply-add as 2 flops.
  virtual long long forward_flops(const std::vector<size_t>& in) const { return 0; }
  virtual nlohmann::json describe() const;
};

class Linear : public Layer {
 public:
  Linear(size_t in, size_t out);
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& gy) override;
  std::vector<ParamTensor*> params() override { return {&w_, &b_}; }
  void init(Rng& rng) override;
  std::string kind() const override { return "linear"; }
  std::vector<size_t> out_shape(const std::vector<size_t>& in) const override;
  long long forward_flops(const std::vector<size_t>& in) const override;
  nlohmann::json describe() const override;

  ParamTensor w_, b_;  // w: (out, in)
  size_t in_, out_;

 private:
  Tensor x_;
};

class Conv2d : public Layer {
 public:
  Conv2d(size_t cin, size_t cout, int ksize, int stride, int pad);
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& gy) override;
  std::vector<ParamTensor*> params() override { return {&w_, &b_}; }
  void init(Rng& rng) override;
  std::string kind() const override { return "conv2d"; }
  std::vector<size_t> out_shape(const std::vector<size_t>& in) const override;
  long long forward_flops(const std::vector<size_t>& in) const override;
  nlohmann::json describe() const override;

  ParamTensor w_, b_;  // w: (cout, cin*k*k)
  size_t cin_, cout_;
  int k_, stride_, pad_;

 private:
  Tensor x_;
};

// Doubles H and W by pixel replication; used by decoder-style networks.
class NearestUpsample2x : public Layer {
 public:
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& gy) override;
  std::string kind() const override { return "upsample2x"; }
  std::vector<size_t> out_shape(const std::vector<size_t>& in) const override;

 private:
  std::vector<size_t> in_shape_;
};

class ReLU : public Layer {
 public:
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& gy) override;
  std::string kind() const override { return "relu"; }
  std::vector<size_t> out_shape(const std::vector<size_t>& in) const override { return in; }

 private:
  Tensor x_;
};

class LeakyReLU : public Layer {
 public:
  explicit LeakyReLU(double slope = 0.2) : slope_(slope) {}
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& gy) override;
  std::string kind() const override { return "leaky_relu"; }
  std::vector<size_t> out_shape(const std::vector<size_t>& in) const override { return in; }
  nlohmann::json describe() const override;

 private:
  double slope_;
  Tensor x_;
};

class Sigmoid : public Layer {
 public:
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& gy) override;
  std::string kind() const override { return "sigmoid"; }
  std::vector<size_t> out_shape(const std::vector<size_t>& in) const override { return in; }

 private:
  Tensor y_;
};

class Elu : public Layer {
 public:
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& gy) override;
  std::string kind() const override { return "elu"; }
  std::vector<size_t> out_shape(const std::vector<size_t>& in) const override { return in; }

 private:
  Tensor x_;
};

// (n, c, h, w) -> (n, c*h*w)
class Flatten : public Layer {
 public:
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& gy) override;
  std::string kind() const override { return "flatten"; }
  std::vector<size_t> out_shape(const std::vector<size_t>& in) const override;

 private:
  std::vector<size_t> in_shape_;
};

// (n, d) -> (n, c, h, w) with d == c*h*w
class Reshape : public Layer {
 public:
  Reshape(size_t c, size_t h, size_t w) : c_(c), h_(h), w_(w) {}
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& gy) override;
  std::string kind() const override { return "reshape"; }
  std::vector<size_t> out_shape(const std::vector<size_t>& in) const override;
  nlohmann::json describe() const override;

 private:
  size_t c_, h_, w_;
  std::vector<size_t> in_shape_;
};

// Scales each row to unit average power per complex symbol: for a length-d
// row x, y = x * sqrt(d/2) / ||x||_2. The transmit-side power constraint is
// part of the training graph, so this needs a real backward pass.
class RowPowerNorm : public Layer {
 public:
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& gy) override;
  std::string kind() const override { return "row_power_norm"; }
  std::vector<size_t> out_shape(const std::vector<size_t>& in) const override { return in; }

 private:
  Tensor x_;
  std::vector<double> norm_;
};

class Sequential {
 public:
  Sequential() = default;
  Sequential(Sequential&&) = default;
  Sequential& operator=(Sequential&&) = default;

  Sequential& add(std::unique_ptr<Layer> l) {
    layers_.push_back(std::move(l));
    return *this;
  }
  template <typename L, typename... Args>
  Sequential& emplace(Args&&... args) {
    layers_.push_back(std::make_unique<L>(std::forward<Args>(args)...));
    return *this;
  }

  Tensor forward(const Tensor& x, bool train = false);
  Tensor backward(const Tensor& gy);
  std::vector<ParamTensor*> params();
  void zero_grad();
  void init(uint64_t seed);

  size_t param_count();
  long long forward_flops(std::vector<size_t> in_shape) const;
  std::vector<size_t> out_shape(std::vector<size_t> in_shape) const;
  nlohmann::json describe() const;

  std::vector<std::unique_ptr<Layer>>& layers() { return layers_; }
  const std::vector<std::unique_ptr<Layer>>& layers() const { return layers_; }

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

struct LossGrad {
  double loss = 0.0;
  Tensor grad;
};

// Mean cross-entropy with integrated softmax over (n, k) logits.
LossGrad softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels);

// Mean binary cross-entropy on (n, 1) logits with {0,1} labels.
LossGrad bce_with_logits(const Tensor& logits, const std::vector<int>& labels);

// Mean squared error over all elements; grad is w.r.t. pred.
LossGrad mse_loss(const Tensor& pred, const Tensor& target);

// KL( N(mu, diag(exp(logvar))) || N(0, I) ), summed over feature dims and
// averaged over the batch. Returns gradients for both inputs.
struct KlGrad {
  double loss = 0.0;
  Tensor grad_mu;
  Tensor grad_logvar;
};
KlGrad kl_unit_gaussian(const Tensor& mu, const Tensor& logvar);

class Adam {
 public:
  Adam(std::vector<ParamTensor*> params, double lr, double beta1 = 0.9,
       double beta2 = 0.999, double eps = 1e-8, double weight_decay = 0.0);
  void step();
  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }

 private:
  std::vector<ParamTensor*> params_;
  std::vector<std::vector<double>> m_, v_;
  double lr_, beta1_, beta2_, eps_, weight_decay_;
  long long t_ = 0;
};

// Argmax per row of an (n, k) tensor.
std::vector<int> argmax_rows(const Tensor& logits);

}  // namespace semcom::nn
