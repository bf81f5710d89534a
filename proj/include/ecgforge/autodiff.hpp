#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "ecgforge/errors.hpp"

namespace ecgforge::ad {

using Rng = std::mt19937_64;
using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& s);

/// A node in the computation graph. Leaf nodes carry data only;
/// interior nodes keep their parents alive and know how to push
/// their gradient back to them.
class Var {
 public:
  Shape shape;
  std::vector<double> val;
  std::vector<double> grad;
  bool requires_grad = true;
  std::vector<std::shared_ptr<Var>> parents;
  std::function<void(Var&)> backward_fn;

  std::size_t size() const { return val.size(); }
  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
};

using VarPtr = std::shared_ptr<Var>;

VarPtr make_var(Shape shape, bool requires_grad = true);
VarPtr make_var(Shape shape, std::vector<double> data, bool requires_grad = true);

/// Reverse sweep from `root` (grad seeded with 1 everywhere).
void backward(const VarPtr& root);

// ---- elementwise ----
VarPtr add(const VarPtr& a, const VarPtr& b);
VarPtr sub(const VarPtr& a, const VarPtr& b);
VarPtr mul(const VarPtr& a, const VarPtr& b);
VarPtr scale(const VarPtr& a, double c);

enum class Activation { elu, relu, softmax };
VarPtr elu(const VarPtr& x);
VarPtr relu(const VarPtr& x);
VarPtr sigmoid(const VarPtr& x);
VarPtr tanh_op(const VarPtr& x);
/// Softmax over the last axis of a [B x K] tensor.
VarPtr softmax(const VarPtr& x);
VarPtr activation(const VarPtr& x, Activation kind);

// ---- linear algebra ----
/// x: [B x n], w: [n x m], b: [m] -> [B x m]
VarPtr dense(const VarPtr& x, const VarPtr& w, const VarPtr& b);
/// Columns [start, start+len) of a [B x M] tensor.
VarPtr slice_cols(const VarPtr& x, std::size_t start, std::size_t len);

// ---- convolution / pooling, layout [B x L x C] ----
/// Same-padded cross-correlation. kernels: [k x Cin x Cout], bias: [Cout].
/// Even k pads (k-1)/2 left and k/2 right.
VarPtr conv1d(const VarPtr& x, const VarPtr& kernels, const VarPtr& bias);
/// Non-overlapping width-2 max windows; an odd tail sample is dropped.
VarPtr maxpool2(const VarPtr& x);
/// Per-channel mean over time: [B x L x C] -> [B x C].
VarPtr global_avg_pool(const VarPtr& x);

// ---- normalization / regularization ----
/// Normalizes per channel with batch statistics (biased variance, eps floor),
/// then applies learnable gamma/beta. Batch and time axes pool together.
VarPtr batchnorm_train(const VarPtr& x, const VarPtr& gamma, const VarPtr& beta,
                       std::vector<double>& batch_mean_out,
                       std::vector<double>& batch_var_out, double eps = 1e-5);
VarPtr batchnorm_eval(const VarPtr& x, const VarPtr& gamma, const VarPtr& beta,
                      const std::vector<double>& running_mean,
                      const std::vector<double>& running_var, double eps = 1e-5);
/// Inverted dropout; identity when rate == 0.
VarPtr dropout(const VarPtr& x, double rate, bool train, Rng& rng);

// ---- recurrent ----
struct LstmWeights {
  VarPtr wx;  // [n x 4H], gate order (i, f, g, o)
  VarPtr wh;  // [H x 4H]
  VarPtr b;   // [4H]
};
struct LstmState {
  VarPtr h;
  VarPtr c;
};
LstmState lstm_step(const VarPtr& x_t, const LstmState& state,
                    const LstmWeights& w);

// ---- losses ----
/// Mean negative log-likelihood of the true class, stable log-sum-exp.
VarPtr crossentropy_loss(const VarPtr& logits, const std::vector<std::size_t>& labels);
VarPtr mse_loss(const VarPtr& pred, const VarPtr& target);
/// Sum over the batch of the pre-softmax score of `cls`.
VarPtr select_class_score(const VarPtr& logits, std::size_t cls);

// ---- optimization ----
struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct Parameter {
  std::string name;
  VarPtr var;
  std::vector<double> m;
  std::vector<double> v;
  std::size_t t = 0;

  explicit Parameter(std::string n, VarPtr v_)
      : name(std::move(n)), var(std::move(v_)), m(var->size(), 0.0),
        v(var->size(), 0.0) {}
};

void adam_step(std::vector<Parameter>& params, const AdamConfig& cfg);
/// Global-norm clipping across all parameter gradients.
void clip_gradients(std::vector<Parameter>& params, double max_norm);
void zero_grads(std::vector<Parameter>& params);

VarPtr he_init(const Shape& shape, std::size_t fan_in, Rng& rng);

}  // namespace ecgforge::ad
