#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ecgforge/autodiff.hpp"
#include "ecgforge/windowing.hpp"

namespace ecgforge::models {

using ad::Rng;
using ad::VarPtr;

enum class ModelKind { fcn, resnet, lstm_final, lstm_joint };
enum class InputDomain { time, frequency };

ModelKind parse_model_kind(const std::string& s);
std::string model_kind_name(ModelKind k);

struct ModelSpec {
  ModelKind kind = ModelKind::fcn;
  InputDomain domain = InputDomain::time;
  std::size_t input_length = 192;  // 129 for frequency domain
  std::size_t channels = 8;
  std::size_t num_classes = 2;
  std::size_t filters = 128;
  std::vector<std::size_t> kernels{8, 5, 5, 3};  // fcn; resnet uses kernels[0] for the stem
  std::size_t res_blocks = 3;
  std::size_t res_kernel = 5;
  std::size_t hidden = 256;  // lstm
  double dropout_rate = 0.5;

  void validate() const;
  std::string manifest() const;  // key = value lines
  static ModelSpec from_manifest(const std::string& text);
};

enum class LayerKind {
  input_bn, conv, act_elu, act_relu, maxpool2, gap, dense, dropout, residual, lstm, td_dense
};

struct Layer {
  LayerKind kind;
  explicit Layer(LayerKind k) : kind(k) {}
  virtual ~Layer() = default;
  virtual VarPtr forward(const VarPtr& x, bool train, Rng& rng) = 0;
};

struct InputBnLayer : Layer {
  VarPtr gamma, beta;
  std::vector<double> running_mean, running_var;
  double momentum = 0.9;
  double eps = 1e-5;
  explicit InputBnLayer(std::size_t channels);
  VarPtr forward(const VarPtr& x, bool train, Rng& rng) override;
};

struct ConvLayer : Layer {
  VarPtr kernels, bias;
  ConvLayer(std::size_t k, std::size_t cin, std::size_t cout, Rng& rng);
  VarPtr forward(const VarPtr& x, bool train, Rng& rng) override;
};

struct EluLayer : Layer {
  EluLayer() : Layer(LayerKind::act_elu) {}
  VarPtr forward(const VarPtr& x, bool, Rng&) override { return ad::elu(x); }
};

struct ReluLayer : Layer {
  ReluLayer() : Layer(LayerKind::act_relu) {}
  VarPtr forward(const VarPtr& x, bool, Rng&) override { return ad::relu(x); }
};

struct MaxPoolLayer : Layer {
  MaxPoolLayer() : Layer(LayerKind::maxpool2) {}
  VarPtr forward(const VarPtr& x, bool, Rng&) override { return ad::maxpool2(x); }
};

struct GapLayer : Layer {
  GapLayer() : Layer(LayerKind::gap) {}
  VarPtr forward(const VarPtr& x, bool, Rng&) override { return ad::global_avg_pool(x); }
};

struct DenseLayer : Layer {
  VarPtr w, b;
  DenseLayer(std::size_t n, std::size_t m, Rng& rng);
  VarPtr forward(const VarPtr& x, bool, Rng&) override { return ad::dense(x, w, b); }
};

struct DropoutLayer : Layer {
  double rate;
  explicit DropoutLayer(double r) : Layer(LayerKind::dropout), rate(r) {}
  VarPtr forward(const VarPtr& x, bool train, Rng& rng) override {
    return ad::dropout(x, rate, train, rng);
  }
};

/// Pre-activation residual block: out = skip(x) + conv(elu(conv(elu(x)))).
/// Downsampling blocks pool both paths and project the skip with a 1x1 conv.
struct ResidualBlock : Layer {
  bool downsample;
  std::shared_ptr<ConvLayer> conv1, conv2;
  std::shared_ptr<ConvLayer> projection;  // only when downsampling
  ResidualBlock(std::size_t k, std::size_t filters, bool down, Rng& rng);
  VarPtr forward(const VarPtr& x, bool train, Rng& rng) override;
};

/// Single LSTM cell unrolled over the full input length.
struct LstmLayer : Layer {
  ad::LstmWeights w;
  std::size_t hidden;
  LstmLayer(std::size_t input_dim, std::size_t hidden_units, Rng& rng);
  /// final hidden state [B x H]
  VarPtr forward(const VarPtr& x, bool train, Rng& rng) override;
  /// all hidden states, each [B x H]
  std::vector<VarPtr> unroll(const VarPtr& x);
};

/// Shared dense layer applied at every timestep: [B x L x H] -> [B x L x m].
struct TimeDistributedDense : Layer {
  VarPtr w, b;
  TimeDistributedDense(std::size_t n, std::size_t m, Rng& rng);
  VarPtr forward(const VarPtr& x, bool, Rng&) override;
  VarPtr apply_step(const VarPtr& h_t);  // [B x H] -> [B x m]
};

struct ForwardResult {
  VarPtr logits;          // [B x K]
  VarPtr pred_seq;        // lstm_joint only: [B x (L-1) x C] next-step predictions
  VarPtr pred_target;     // lstm_joint only: normalized input shifted by one step
  VarPtr input;           // the leaf the batch was loaded into
};

class Model {
 public:
  ModelSpec spec;
  std::vector<std::shared_ptr<Layer>> layers;
  std::vector<ad::Parameter> params;
  std::vector<double> epoch_loss_log;

  ForwardResult forward(const std::vector<double>& batch, std::size_t batch_size,
                        bool train, Rng& rng);
  /// Eval-mode class probabilities, rows on the simplex.
  std::vector<double> predict(const std::vector<double>& batch, std::size_t batch_size);

  InputBnLayer* input_bn() const;
};

std::shared_ptr<Model> build_model(const ModelSpec& spec, std::uint64_t init_seed);

struct Ensemble {
  std::vector<std::shared_ptr<Model>> members;
};

std::vector<double> ensemble_predict(const Ensemble& ensemble,
                                     const std::vector<double>& batch,
                                     std::size_t batch_size);

}  // namespace ecgforge::models
