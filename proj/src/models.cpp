#include "ecgforge/models.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ecgforge::models {

using namespace ecgforge::ad;

ModelKind parse_model_kind(const std::string& s) {
  if (s == "fcn") return ModelKind::fcn;
  if (s == "resnet") return ModelKind::resnet;
  if (s == "lstm" || s == "lstm_final") return ModelKind::lstm_final;
  if (s == "lstm-joint" || s == "lstm_joint") return ModelKind::lstm_joint;
  throw ConfigError("unknown model kind: " + s);
}

std::string model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::fcn: return "fcn";
    case ModelKind::resnet: return "resnet";
    case ModelKind::lstm_final: return "lstm_final";
    case ModelKind::lstm_joint: return "lstm_joint";
  }
  return "?";
}

void ModelSpec::validate() const {
  if (input_length < 2) throw ConfigError("input_length must be >= 2");
  if (channels == 0) throw ConfigError("channels must be positive");
  if (num_classes < 2) throw ConfigError("num_classes must be >= 2");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) throw ConfigError("dropout_rate must be in [0,1)");
  if (kind == ModelKind::fcn) {
    if (kernels.empty()) throw ConfigError("fcn needs at least one kernel size");
    std::size_t len = input_length;
    for (std::size_t i = 0; i < kernels.size(); ++i) {
      if (kernels[i] == 0) throw ConfigError("kernel size must be positive");
      if (len < 2) throw ConfigError("input too short for the configured pooling depth");
      len /= 2;
    }
    if (filters == 0) throw ConfigError("filters must be positive");
  } else if (kind == ModelKind::resnet) {
    if (filters == 0 || res_kernel == 0 || kernels.empty())
      throw ConfigError("invalid resnet hyperparameters");
    std::size_t len = input_length;
    for (std::size_t i = 1; i < res_blocks; ++i) {
      if (len < 2) throw ConfigError("input too short for the configured resnet depth");
      len /= 2;
    }
  } else {
    if (hidden == 0) throw ConfigError("hidden units must be positive");
  }
}

std::string ModelSpec::manifest() const {
  std::ostringstream os;
  os << "kind = " << model_kind_name(kind) << "\n";
  os << "domain = " << (domain == InputDomain::time ? "time" : "frequency") << "\n";
  os << "input_length = " << input_length << "\n";
  os << "channels = " << channels << "\n";
  os << "num_classes = " << num_classes << "\n";
  os << "filters = " << filters << "\n";
  os << "kernels = ";
  for (std::size_t i = 0; i < kernels.size(); ++i) os << (i ? "," : "") << kernels[i];
  os << "\n";
  os << "res_blocks = " << res_blocks << "\n";
  os << "res_kernel = " << res_kernel << "\n";
  os << "hidden = " << hidden << "\n";
  os << "dropout_rate = " << dropout_rate << "\n";
  return os.str();
}

ModelSpec ModelSpec::from_manifest(const std::string& text) {
  ModelSpec spec;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key == "kind") spec.kind = parse_model_kind(val);
    else if (key == "domain")
      spec.domain = val == "frequency" ? InputDomain::frequency : InputDomain::time;
    else if (key == "input_length") spec.input_length = std::stoul(val);
    else if (key == "channels") spec.channels = std::stoul(val);
    else if (key == "num_classes") spec.num_classes = std::stoul(val);
    else if (key == "filters") spec.filters = std::stoul(val);
    else if (key == "kernels") {
      spec.kernels.clear();
      std::stringstream ks(val);
      std::string tok;
      while (std::getline(ks, tok, ',')) spec.kernels.push_back(std::stoul(tok));
    } else if (key == "res_blocks") spec.res_blocks = std::stoul(val);
    else if (key == "res_kernel") spec.res_kernel = std::stoul(val);
    else if (key == "hidden") spec.hidden = std::stoul(val);
    else if (key == "dropout_rate") spec.dropout_rate = std::stod(val);
  }
  return spec;
}

InputBnLayer::InputBnLayer(std::size_t channels)
    : Layer(LayerKind::input_bn),
      gamma(make_var({channels}, std::vector<double>(channels, 1.0))),
      beta(make_var({channels})),
      running_mean(channels, 0.0),
      running_var(channels, 1.0) {}

VarPtr InputBnLayer::forward(const VarPtr& x, bool train, Rng&) {
  if (!train) return batchnorm_eval(x, gamma, beta, running_mean, running_var, eps);
  std::vector<double> bm, bv;
  auto y = batchnorm_train(x, gamma, beta, bm, bv, eps);
  for (std::size_t c = 0; c < running_mean.size(); ++c) {
    running_mean[c] = momentum * running_mean[c] + (1.0 - momentum) * bm[c];
    running_var[c] = momentum * running_var[c] + (1.0 - momentum) * bv[c];
  }
  return y;
}

ConvLayer::ConvLayer(std::size_t k, std::size_t cin, std::size_t cout, Rng& rng)
    : Layer(LayerKind::conv),
      kernels(he_init({k, cin, cout}, k * cin, rng)),
      bias(make_var({cout})) {}

VarPtr ConvLayer::forward(const VarPtr& x, bool, Rng&) { return conv1d(x, kernels, bias); }

DenseLayer::DenseLayer(std::size_t n, std::size_t m, Rng& rng)
    : Layer(LayerKind::dense), w(he_init({n, m}, n, rng)), b(make_var({m})) {}

ResidualBlock::ResidualBlock(std::size_t k, std::size_t filters, bool down, Rng& rng)
    : Layer(LayerKind::residual), downsample(down) {
  conv1 = std::make_shared<ConvLayer>(k, filters, filters, rng);
  conv2 = std::make_shared<ConvLayer>(k, filters, filters, rng);
  if (down) projection = std::make_shared<ConvLayer>(1, filters, filters, rng);
}

VarPtr ResidualBlock::forward(const VarPtr& x, bool train, Rng& rng) {
  auto branch = conv2->forward(ad::elu(conv1->forward(ad::elu(x), train, rng)), train, rng);
  VarPtr skip = x;
  if (downsample) {
    branch = ad::maxpool2(branch);
    skip = ad::maxpool2(projection->forward(x, train, rng));
  }
  return ad::add(skip, branch);
}

LstmLayer::LstmLayer(std::size_t input_dim, std::size_t hidden_units, Rng& rng)
    : Layer(LayerKind::lstm), hidden(hidden_units) {
  w.wx = he_init({input_dim, 4 * hidden}, input_dim, rng);
  w.wh = he_init({hidden, 4 * hidden}, hidden, rng);
  w.b = make_var({4 * hidden});
  for (std::size_t i = 0; i < hidden; ++i) w.b->val[hidden + i] = 1.0;  // forget bias
}

std::vector<VarPtr> LstmLayer::unroll(const VarPtr& x) {
  const std::size_t B = x->shape[0], L = x->shape[1], C = x->shape[2];
  std::vector<VarPtr> hs;
  hs.reserve(L);
  LstmState s{make_var({B, hidden}, false), make_var({B, hidden}, false)};
  for (std::size_t t = 0; t < L; ++t) {
    // view of timestep t as [B x C]
    auto xt = make_var({B, C});
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t c = 0; c < C; ++c) xt->val[b * C + c] = x->val[(b * L + t) * C + c];
    xt->parents = {x};
    xt->backward_fn = [x, t, B, L, C](Var& self) {
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t c = 0; c < C; ++c)
          x->grad[(b * L + t) * C + c] += self.grad[b * C + c];
    };
    s = lstm_step(xt, s, w);
    hs.push_back(s.h);
  }
  return hs;
}

VarPtr LstmLayer::forward(const VarPtr& x, bool, Rng&) { return unroll(x).back(); }

TimeDistributedDense::TimeDistributedDense(std::size_t n, std::size_t m, Rng& rng)
    : Layer(LayerKind::td_dense), w(he_init({n, m}, n, rng)), b(make_var({m})) {}

VarPtr TimeDistributedDense::apply_step(const VarPtr& h_t) { return ad::dense(h_t, w, b); }

VarPtr TimeDistributedDense::forward(const VarPtr& x, bool, Rng&) {
  throw ConfigError("time-distributed dense is applied per step by the lstm_joint path");
}

namespace {

// stack per-step [B x m] tensors into [B x T x m]
VarPtr stack_time(const std::vector<VarPtr>& steps) {
  const std::size_t T = steps.size();
  const std::size_t B = steps[0]->shape[0], m = steps[0]->shape[1];
  auto y = make_var({B, T, m});
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t j = 0; j < m; ++j)
        y->val[(b * T + t) * m + j] = steps[t]->val[b * m + j];
  y->parents.assign(steps.begin(), steps.end());
  y->backward_fn = [steps, T, B, m](Var& self) {
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t j = 0; j < m; ++j)
          steps[t]->grad[b * m + j] += self.grad[(b * T + t) * m + j];
  };
  return y;
}

}  // namespace

InputBnLayer* Model::input_bn() const {
  for (const auto& l : layers)
    if (l->kind == LayerKind::input_bn) return static_cast<InputBnLayer*>(l.get());
  return nullptr;
}

ForwardResult Model::forward(const std::vector<double>& batch, std::size_t batch_size,
                             bool train, Rng& rng) {
  const std::size_t L = spec.input_length, C = spec.channels;
  if (batch.size() != batch_size * L * C)
    throw ShapeError("forward: batch does not match model input shape");
  ForwardResult r;
  r.input = make_var({batch_size, L, C}, batch);

  if (spec.kind == ModelKind::fcn || spec.kind == ModelKind::resnet) {
    VarPtr h = r.input;
    for (const auto& l : layers) h = l->forward(h, train, rng);
    r.logits = h;
    return r;
  }

  // recurrent path: layers = [input_bn, lstm, dropout, head, (pred)]
  auto bn = layers[0]->forward(r.input, train, rng);
  auto* lstm = static_cast<LstmLayer*>(layers[1].get());
  auto hs = lstm->unroll(bn);
  auto dropped = layers[2]->forward(hs.back(), train, rng);
  r.logits = layers[3]->forward(dropped, train, rng);

  if (spec.kind == ModelKind::lstm_joint) {
    auto* pred = static_cast<TimeDistributedDense*>(layers[4].get());
    std::vector<VarPtr> preds;
    for (std::size_t t = 0; t + 1 < hs.size(); ++t) preds.push_back(pred->apply_step(hs[t]));
    r.pred_seq = stack_time(preds);
    // detached target: the normalized input shifted one step ahead
    auto target = make_var({batch_size, L - 1, C}, false);
    for (std::size_t b = 0; b < batch_size; ++b)
      for (std::size_t t = 0; t + 1 < L; ++t)
        for (std::size_t c = 0; c < C; ++c)
          target->val[(b * (L - 1) + t) * C + c] = bn->val[(b * L + t + 1) * C + c];
    r.pred_target = target;
  }
  return r;
}

std::vector<double> Model::predict(const std::vector<double>& batch, std::size_t batch_size) {
  Rng dummy(0);
  auto out = forward(batch, batch_size, false, dummy);
  auto probs = ad::softmax(out.logits);
  return probs->val;
}

namespace {

void reg(std::vector<Parameter>& params, const std::string& name, const VarPtr& v) {
  params.emplace_back(name, v);
}

}  // namespace

std::shared_ptr<Model> build_model(const ModelSpec& spec, std::uint64_t init_seed) {
  spec.validate();
  auto model = std::make_shared<Model>();
  model->spec = spec;
  Rng rng(init_seed);
  auto& layers = model->layers;
  auto& params = model->params;

  auto bn = std::make_shared<InputBnLayer>(spec.channels);
  layers.push_back(bn);
  reg(params, "input_bn.gamma", bn->gamma);
  reg(params, "input_bn.beta", bn->beta);

  switch (spec.kind) {
    case ModelKind::fcn: {
      std::size_t cin = spec.channels;
      for (std::size_t i = 0; i < spec.kernels.size(); ++i) {
        auto conv = std::make_shared<ConvLayer>(spec.kernels[i], cin, spec.filters, rng);
        layers.push_back(conv);
        const std::string p = "conv" + std::to_string(i + 1);
        reg(params, p + ".kernels", conv->kernels);
        reg(params, p + ".bias", conv->bias);
        layers.push_back(std::make_shared<EluLayer>());
        layers.push_back(std::make_shared<MaxPoolLayer>());
        cin = spec.filters;
      }
      layers.push_back(std::make_shared<GapLayer>());
      layers.push_back(std::make_shared<DropoutLayer>(spec.dropout_rate));
      auto head = std::make_shared<DenseLayer>(spec.filters, spec.num_classes, rng);
      layers.push_back(head);
      reg(params, "head.w", head->w);
      reg(params, "head.b", head->b);
      break;
    }
    case ModelKind::resnet: {
      auto stem = std::make_shared<ConvLayer>(spec.kernels[0], spec.channels, spec.filters, rng);
      layers.push_back(stem);
      reg(params, "stem.kernels", stem->kernels);
      reg(params, "stem.bias", stem->bias);
      for (std::size_t i = 0; i < spec.res_blocks; ++i) {
        auto block = std::make_shared<ResidualBlock>(spec.res_kernel, spec.filters, i >= 1, rng);
        layers.push_back(block);
        const std::string p = "block" + std::to_string(i + 1);
        reg(params, p + ".conv1.kernels", block->conv1->kernels);
        reg(params, p + ".conv1.bias", block->conv1->bias);
        reg(params, p + ".conv2.kernels", block->conv2->kernels);
        reg(params, p + ".conv2.bias", block->conv2->bias);
        if (block->projection) {
          reg(params, p + ".projection.kernels", block->projection->kernels);
          reg(params, p + ".projection.bias", block->projection->bias);
        }
      }
      layers.push_back(std::make_shared<EluLayer>());
      layers.push_back(std::make_shared<GapLayer>());
      layers.push_back(std::make_shared<DropoutLayer>(spec.dropout_rate));
      auto head = std::make_shared<DenseLayer>(spec.filters, spec.num_classes, rng);
      layers.push_back(head);
      reg(params, "head.w", head->w);
      reg(params, "head.b", head->b);
      break;
    }
    case ModelKind::lstm_final:
    case ModelKind::lstm_joint: {
      auto lstm = std::make_shared<LstmLayer>(spec.channels, spec.hidden, rng);
      layers.push_back(lstm);
      reg(params, "lstm.wx", lstm->w.wx);
      reg(params, "lstm.wh", lstm->w.wh);
      reg(params, "lstm.b", lstm->w.b);
      layers.push_back(std::make_shared<DropoutLayer>(spec.dropout_rate));
      auto head = std::make_shared<DenseLayer>(spec.hidden, spec.num_classes, rng);
      layers.push_back(head);
      reg(params, "head.w", head->w);
      reg(params, "head.b", head->b);
      if (spec.kind == ModelKind::lstm_joint) {
        auto pred = std::make_shared<TimeDistributedDense>(spec.hidden, spec.channels, rng);
        layers.push_back(pred);
        reg(params, "pred.w", pred->w);
        reg(params, "pred.b", pred->b);
      }
      break;
    }
  }
  return model;
}

std::vector<double> ensemble_predict(const Ensemble& ensemble,
                                     const std::vector<double>& batch,
                                     std::size_t batch_size) {
  if (ensemble.members.empty()) throw ConfigError("ensemble has no members");
  const auto& spec0 = ensemble.members[0]->spec;
  for (const auto& m : ensemble.members)
    if (m->spec.kind != spec0.kind || m->spec.input_length != spec0.input_length ||
        m->spec.channels != spec0.channels || m->spec.num_classes != spec0.num_classes)
      throw ConfigError("ensemble members have mismatched specs");
  std::vector<double> acc;
  for (const auto& m : ensemble.members) {
    auto p = m->predict(batch, batch_size);
    if (acc.empty()) acc.assign(p.size(), 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) acc[i] += p[i];
  }
  const double inv = 1.0 / static_cast<double>(ensemble.members.size());
  for (auto& x : acc) x *= inv;
  return acc;
}

}  // namespace ecgforge::models
