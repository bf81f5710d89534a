#include "ecgforge/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace ecgforge::ad {

std::size_t shape_size(const Shape& s) {
  std::size_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

VarPtr make_var(Shape shape, bool requires_grad) {
  auto v = std::make_shared<Var>();
  v->shape = std::move(shape);
  v->val.assign(shape_size(v->shape), 0.0);
  v->grad.assign(v->val.size(), 0.0);
  v->requires_grad = requires_grad;
  return v;
}

VarPtr make_var(Shape shape, std::vector<double> data, bool requires_grad) {
  auto v = make_var(std::move(shape), requires_grad);
  if (data.size() != v->val.size()) throw ShapeError("make_var: data size does not match shape");
  v->val = std::move(data);
  return v;
}

void backward(const VarPtr& root) {
  // iterative post-order DFS -> topological order
  std::vector<Var*> topo;
  std::unordered_set<Var*> seen;
  std::vector<std::pair<VarPtr, std::size_t>> stack;
  stack.emplace_back(root, 0);
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      auto& p = node->parents[idx++];
      if (seen.insert(p.get()).second) stack.emplace_back(p, 0);
    } else {
      topo.push_back(node.get());
      stack.pop_back();
    }
  }
  for (Var* v : topo) v->zero_grad();
  std::fill(root->grad.begin(), root->grad.end(), 1.0);
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    if ((*it)->backward_fn) (*it)->backward_fn(**it);
  }
}

namespace {

void check_same_shape(const VarPtr& a, const VarPtr& b, const char* op) {
  if (a->shape != b->shape) throw ShapeError(std::string(op) + ": shape mismatch");
}

VarPtr unary(const VarPtr& x, std::function<double(double)> f,
             std::function<double(double, double)> df_times_g) {
  auto y = make_var(x->shape);
  for (std::size_t i = 0; i < x->size(); ++i) y->val[i] = f(x->val[i]);
  y->parents = {x};
  y->backward_fn = [x, df = std::move(df_times_g)](Var& self) {
    for (std::size_t i = 0; i < self.size(); ++i)
      x->grad[i] += df(x->val[i], self.val[i]) * self.grad[i];
  };
  return y;
}

}  // namespace

VarPtr add(const VarPtr& a, const VarPtr& b) {
  check_same_shape(a, b, "add");
  auto y = make_var(a->shape);
  for (std::size_t i = 0; i < a->size(); ++i) y->val[i] = a->val[i] + b->val[i];
  y->parents = {a, b};
  y->backward_fn = [a, b](Var& self) {
    for (std::size_t i = 0; i < self.size(); ++i) {
      a->grad[i] += self.grad[i];
      b->grad[i] += self.grad[i];
    }
  };
  return y;
}

VarPtr sub(const VarPtr& a, const VarPtr& b) {
  check_same_shape(a, b, "sub");
  auto y = make_var(a->shape);
  for (std::size_t i = 0; i < a->size(); ++i) y->val[i] = a->val[i] - b->val[i];
  y->parents = {a, b};
  y->backward_fn = [a, b](Var& self) {
    for (std::size_t i = 0; i < self.size(); ++i) {
      a->grad[i] += self.grad[i];
      b->grad[i] -= self.grad[i];
    }
  };
  return y;
}

VarPtr mul(const VarPtr& a, const VarPtr& b) {
  check_same_shape(a, b, "mul");
  auto y = make_var(a->shape);
  for (std::size_t i = 0; i < a->size(); ++i) y->val[i] = a->val[i] * b->val[i];
  y->parents = {a, b};
  y->backward_fn = [a, b](Var& self) {
    for (std::size_t i = 0; i < self.size(); ++i) {
      a->grad[i] += b->val[i] * self.grad[i];
      b->grad[i] += a->val[i] * self.grad[i];
    }
  };
  return y;
}

VarPtr scale(const VarPtr& a, double c) {
  auto y = make_var(a->shape);
  for (std::size_t i = 0; i < a->size(); ++i) y->val[i] = c * a->val[i];
  y->parents = {a};
  y->backward_fn = [a, c](Var& self) {
    for (std::size_t i = 0; i < self.size(); ++i) a->grad[i] += c * self.grad[i];
  };
  return y;
}

VarPtr elu(const VarPtr& x) {
  // alpha = 1
  return unary(
      x, [](double v) { return v > 0 ? v : std::expm1(v); },
      [](double v, double y) { return v > 0 ? 1.0 : y + 1.0; });
}

VarPtr relu(const VarPtr& x) {
  return unary(
      x, [](double v) { return v > 0 ? v : 0.0; },
      [](double v, double) { return v > 0 ? 1.0 : 0.0; });
}

VarPtr sigmoid(const VarPtr& x) {
  return unary(
      x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
      [](double, double y) { return y * (1.0 - y); });
}

VarPtr tanh_op(const VarPtr& x) {
  return unary(
      x, [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; });
}

VarPtr softmax(const VarPtr& x) {
  if (x->shape.size() != 2) throw ShapeError("softmax: expected [B x K]");
  const std::size_t b = x->shape[0], k = x->shape[1];
  auto y = make_var(x->shape);
  for (std::size_t i = 0; i < b; ++i) {
    const double* row = &x->val[i * k];
    double mx = *std::max_element(row, row + k);
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      y->val[i * k + j] = std::exp(row[j] - mx);
      sum += y->val[i * k + j];
    }
    for (std::size_t j = 0; j < k; ++j) y->val[i * k + j] /= sum;
  }
  y->parents = {x};
  y->backward_fn = [x, b, k](Var& self) {
    for (std::size_t i = 0; i < b; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < k; ++j)
        dot += self.grad[i * k + j] * self.val[i * k + j];
      for (std::size_t j = 0; j < k; ++j)
        x->grad[i * k + j] += self.val[i * k + j] * (self.grad[i * k + j] - dot);
    }
  };
  return y;
}

VarPtr activation(const VarPtr& x, Activation kind) {
  switch (kind) {
    case Activation::elu: return elu(x);
    case Activation::relu: return relu(x);
    case Activation::softmax: return softmax(x);
  }
  throw ConfigError("activation: unknown kind");
}

VarPtr dense(const VarPtr& x, const VarPtr& w, const VarPtr& b) {
  if (x->shape.size() != 2 || w->shape.size() != 2 || b->shape.size() != 1)
    throw ShapeError("dense: expected x [B x n], w [n x m], b [m]");
  const std::size_t bs = x->shape[0], n = x->shape[1], m = w->shape[1];
  if (w->shape[0] != n || b->shape[0] != m) throw ShapeError("dense: dimension mismatch");
  auto y = make_var({bs, m});
  for (std::size_t i = 0; i < bs; ++i) {
    double* out = &y->val[i * m];
    for (std::size_t j = 0; j < m; ++j) out[j] = b->val[j];
    for (std::size_t p = 0; p < n; ++p) {
      const double xv = x->val[i * n + p];
      if (xv == 0.0) continue;
      const double* wr = &w->val[p * m];
      for (std::size_t j = 0; j < m; ++j) out[j] += xv * wr[j];
    }
  }
  y->parents = {x, w, b};
  y->backward_fn = [x, w, b, bs, n, m](Var& self) {
    for (std::size_t i = 0; i < bs; ++i) {
      const double* g = &self.grad[i * m];
      for (std::size_t j = 0; j < m; ++j) b->grad[j] += g[j];
      for (std::size_t p = 0; p < n; ++p) {
        const double xv = x->val[i * n + p];
        const double* wr = &w->val[p * m];
        double* wg = &w->grad[p * m];
        double acc = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
          acc += wr[j] * g[j];
          wg[j] += xv * g[j];
        }
        x->grad[i * n + p] += acc;
      }
    }
  };
  return y;
}

VarPtr slice_cols(const VarPtr& x, std::size_t start, std::size_t len) {
  if (x->shape.size() != 2) throw ShapeError("slice_cols: expected [B x M]");
  const std::size_t bs = x->shape[0], m = x->shape[1];
  if (start + len > m) throw ShapeError("slice_cols: out of range");
  auto y = make_var({bs, len});
  for (std::size_t i = 0; i < bs; ++i)
    for (std::size_t j = 0; j < len; ++j)
      y->val[i * len + j] = x->val[i * m + start + j];
  y->parents = {x};
  y->backward_fn = [x, start, len, bs, m](Var& self) {
    for (std::size_t i = 0; i < bs; ++i)
      for (std::size_t j = 0; j < len; ++j)
        x->grad[i * m + start + j] += self.grad[i * len + j];
  };
  return y;
}

VarPtr conv1d(const VarPtr& x, const VarPtr& kernels, const VarPtr& bias) {
  if (x->shape.size() != 3 || kernels->shape.size() != 3 || bias->shape.size() != 1)
    throw ShapeError("conv1d: expected x [B x L x Cin], kernels [k x Cin x Cout], bias [Cout]");
  const std::size_t bs = x->shape[0], len = x->shape[1], cin = x->shape[2];
  const std::size_t k = kernels->shape[0], cout = kernels->shape[2];
  if (kernels->shape[1] != cin || bias->shape[0] != cout)
    throw ShapeError("conv1d: channel mismatch");
  if (k < 1) throw ShapeError("conv1d: empty kernel");
  const std::ptrdiff_t pad_left = static_cast<std::ptrdiff_t>((k - 1) / 2);

  auto y = make_var({bs, len, cout});
  for (std::size_t b = 0; b < bs; ++b) {
    for (std::size_t t = 0; t < len; ++t) {
      double* out = &y->val[(b * len + t) * cout];
      for (std::size_t co = 0; co < cout; ++co) out[co] = bias->val[co];
      for (std::size_t dk = 0; dk < k; ++dk) {
        const std::ptrdiff_t ti = static_cast<std::ptrdiff_t>(t) - pad_left +
                                  static_cast<std::ptrdiff_t>(dk);
        if (ti < 0 || ti >= static_cast<std::ptrdiff_t>(len)) continue;
        const double* xin = &x->val[(b * len + static_cast<std::size_t>(ti)) * cin];
        const double* wk = &kernels->val[dk * cin * cout];
        for (std::size_t ci = 0; ci < cin; ++ci) {
          const double xv = xin[ci];
          if (xv == 0.0) continue;
          const double* wr = &wk[ci * cout];
          for (std::size_t co = 0; co < cout; ++co) out[co] += xv * wr[co];
        }
      }
    }
  }
  y->parents = {x, kernels, bias};
  y->backward_fn = [x, kernels, bias, bs, len, cin, k, cout, pad_left](Var& self) {
    for (std::size_t b = 0; b < bs; ++b) {
      for (std::size_t t = 0; t < len; ++t) {
        const double* g = &self.grad[(b * len + t) * cout];
        for (std::size_t co = 0; co < cout; ++co) bias->grad[co] += g[co];
        for (std::size_t dk = 0; dk < k; ++dk) {
          const std::ptrdiff_t ti = static_cast<std::ptrdiff_t>(t) - pad_left +
                                    static_cast<std::ptrdiff_t>(dk);
          if (ti < 0 || ti >= static_cast<std::ptrdiff_t>(len)) continue;
          const std::size_t off = (b * len + static_cast<std::size_t>(ti)) * cin;
          const double* wk = &kernels->val[dk * cin * cout];
          double* wkg = &kernels->grad[dk * cin * cout];
          for (std::size_t ci = 0; ci < cin; ++ci) {
            const double xv = x->val[off + ci];
            const double* wr = &wk[ci * cout];
            double* wg = &wkg[ci * cout];
            double acc = 0.0;
            for (std::size_t co = 0; co < cout; ++co) {
              acc += wr[co] * g[co];
              wg[co] += xv * g[co];
            }
            x->grad[off + ci] += acc;
          }
        }
      }
    }
  };
  return y;
}

VarPtr maxpool2(const VarPtr& x) {
  if (x->shape.size() != 3) throw ShapeError("maxpool2: expected [B x L x C]");
  const std::size_t bs = x->shape[0], len = x->shape[1], c = x->shape[2];
  if (len < 2) throw ShapeError("maxpool2: length must be >= 2");
  const std::size_t lo = len / 2;
  auto y = make_var({bs, lo, c});
  // remember winners for the backward pass
  auto arg = std::make_shared<std::vector<std::uint8_t>>(bs * lo * c);
  for (std::size_t b = 0; b < bs; ++b)
    for (std::size_t t = 0; t < lo; ++t)
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double v0 = x->val[(b * len + 2 * t) * c + ch];
        const double v1 = x->val[(b * len + 2 * t + 1) * c + ch];
        const bool second = v1 > v0;
        (*arg)[(b * lo + t) * c + ch] = second;
        y->val[(b * lo + t) * c + ch] = second ? v1 : v0;
      }
  y->parents = {x};
  y->backward_fn = [x, arg, bs, lo, len, c](Var& self) {
    for (std::size_t b = 0; b < bs; ++b)
      for (std::size_t t = 0; t < lo; ++t)
        for (std::size_t ch = 0; ch < c; ++ch) {
          const std::size_t widx = (*arg)[(b * lo + t) * c + ch];
          x->grad[(b * len + 2 * t + widx) * c + ch] += self.grad[(b * lo + t) * c + ch];
        }
  };
  return y;
}

VarPtr global_avg_pool(const VarPtr& x) {
  if (x->shape.size() != 3) throw ShapeError("global_avg_pool: expected [B x L x C]");
  const std::size_t bs = x->shape[0], len = x->shape[1], c = x->shape[2];
  if (len == 0) throw ShapeError("global_avg_pool: empty time axis");
  auto y = make_var({bs, c});
  for (std::size_t b = 0; b < bs; ++b)
    for (std::size_t t = 0; t < len; ++t)
      for (std::size_t ch = 0; ch < c; ++ch)
        y->val[b * c + ch] += x->val[(b * len + t) * c + ch] / static_cast<double>(len);
  y->parents = {x};
  y->backward_fn = [x, bs, len, c](Var& self) {
    const double inv = 1.0 / static_cast<double>(len);
    for (std::size_t b = 0; b < bs; ++b)
      for (std::size_t t = 0; t < len; ++t)
        for (std::size_t ch = 0; ch < c; ++ch)
          x->grad[(b * len + t) * c + ch] += inv * self.grad[b * c + ch];
  };
  return y;
}

VarPtr batchnorm_train(const VarPtr& x, const VarPtr& gamma, const VarPtr& beta,
                       std::vector<double>& batch_mean_out,
                       std::vector<double>& batch_var_out, double eps) {
  if (x->shape.size() != 3) throw ShapeError("batchnorm: expected [B x L x C]");
  const std::size_t bs = x->shape[0], len = x->shape[1], c = x->shape[2];
  if (gamma->size() != c || beta->size() != c) throw ShapeError("batchnorm: parameter size");
  const std::size_t n = bs * len;
  if (n < 2) throw ShapeError("batchnorm: need at least 2 samples in train mode");

  auto mean = std::make_shared<std::vector<double>>(c, 0.0);
  auto var = std::make_shared<std::vector<double>>(c, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t ch = 0; ch < c; ++ch) (*mean)[ch] += x->val[i * c + ch];
  for (std::size_t ch = 0; ch < c; ++ch) (*mean)[ch] /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double d = x->val[i * c + ch] - (*mean)[ch];
      (*var)[ch] += d * d;
    }
  for (std::size_t ch = 0; ch < c; ++ch) (*var)[ch] /= static_cast<double>(n);
  batch_mean_out = *mean;
  batch_var_out = *var;

  auto xhat = std::make_shared<std::vector<double>>(n * c);
  auto y = make_var(x->shape);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double xh = (x->val[i * c + ch] - (*mean)[ch]) / std::sqrt((*var)[ch] + eps);
      (*xhat)[i * c + ch] = xh;
      y->val[i * c + ch] = gamma->val[ch] * xh + beta->val[ch];
    }
  y->parents = {x, gamma, beta};
  y->backward_fn = [x, gamma, beta, mean, var, xhat, n, c, eps](Var& self) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double istd = 1.0 / std::sqrt((*var)[ch] + eps);
      double sum_dy = 0.0, sum_dy_xhat = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double dy = self.grad[i * c + ch];
        sum_dy += dy;
        sum_dy_xhat += dy * (*xhat)[i * c + ch];
      }
      gamma->grad[ch] += sum_dy_xhat;
      beta->grad[ch] += sum_dy;
      const double g = gamma->val[ch];
      const double invn = 1.0 / static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double dy = self.grad[i * c + ch];
        x->grad[i * c + ch] +=
            g * istd * (dy - invn * sum_dy - (*xhat)[i * c + ch] * invn * sum_dy_xhat);
      }
    }
  };
  return y;
}

VarPtr batchnorm_eval(const VarPtr& x, const VarPtr& gamma, const VarPtr& beta,
                      const std::vector<double>& running_mean,
                      const std::vector<double>& running_var, double eps) {
  if (x->shape.size() != 3) throw ShapeError("batchnorm: expected [B x L x C]");
  const std::size_t c = x->shape[2];
  if (running_mean.size() != c || running_var.size() != c)
    throw ShapeError("batchnorm: running stats size");
  const std::size_t n = x->shape[0] * x->shape[1];
  auto y = make_var(x->shape);
  std::vector<double> scale(c), shift(c);
  for (std::size_t ch = 0; ch < c; ++ch) {
    scale[ch] = gamma->val[ch] / std::sqrt(running_var[ch] + eps);
    shift[ch] = beta->val[ch] - scale[ch] * running_mean[ch];
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t ch = 0; ch < c; ++ch)
      y->val[i * c + ch] = scale[ch] * x->val[i * c + ch] + shift[ch];
  y->parents = {x, gamma, beta};
  auto sc = std::make_shared<std::vector<double>>(std::move(scale));
  auto mu = std::make_shared<std::vector<double>>(running_mean);
  auto vr = std::make_shared<std::vector<double>>(running_var);
  y->backward_fn = [x, gamma, beta, sc, mu, vr, n, c, eps](Var& self) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double dy = self.grad[i * c + ch];
        x->grad[i * c + ch] += (*sc)[ch] * dy;
        const double xh = (x->val[i * c + ch] - (*mu)[ch]) / std::sqrt((*vr)[ch] + eps);
        gamma->grad[ch] += dy * xh;
        beta->grad[ch] += dy;
      }
  };
  return y;
}

VarPtr dropout(const VarPtr& x, double rate, bool train, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) throw ConfigError("dropout: rate must be in [0, 1)");
  if (!train || rate == 0.0) {
    auto y = make_var(x->shape, x->val);
    y->parents = {x};
    y->backward_fn = [x](Var& self) {
      for (std::size_t i = 0; i < self.size(); ++i) x->grad[i] += self.grad[i];
    };
    return y;
  }
  auto mask = std::make_shared<std::vector<double>>(x->size());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double keep_scale = 1.0 / (1.0 - rate);
  for (auto& m : *mask) m = (u(rng) < rate) ? 0.0 : keep_scale;
  auto y = make_var(x->shape);
  for (std::size_t i = 0; i < x->size(); ++i) y->val[i] = x->val[i] * (*mask)[i];
  y->parents = {x};
  y->backward_fn = [x, mask](Var& self) {
    for (std::size_t i = 0; i < self.size(); ++i)
      x->grad[i] += (*mask)[i] * self.grad[i];
  };
  return y;
}

LstmState lstm_step(const VarPtr& x_t, const LstmState& state, const LstmWeights& w) {
  const std::size_t h = state.h->shape[1];
  if (w.wx->shape[1] != 4 * h || w.wh->shape[0] != h || w.wh->shape[1] != 4 * h ||
      w.b->shape[0] != 4 * h)
    throw ShapeError("lstm_step: gate weight shapes do not conform");
  auto zero_bias = make_var({4 * h}, false);
  auto gates = add(dense(x_t, w.wx, w.b), dense(state.h, w.wh, zero_bias));
  auto i_g = sigmoid(slice_cols(gates, 0, h));
  auto f_g = sigmoid(slice_cols(gates, h, h));
  auto g_g = tanh_op(slice_cols(gates, 2 * h, h));
  auto o_g = sigmoid(slice_cols(gates, 3 * h, h));
  auto c_new = add(mul(f_g, state.c), mul(i_g, g_g));
  auto h_new = mul(o_g, tanh_op(c_new));
  return {h_new, c_new};
}

VarPtr crossentropy_loss(const VarPtr& logits, const std::vector<std::size_t>& labels) {
  if (logits->shape.size() != 2) throw ShapeError("crossentropy: expected [B x K]");
  const std::size_t bs = logits->shape[0], k = logits->shape[1];
  if (labels.size() != bs) throw ShapeError("crossentropy: label count mismatch");
  for (auto l : labels)
    if (l >= k) throw LabelError("crossentropy: label out of range");
  auto y = make_var({1});
  auto probs = std::make_shared<std::vector<double>>(bs * k);
  double loss = 0.0;
  for (std::size_t i = 0; i < bs; ++i) {
    const double* row = &logits->val[i * k];
    const double mx = *std::max_element(row, row + k);
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) sum += std::exp(row[j] - mx);
    const double lse = mx + std::log(sum);
    loss -= row[labels[i]] - lse;
    for (std::size_t j = 0; j < k; ++j) (*probs)[i * k + j] = std::exp(row[j] - lse);
  }
  y->val[0] = loss / static_cast<double>(bs);
  y->parents = {logits};
  auto labels_copy = std::make_shared<std::vector<std::size_t>>(labels);
  y->backward_fn = [logits, probs, labels_copy, bs, k](Var& self) {
    const double g = self.grad[0] / static_cast<double>(bs);
    for (std::size_t i = 0; i < bs; ++i)
      for (std::size_t j = 0; j < k; ++j) {
        double d = (*probs)[i * k + j] - (j == (*labels_copy)[i] ? 1.0 : 0.0);
        logits->grad[i * k + j] += g * d;
      }
  };
  return y;
}

VarPtr mse_loss(const VarPtr& pred, const VarPtr& target) {
  check_same_shape(pred, target, "mse");
  auto y = make_var({1});
  const double n = static_cast<double>(pred->size());
  double acc = 0.0;
  for (std::size_t i = 0; i < pred->size(); ++i) {
    const double d = pred->val[i] - target->val[i];
    acc += d * d;
  }
  y->val[0] = acc / n;
  y->parents = {pred, target};
  y->backward_fn = [pred, target, n](Var& self) {
    const double g = 2.0 * self.grad[0] / n;
    for (std::size_t i = 0; i < pred->size(); ++i) {
      const double d = pred->val[i] - target->val[i];
      pred->grad[i] += g * d;
      target->grad[i] -= g * d;
    }
  };
  return y;
}

VarPtr select_class_score(const VarPtr& logits, std::size_t cls) {
  if (logits->shape.size() != 2) throw ShapeError("select_class_score: expected [B x K]");
  const std::size_t bs = logits->shape[0], k = logits->shape[1];
  if (cls >= k) throw LabelError("select_class_score: class out of range");
  auto y = make_var({1});
  for (std::size_t i = 0; i < bs; ++i) y->val[0] += logits->val[i * k + cls];
  y->parents = {logits};
  y->backward_fn = [logits, cls, bs, k](Var& self) {
    for (std::size_t i = 0; i < bs; ++i) logits->grad[i * k + cls] += self.grad[0];
  };
  return y;
}

void adam_step(std::vector<Parameter>& params, const AdamConfig& cfg) {
  for (auto& p : params)
    for (double g : p.var->grad)
      if (!std::isfinite(g)) throw NumericError("adam_step: non-finite gradient for " + p.name);
  for (auto& p : params) {
    p.t += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(p.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(p.t));
    for (std::size_t i = 0; i < p.var->size(); ++i) {
      const double g = p.var->grad[i];
      p.m[i] = cfg.beta1 * p.m[i] + (1.0 - cfg.beta1) * g;
      p.v[i] = cfg.beta2 * p.v[i] + (1.0 - cfg.beta2) * g * g;
      const double mhat = p.m[i] / bc1;
      const double vhat = p.v[i] / bc2;
      p.var->val[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

void clip_gradients(std::vector<Parameter>& params, double max_norm) {
  if (max_norm <= 0.0) throw ConfigError("clip_gradients: max_norm must be positive");
  double sq = 0.0;
  for (auto& p : params)
    for (double g : p.var->grad) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm <= max_norm) return;
  const double s = max_norm / norm;
  for (auto& p : params)
    for (auto& g : p.var->grad) g *= s;
}

void zero_grads(std::vector<Parameter>& params) {
  for (auto& p : params) p.var->zero_grad();
}

VarPtr he_init(const Shape& shape, std::size_t fan_in, Rng& rng) {
  if (fan_in == 0) throw ConfigError("he_init: fan_in must be positive");
  auto v = make_var(shape);
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
  for (auto& x : v->val) x = dist(rng);
  return v;
}

}  // namespace ecgforge::ad
