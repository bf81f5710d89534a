#include "ecgforge/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ecgforge::attribution {

using models::LayerKind;
using models::Model;

Method parse_method(const std::string& s) {
  if (s == "grad_x_input" || s == "gradxinput") return Method::grad_x_input;
  if (s == "integrated_gradients" || s == "ig") return Method::integrated_gradients;
  if (s == "epsilon_lrp" || s == "lrp") return Method::epsilon_lrp;
  throw ConfigError("unknown attribution method: " + s);
}

std::string method_name(Method m) {
  switch (m) {
    case Method::grad_x_input: return "grad_x_input";
    case Method::integrated_gradients: return "integrated_gradients";
    case Method::epsilon_lrp: return "epsilon_lrp";
  }
  return "?";
}

namespace {

void check_window(const Model& model, const windowing::Window& window) {
  if (window.length != model.spec.input_length || window.channels != model.spec.channels)
    throw ShapeError("attribution: window does not match model input shape");
}

// gradient of the pre-softmax target score wrt the input, eval mode
std::vector<double> input_gradient(Model& model, const std::vector<double>& data,
                                   std::size_t target_class) {
  ad::Rng rng(0);
  auto out = model.forward(data, 1, false, rng);
  if (target_class >= model.spec.num_classes)
    throw LabelError("attribution: target class out of range");
  auto score = ad::select_class_score(out.logits, target_class);
  ad::backward(score);
  return out.input->grad;
}

}  // namespace

AttributionMap grad_x_input(Model& model, const windowing::Window& window,
                            std::size_t target_class) {
  check_window(model, window);
  AttributionMap map;
  map.length = window.length;
  map.channels = window.channels;
  map.target_class = target_class;
  map.method = Method::grad_x_input;
  auto grad = input_gradient(model, window.data, target_class);
  map.scores.resize(grad.size());
  for (std::size_t i = 0; i < grad.size(); ++i) map.scores[i] = grad[i] * window.data[i];
  return map;
}

AttributionMap integrated_gradients(Model& model, const windowing::Window& window,
                                    std::size_t target_class, const IgConfig& cfg) {
  check_window(model, window);
  if (cfg.steps < 2) throw ConfigError("integrated_gradients: steps must be >= 2");
  AttributionMap map;
  map.length = window.length;
  map.channels = window.channels;
  map.target_class = target_class;
  map.method = Method::integrated_gradients;
  std::vector<double> avg(window.data.size(), 0.0);
  std::vector<double> scaled(window.data.size());
  for (std::size_t s = 0; s < cfg.steps; ++s) {
    const double alpha = (static_cast<double>(s) + 0.5) / static_cast<double>(cfg.steps);
    for (std::size_t i = 0; i < scaled.size(); ++i) scaled[i] = alpha * window.data[i];
    auto grad = input_gradient(model, scaled, target_class);
    for (std::size_t i = 0; i < avg.size(); ++i) avg[i] += grad[i];
  }
  map.scores.resize(avg.size());
  for (std::size_t i = 0; i < avg.size(); ++i)
    map.scores[i] = avg[i] / static_cast<double>(cfg.steps) * window.data[i];
  return map;
}

namespace {

double stab(double z, double eps) { return z + (z >= 0.0 ? eps : -eps); }

}  // namespace

AttributionMap epsilon_lrp(Model& model, const windowing::Window& window,
                           std::size_t target_class, double eps) {
  check_window(model, window);
  for (const auto& l : model.layers)
    switch (l->kind) {
      case LayerKind::input_bn:
      case LayerKind::conv:
      case LayerKind::act_elu:
      case LayerKind::act_relu:
      case LayerKind::maxpool2:
      case LayerKind::gap:
      case LayerKind::dropout:
      case LayerKind::dense:
        break;
      default:
        throw UnsupportedLayerError("epsilon_lrp: unsupported layer in model");
    }

  // eval forward, keeping every intermediate activation
  ad::Rng rng(0);
  std::vector<ad::VarPtr> acts;
  acts.push_back(ad::make_var({1, window.length, window.channels}, window.data, false));
  for (const auto& l : model.layers)
    acts.push_back(l->forward(acts.back(), false, rng));

  const auto& logits = acts.back();
  if (target_class >= model.spec.num_classes)
    throw LabelError("epsilon_lrp: target class out of range");
  std::vector<double> rel(logits->size(), 0.0);
  rel[target_class] = logits->val[target_class];

  for (std::size_t li = model.layers.size(); li-- > 0;) {
    const auto& layer = model.layers[li];
    const auto& in = acts[li];
    const auto& out = acts[li + 1];
    std::vector<double> rin(in->size(), 0.0);
    switch (layer->kind) {
      case LayerKind::act_elu:
      case LayerKind::act_relu:
      case LayerKind::dropout:
        rin = rel;
        break;
      case LayerKind::dense: {
        auto* d = static_cast<models::DenseLayer*>(layer.get());
        const std::size_t n = d->w->shape[0], m = d->w->shape[1];
        for (std::size_t j = 0; j < m; ++j) {
          if (rel[j] == 0.0) continue;
          const double f = rel[j] / stab(out->val[j], eps);
          for (std::size_t i = 0; i < n; ++i)
            rin[i] += in->val[i] * d->w->val[i * m + j] * f;
        }
        break;
      }
      case LayerKind::conv: {
        auto* cv = static_cast<models::ConvLayer*>(layer.get());
        const std::size_t len = in->shape[1], cin = in->shape[2];
        const std::size_t k = cv->kernels->shape[0], cout = cv->kernels->shape[2];
        const std::ptrdiff_t pad_left = static_cast<std::ptrdiff_t>((k - 1) / 2);
        for (std::size_t t = 0; t < len; ++t)
          for (std::size_t co = 0; co < cout; ++co) {
            const double r = rel[t * cout + co];
            if (r == 0.0) continue;
            const double f = r / stab(out->val[t * cout + co], eps);
            for (std::size_t dk = 0; dk < k; ++dk) {
              const std::ptrdiff_t ti = static_cast<std::ptrdiff_t>(t) - pad_left +
                                        static_cast<std::ptrdiff_t>(dk);
              if (ti < 0 || ti >= static_cast<std::ptrdiff_t>(len)) continue;
              for (std::size_t ci = 0; ci < cin; ++ci)
                rin[static_cast<std::size_t>(ti) * cin + ci] +=
                    in->val[static_cast<std::size_t>(ti) * cin + ci] *
                    cv->kernels->val[(dk * cin + ci) * cout + co] * f;
            }
          }
        break;
      }
      case LayerKind::maxpool2: {
        const std::size_t len = in->shape[1], c = in->shape[2];
        const std::size_t lo = len / 2;
        for (std::size_t t = 0; t < lo; ++t)
          for (std::size_t ch = 0; ch < c; ++ch) {
            const double v0 = in->val[(2 * t) * c + ch];
            const double v1 = in->val[(2 * t + 1) * c + ch];
            const std::size_t widx = v1 > v0 ? 1 : 0;
            rin[(2 * t + widx) * c + ch] += rel[t * c + ch];
          }
        break;
      }
      case LayerKind::gap: {
        const std::size_t len = in->shape[1], c = in->shape[2];
        for (std::size_t ch = 0; ch < c; ++ch) {
          if (rel[ch] == 0.0) continue;
          const double f = rel[ch] / stab(out->val[ch], eps);
          for (std::size_t t = 0; t < len; ++t)
            rin[t * c + ch] += in->val[t * c + ch] / static_cast<double>(len) * f;
        }
        break;
      }
      case LayerKind::input_bn: {
        auto* bn = static_cast<models::InputBnLayer*>(layer.get());
        const std::size_t c = in->shape[2];
        const std::size_t n = in->shape[1];
        for (std::size_t t = 0; t < n; ++t)
          for (std::size_t ch = 0; ch < c; ++ch) {
            const double g = bn->gamma->val[ch] / std::sqrt(bn->running_var[ch] + bn->eps);
            const double z = out->val[t * c + ch];
            rin[t * c + ch] +=
                in->val[t * c + ch] * g * rel[t * c + ch] / stab(z, eps);
          }
        break;
      }
      default:
        throw UnsupportedLayerError("epsilon_lrp: unsupported layer");
    }
    rel = std::move(rin);
  }

  AttributionMap map;
  map.length = window.length;
  map.channels = window.channels;
  map.target_class = target_class;
  map.method = Method::epsilon_lrp;
  map.scores = std::move(rel);
  return map;
}

AttributionMap normalize_channels(AttributionMap map) {
  double mx = 0.0;
  for (double s : map.scores) mx = std::max(mx, std::fabs(s));
  if (mx == 0.0) return map;
  map.normalization = 1.0 / mx;
  for (auto& s : map.scores) s /= mx;
  return map;
}

std::string scores_csv(const AttributionMap& map, const std::vector<std::string>& lead_names) {
  std::ostringstream os;
  os.precision(10);
  os << "time,channel,score\n";
  for (std::size_t t = 0; t < map.length; ++t)
    for (std::size_t c = 0; c < map.channels; ++c) {
      os << t << ",";
      if (c < lead_names.size()) os << lead_names[c];
      else os << c;
      os << "," << map.at(t, c) << "\n";
    }
  return os.str();
}

namespace {

std::string diverging_color(double s) {
  // s in [-1, 1]: blue <- white -> red
  s = std::clamp(s, -1.0, 1.0);
  int r = 255, g = 255, b = 255;
  if (s > 0.0) {
    g = b = static_cast<int>(std::lround(255.0 * (1.0 - s)));
  } else if (s < 0.0) {
    r = g = static_cast<int>(std::lround(255.0 * (1.0 + s)));
  }
  std::ostringstream os;
  os << "rgb(" << r << "," << g << "," << b << ")";
  return os.str();
}

}  // namespace

void render_figure(const windowing::Window& window, const AttributionMap& map,
                   const std::vector<std::string>& lead_names,
                   const std::vector<bool>& used, const std::string& out_path) {
  if (window.length != map.length || window.channels != map.channels)
    throw ShapeError("render_figure: window and map shapes differ");
  const double panel_w = 840.0, panel_h = 90.0, gap = 12.0, left = 60.0, top = 10.0;
  const std::size_t C = window.channels, T = window.length;
  const double total_h = top + C * (panel_h + gap);
  double cmax = 0.0;
  for (double s : map.scores) cmax = std::max(cmax, std::fabs(s));

  std::ofstream f(out_path);
  if (!f) throw DataError("cannot write " + out_path);
  f << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << left + panel_w + 20
    << "\" height=\"" << total_h << "\">\n";
  const double dx = panel_w / static_cast<double>(T);
  for (std::size_t c = 0; c < C; ++c) {
    const double y0 = top + c * (panel_h + gap);
    const bool color = c >= used.size() || used[c];
    f << "<g>\n";
    if (color && cmax > 0.0) {
      for (std::size_t t = 0; t < T; ++t) {
        const double s = map.at(t, c) / cmax;
        if (s == 0.0) continue;
        f << "<rect x=\"" << left + t * dx << "\" y=\"" << y0 << "\" width=\"" << dx
          << "\" height=\"" << panel_h << "\" fill=\"" << diverging_color(s) << "\"/>\n";
      }
    }
    // channel min/max for the trace
    double lo = window.at(0, c), hi = lo;
    for (std::size_t t = 0; t < T; ++t) {
      lo = std::min(lo, window.at(t, c));
      hi = std::max(hi, window.at(t, c));
    }
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
    f << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1\" points=\"";
    for (std::size_t t = 0; t < T; ++t) {
      const double x = left + (t + 0.5) * dx;
      const double y = y0 + panel_h - (window.at(t, c) - lo) / (hi - lo) * panel_h;
      f << x << "," << y << " ";
    }
    f << "\"/>\n";
    f << "<text x=\"10\" y=\"" << y0 + panel_h / 2 << "\" font-size=\"14\">";
    f << (c < lead_names.size() ? lead_names[c] : std::to_string(c));
    f << "</text>\n";
    f << "</g>\n";
  }
  f << "</svg>\n";
}

}  // namespace ecgforge::attribution
