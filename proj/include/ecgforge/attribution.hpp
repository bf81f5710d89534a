#pragma once

#include <string>
#include <vector>

#include "ecgforge/models.hpp"
#include "ecgforge/windowing.hpp"

namespace ecgforge::attribution {

enum class Method { grad_x_input, integrated_gradients, epsilon_lrp };

Method parse_method(const std::string& s);
std::string method_name(Method m);

struct AttributionMap {
  std::size_t length = 0;
  std::size_t channels = 0;
  std::vector<double> scores;  // [length x channels], signed
  std::size_t target_class = 0;
  Method method = Method::grad_x_input;
  double normalization = 1.0;  // scale applied by normalize_channels

  double at(std::size_t t, std::size_t c) const { return scores[t * channels + c]; }
};

struct IgConfig {
  std::size_t steps = 256;  // zero baseline
};

/// Elementwise (d score_target / d x) * x on the pre-softmax score.
AttributionMap grad_x_input(models::Model& model, const windowing::Window& window,
                            std::size_t target_class);

/// Riemann-midpoint approximation of integrated gradients, zero baseline.
AttributionMap integrated_gradients(models::Model& model, const windowing::Window& window,
                                    std::size_t target_class, const IgConfig& cfg = {});

/// Layer-wise relevance propagation with eps-stabilized denominators,
/// from the target pre-softmax score down to the input. Supports
/// sequential conv/dense/pool/activation/input-bn stacks.
AttributionMap epsilon_lrp(models::Model& model, const windowing::Window& window,
                           std::size_t target_class, double eps = 1e-6);

/// Divide all channels by the single global max |score|.
AttributionMap normalize_channels(AttributionMap map);

std::string scores_csv(const AttributionMap& map, const std::vector<std::string>& lead_names);

/// One panel per channel: signal trace over a red/blue diverging
/// background. Channels with `used[c] == false` are drawn without
/// color-coding.
void render_figure(const windowing::Window& window, const AttributionMap& map,
                   const std::vector<std::string>& lead_names,
                   const std::vector<bool>& used, const std::string& out_path);

}  // namespace ecgforge::attribution
