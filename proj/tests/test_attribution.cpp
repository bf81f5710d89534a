#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "ecgforge/attribution.hpp"

using namespace ecgforge;
using attribution::AttributionMap;

namespace {

windowing::Window random_window(std::size_t len, std::size_t ch, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  windowing::Window w;
  w.length = len;
  w.channels = ch;
  w.data.resize(len * ch);
  for (auto& v : w.data) v = d(rng);
  return w;
}

// gap -> dense with zero bias: a purely linear classifier
std::shared_ptr<models::Model> linear_model(std::size_t len, std::size_t ch,
                                            std::uint64_t seed) {
  auto m = std::make_shared<models::Model>();
  m->spec.kind = models::ModelKind::fcn;
  m->spec.input_length = len;
  m->spec.channels = ch;
  m->spec.num_classes = 2;
  ad::Rng rng(seed);
  m->layers.push_back(std::make_shared<models::GapLayer>());
  auto dense = std::make_shared<models::DenseLayer>(ch, 2, rng);
  for (auto& v : dense->b->val) v = 0.0;
  m->layers.push_back(dense);
  return m;
}

// conv -> relu -> maxpool -> gap -> dense, every bias zero
std::shared_ptr<models::Model> relu_model(std::size_t len, std::size_t ch,
                                          std::uint64_t seed) {
  auto m = std::make_shared<models::Model>();
  m->spec.kind = models::ModelKind::fcn;
  m->spec.input_length = len;
  m->spec.channels = ch;
  m->spec.num_classes = 2;
  ad::Rng rng(seed);
  const std::size_t filters = 5;
  auto conv = std::make_shared<models::ConvLayer>(3, ch, filters, rng);
  for (auto& v : conv->bias->val) v = 0.0;
  m->layers.push_back(conv);
  m->layers.push_back(std::make_shared<models::ReluLayer>());
  m->layers.push_back(std::make_shared<models::MaxPoolLayer>());
  m->layers.push_back(std::make_shared<models::GapLayer>());
  auto dense = std::make_shared<models::DenseLayer>(filters, 2, rng);
  for (auto& v : dense->b->val) v = 0.0;
  m->layers.push_back(dense);
  return m;
}

double max_abs_diff(const AttributionMap& a, const AttributionMap& b) {
  REQUIRE(a.scores.size() == b.scores.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.scores.size(); ++i)
    m = std::max(m, std::fabs(a.scores[i] - b.scores[i]));
  return m;
}

double target_score(models::Model& m, const windowing::Window& w, std::size_t cls) {
  ad::Rng rng(0);
  auto out = m.forward(w.data, 1, false, rng);
  return out.logits->val[cls];
}

}  // namespace

TEST_CASE("method names round-trip") {
  using attribution::Method;
  for (auto m : {Method::grad_x_input, Method::integrated_gradients, Method::epsilon_lrp})
    CHECK(attribution::parse_method(attribution::method_name(m)) == m);
  CHECK(attribution::parse_method("ig") == Method::integrated_gradients);
  CHECK(attribution::parse_method("lrp") == Method::epsilon_lrp);
  CHECK_THROWS_AS(attribution::parse_method("shapley"), ConfigError);
}

TEST_CASE("all three methods agree exactly on a linear model") {
  auto m = linear_model(12, 3, 7);
  auto w = random_window(12, 3, 8);
  auto gx = attribution::grad_x_input(*m, w, 1);
  auto ig = attribution::integrated_gradients(*m, w, 1, {64});
  auto lrp = attribution::epsilon_lrp(*m, w, 1, 1e-12);
  CHECK(max_abs_diff(gx, ig) < 1e-10);
  CHECK(max_abs_diff(gx, lrp) < 1e-10);
  CHECK(max_abs_diff(ig, lrp) < 1e-10);

  // against the closed form: score = sum_c mean_t(x) * w_c -> x_tc * w_c / L
  auto* dense = static_cast<models::DenseLayer*>(m->layers[1].get());
  for (std::size_t t = 0; t < 12; ++t)
    for (std::size_t c = 0; c < 3; ++c) {
      const double want = w.at(t, c) * dense->w->val[c * 2 + 1] / 12.0;
      CHECK(gx.at(t, c) == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("integrated gradients completeness") {
  models::ModelSpec spec;
  spec.kind = models::ModelKind::fcn;
  spec.input_length = 32;
  spec.channels = 3;
  spec.filters = 4;
  auto m = models::build_model(spec, 3);
  auto w = random_window(32, 3, 4);
  auto ig = attribution::integrated_gradients(*m, w, 1, {256});
  double total = 0.0;
  for (double s : ig.scores) total += s;
  windowing::Window zero = w;
  std::fill(zero.data.begin(), zero.data.end(), 0.0);
  const double delta = target_score(*m, w, 1) - target_score(*m, zero, 1);
  CHECK(std::fabs(total - delta) / std::max(1e-12, std::fabs(delta)) < 0.01);
}

TEST_CASE("epsilon-LRP equals gradient-times-input on a bias-free ReLU net") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    auto m = relu_model(16, 2, seed);
    auto w = random_window(16, 2, seed + 10);
    auto gx = attribution::grad_x_input(*m, w, 0);
    auto lrp = attribution::epsilon_lrp(*m, w, 0, 1e-9);
    CHECK(max_abs_diff(gx, lrp) < 1e-6);
  }
}

TEST_CASE("LRP rejects unsupported architectures") {
  models::ModelSpec spec;
  spec.kind = models::ModelKind::lstm_final;
  spec.input_length = 16;
  spec.channels = 2;
  spec.hidden = 4;
  auto m = models::build_model(spec, 1);
  auto w = random_window(16, 2, 5);
  CHECK_THROWS_AS(attribution::epsilon_lrp(*m, w, 0), UnsupportedLayerError);

  spec.kind = models::ModelKind::resnet;
  spec.filters = 4;
  spec.res_blocks = 2;
  auto r = models::build_model(spec, 1);
  CHECK_THROWS_AS(attribution::epsilon_lrp(*r, w, 0), UnsupportedLayerError);
}

TEST_CASE("shape and class guards") {
  auto m = linear_model(12, 3, 7);
  auto wrong = random_window(12, 2, 8);
  CHECK_THROWS_AS(attribution::grad_x_input(*m, wrong, 0), ShapeError);
  auto w = random_window(12, 3, 8);
  CHECK_THROWS_AS(attribution::grad_x_input(*m, w, 5), LabelError);
}

TEST_CASE("channel normalization uses one global scale") {
  AttributionMap map;
  map.length = 2;
  map.channels = 2;
  map.scores = {1.0, -4.0, 2.0, 0.5};
  auto n = attribution::normalize_channels(map);
  CHECK(n.normalization == doctest::Approx(0.25));
  CHECK(n.scores[0] == doctest::Approx(0.25));
  CHECK(n.scores[1] == doctest::Approx(-1.0));
  CHECK(n.scores[2] == doctest::Approx(0.5));

  AttributionMap zero;
  zero.length = 1;
  zero.channels = 2;
  zero.scores = {0.0, 0.0};
  auto z = attribution::normalize_channels(zero);
  CHECK(z.scores == std::vector<double>{0.0, 0.0});
  CHECK(z.normalization == 1.0);
}

TEST_CASE("scores csv") {
  AttributionMap map;
  map.length = 2;
  map.channels = 2;
  map.scores = {1.0, 2.0, 3.0, 4.0};
  auto csv = attribution::scores_csv(map, {"i", "v2"});
  std::istringstream is(csv);
  std::string line;
  std::getline(is, line);
  CHECK(line == "time,channel,score");
  std::getline(is, line);
  CHECK(line == "0,i,1");
  std::getline(is, line);
  CHECK(line == "0,v2,2");
  std::getline(is, line);
  CHECK(line == "1,i,3");
}

TEST_CASE("svg rendering with diverging palette") {
  auto w = random_window(8, 2, 3);
  AttributionMap map;
  map.length = 8;
  map.channels = 2;
  map.scores.assign(16, 0.1);
  map.scores[4] = 1.0;    // strongest positive -> pure red
  map.scores[9] = -1.0;   // strongest negative -> pure blue
  auto dir = std::filesystem::temp_directory_path() / "ecgforge_attr_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "f.svg").string();
  attribution::render_figure(w, map, {"i", "ii"}, {true, true}, path);
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  const auto svg = ss.str();
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("rgb(255,0,0)") != std::string::npos);
  CHECK(svg.find("rgb(0,0,255)") != std::string::npos);
  CHECK(svg.find(">ii<") != std::string::npos);
  // two channel panels -> two polylines
  std::size_t polylines = 0, pos = 0;
  while ((pos = svg.find("<polyline", pos)) != std::string::npos) {
    ++polylines;
    ++pos;
  }
  CHECK(polylines == 2);

  // a channel marked unused gets no colored background
  const auto path2 = (dir / "g.svg").string();
  attribution::render_figure(w, map, {"i", "ii"}, {true, false}, path2);
  std::ifstream f2(path2);
  std::stringstream ss2;
  ss2 << f2.rdbuf();
  const auto svg2 = ss2.str();
  std::size_t rects = 0, rects2 = 0;
  for (pos = 0; (pos = svg.find("<rect", pos)) != std::string::npos; ++pos) ++rects;
  for (pos = 0; (pos = svg2.find("<rect", pos)) != std::string::npos; ++pos) ++rects2;
  CHECK(rects2 == rects - 8);  // the 8 cells of channel 1 disappear
  std::filesystem::remove_all(dir);
}
