#include "foa/bias_lab.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "foa/adam.hpp"
#include "foa/image_io.hpp"
#include "foa/parallel.hpp"
#include "foa/plot.hpp"
#include "foa/rng.hpp"

namespace foa {

using nlohmann::json;

BiasInput parse_bias_input(const std::string& s) {
  if (s == "uniform") return BiasInput::Uniform;
  if (s == "noise") return BiasInput::Noise;
  throw std::invalid_argument("unknown input kind '" + s + "' (uniform|noise)");
}

BiasCrop parse_bias_crop(const std::string& s) {
  if (s == "none") return BiasCrop::None;
  if (s == "random") return BiasCrop::Random;
  throw std::invalid_argument("unknown crop policy '" + s + "' (none|random)");
}

namespace {

const char* input_name(BiasInput i) { return i == BiasInput::Uniform ? "uniform" : "noise"; }
const char* crop_name(BiasCrop c) { return c == BiasCrop::None ? "none" : "random"; }

}  // namespace

void BiasExperimentConfig::validate() const {
  if (input_size < 1 || output_size < 1 || bias_size < 1 || bias_size > output_size) {
    throw std::invalid_argument("bias config: sizes must be positive with bias <= output");
  }
  if (input_size % output_size != 0) {
    throw std::invalid_argument("bias config: output size must divide input size");
  }
  if (input_size / output_size != 4) {
    throw std::invalid_argument("bias config: probe nets downsample by exactly 4");
  }
  if ((output_size - bias_size) % 2 != 0) {
    throw std::invalid_argument("bias config: bias square cannot be centred");
  }
  if (receptive_fields.empty()) throw std::invalid_argument("bias config: no receptive fields");
  if (iterations < 1 || batch < 1 || tail < 1 || !(lr > 0) || base_width < 1) {
    throw std::invalid_argument("bias config: iterations, batch, tail, lr and width must be positive");
  }
  if (!(hidden_slope >= 0.0 && hidden_slope < 1.0)) {
    throw std::invalid_argument("bias config: hidden_slope must lie in [0, 1)");
  }
}

BiasExperimentConfig bias_config_from_json(const std::string& text) {
  const json j = json::parse(text);
  BiasExperimentConfig c;
  c.input_size = j.value("input_size", c.input_size);
  c.output_size = j.value("output_size", c.output_size);
  c.bias_size = j.value("bias_size", c.bias_size);
  if (j.contains("input")) c.input = parse_bias_input(j.at("input").get<std::string>());
  c.receptive_fields = j.value("receptive_fields", c.receptive_fields);
  if (j.contains("crops")) {
    c.crops.clear();
    for (const auto& s : j.at("crops")) c.crops.push_back(parse_bias_crop(s.get<std::string>()));
  }
  c.no_padding_arm = j.value("no_padding_arm", c.no_padding_arm);
  c.seed = j.value("seed", c.seed);
  c.iterations = j.value("iterations", c.iterations);
  c.batch = j.value("batch", c.batch);
  c.lr = j.value("lr", c.lr);
  c.base_width = j.value("base_width", c.base_width);
  c.param_budget = j.value("param_budget", c.param_budget);
  c.tail = j.value("tail", c.tail);
  c.hidden_slope = j.value("hidden_slope", c.hidden_slope);
  c.validate();
  return c;
}

std::string bias_config_to_json(const BiasExperimentConfig& c) {
  json crops = json::array();
  for (auto cr : c.crops) crops.push_back(crop_name(cr));
  json j{{"input_size", c.input_size},   {"output_size", c.output_size},
         {"bias_size", c.bias_size},     {"input", input_name(c.input)},
         {"receptive_fields", c.receptive_fields},
         {"crops", crops},               {"no_padding_arm", c.no_padding_arm},
         {"seed", c.seed},               {"iterations", c.iterations},
         {"batch", c.batch},             {"lr", c.lr},
         {"base_width", c.base_width},   {"param_budget", c.param_budget},
         {"tail", c.tail},               {"hidden_slope", c.hidden_slope}};
  return j.dump(2);
}

int min_receptive_field(int input_size, int output_size, int bias_size) {
  if (input_size < 1 || output_size < 1 || bias_size < 0 || bias_size > output_size) {
    throw std::invalid_argument("min_receptive_field: invalid sizes");
  }
  if (input_size % output_size != 0) {
    throw std::invalid_argument("min_receptive_field: output size must divide input size");
  }
  const double half_gap = output_size / 2.0 - bias_size / 2.0;
  return static_cast<int>(std::lround(2.0 * half_gap * (input_size / output_size)));
}

long long ProbeNetSpec::parameter_count() const {
  long long n = 0;
  for (const auto& l : layers)
    if (l.kind == ProbeLayer::Conv) n += static_cast<long long>(l.k) * l.k * l.in * l.out + l.out;
  return n;
}

int ProbeNetSpec::receptive_field() const {
  int rf = 1, jump = 1;
  for (const auto& l : layers) {
    rf += (l.k - 1) * jump;
    if (l.kind == ProbeLayer::Pool) jump *= l.k;
  }
  return rf;
}

int ProbeNetSpec::downsampling() const {
  int d = 1;
  for (const auto& l : layers)
    if (l.kind == ProbeLayer::Pool) d *= l.k;
  return d;
}

namespace {

// Stage depths (a, b, c) of 3x3 convs at full, half and quarter resolution.
struct Stages {
  int a = 1, b = 1, c = 1;
};

Stages stages_for(int rf) {
  for (int ab = 2; ab <= 6; ++ab)
    for (int a = 1; a < ab; ++a) {
      const int b = ab - a;
      const int rest = rf - 4 - 2 * a - 4 * b;
      if (rest >= 8 && rest % 8 == 0) return {a, b, rest / 8};
    }
  throw std::invalid_argument("build_probe_net: receptive field " + std::to_string(rf) +
                              " not reachable with 3x3 convs and two 2x2 pools");
}

ProbeNetSpec assemble(const Stages& s, int k1, int k2, int w) {
  ProbeNetSpec spec;
  auto conv = [&](int in, int out, int k, bool relu) {
    spec.layers.push_back({ProbeLayer::Conv, in, out, k, relu});
  };
  auto pool = [&](int ch) { spec.layers.push_back({ProbeLayer::Pool, ch, ch, 2, false}); };
  conv(1, k1, 3, true);
  for (int i = 1; i < s.a; ++i) conv(k1, k1, 3, true);
  pool(k1);
  conv(k1, k2, 3, true);
  for (int i = 1; i < s.b; ++i) conv(k2, k2, 3, true);
  pool(k2);
  conv(k2, w, 3, true);
  for (int i = 1; i < s.c; ++i) conv(w, w, 3, true);
  conv(w, 1, 1, false);
  return spec;
}

}  // namespace

ProbeNetSpec build_probe_net(int rf, long long param_budget, int base_width) {
  if (base_width < 1) throw std::invalid_argument("build_probe_net: width must be positive");
  const Stages s = stages_for(rf);
  const int w = base_width;
  if (param_budget <= 0) return assemble(s, w, w, w);

  long long best_err = std::numeric_limits<long long>::max();
  int best_k1 = w, best_k2 = w, best_dev = 0;
  for (int k1 = 1; k1 <= 4 * w; ++k1)
    for (int k2 = 1; k2 <= 4 * w; ++k2) {
      const long long err = std::llabs(assemble(s, k1, k2, w).parameter_count() - param_budget);
      const int dev = std::abs(k1 - w) + std::abs(k2 - w);
      if (err < best_err || (err == best_err && dev < best_dev)) {
        best_err = err;
        best_k1 = k1;
        best_k2 = k2;
        best_dev = dev;
      }
    }
  if (static_cast<double>(best_err) > 0.01 * static_cast<double>(param_budget)) {
    throw std::invalid_argument("build_probe_net: receptive field " + std::to_string(rf) +
                                " cannot meet budget " + std::to_string(param_budget) +
                                " within 1%");
  }
  return assemble(s, best_k1, best_k2, w);
}

long long default_probe_budget(const std::vector<int>& rfs, int base_width) {
  if (rfs.empty()) throw std::invalid_argument("default_probe_budget: no receptive fields");
  return build_probe_net(*std::max_element(rfs.begin(), rfs.end()), 0, base_width)
      .parameter_count();
}

ProbeNet init_probe_net(const ProbeNetSpec& spec, std::uint64_t seed) {
  ProbeNet net;
  net.spec = spec;
  std::mt19937_64 rng(seed);
  for (const auto& l : spec.layers) {
    if (l.kind != ProbeLayer::Conv) continue;
    auto k = Conv3dKernel<float>::zeros(l.out, l.in, l.k, l.k, 1, spec.padding);
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / (l.k * l.k * l.in)));
    for (auto& v : k.weights) v = static_cast<float>(dist(rng));
    net.convs.push_back(std::move(k));
  }
  return net;
}

namespace {

template <typename Scalar>
struct ProbeTrace {
  std::vector<Tensor<Scalar>> inputs;   // input of every layer
  std::vector<Tensor<Scalar>> outputs;  // post-activation output of every layer
  std::vector<std::vector<std::size_t>> argmax;
};

template <typename Scalar>
Tensor<Scalar> run_forward(const ProbeNetSpec& spec, const std::vector<Conv3dKernel<Scalar>>& convs,
                           const Tensor<Scalar>& input, ProbeTrace<Scalar>* trace) {
  Tensor<Scalar> x = input;
  std::size_t ci = 0;
  for (const auto& l : spec.layers) {
    if (trace) trace->inputs.push_back(x);
    if (l.kind == ProbeLayer::Conv) {
      x = conv3d_forward(x, convs.at(ci++));
      if (l.relu) x = spec.slope > 0 ? leaky_relu(x, static_cast<Scalar>(spec.slope)) : relu(x);
      if (trace) trace->argmax.emplace_back();
    } else {
      auto pr = maxpool3d(x, PoolWindow{1, l.k, l.k});
      x = std::move(pr.output);
      if (trace) trace->argmax.push_back(std::move(pr.argmax));
    }
    if (trace) trace->outputs.push_back(x);
  }
  return x;
}

}  // namespace

Tensor<float> probe_forward(const ProbeNet& net, const Tensor<float>& input) {
  return run_forward<float>(net.spec, net.convs, input, nullptr);
}

double probe_mse(const ProbeNet& net, const Tensor<float>& input, const Tensor<float>& target,
                 std::vector<Conv3dGradients<float>>* grads) {
  ProbeTrace<float> trace;
  const Tensor<float> y = run_forward<float>(net.spec, net.convs, input, grads ? &trace : nullptr);
  if (y.shape() != target.shape()) {
    throw std::invalid_argument("probe_mse: output " + y.shape().str() + " vs target " +
                                target.shape().str());
  }
  const double n = static_cast<double>(y.size());
  double loss = 0.0;
  Tensor<float> g(y.shape());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = static_cast<double>(y.data()[i]) - target.data()[i];
    loss += d * d;
    g.data()[i] = static_cast<float>(2.0 * d / n);
  }
  loss /= n;
  if (!grads) return loss;

  grads->assign(net.convs.size(), {});
  std::size_t ci = net.convs.size();
  for (std::size_t li = net.spec.layers.size(); li-- > 0;) {
    const auto& l = net.spec.layers[li];
    if (l.kind == ProbeLayer::Conv) {
      --ci;
      if (l.relu) {
        g = net.spec.slope > 0 ? leaky_relu_backward(trace.outputs[li], g, net.spec.slope)
                               : relu_backward(trace.outputs[li], g);
      }
      auto b = conv3d_backward(trace.inputs[li], net.convs[ci], g);
      (*grads)[ci] = std::move(b.params);
      g = std::move(b.input_grad);
    } else {
      g = maxpool3d_backward(trace.inputs[li].shape(), trace.argmax[li], g);
    }
  }
  return loss;
}

int valid_input_size(const ProbeNetSpec& spec, int output_size) {
  int s = output_size;
  for (auto it = spec.layers.rbegin(); it != spec.layers.rend(); ++it) {
    if (it->kind == ProbeLayer::Conv) s += it->k - 1;
    else s *= it->k;
  }
  return s;
}

int simulate_receptive_field(const ProbeNetSpec& spec) {
  const int d = spec.downsampling();
  const int rf = spec.receptive_field();
  // Large enough that the centre output's field is never clipped by a border.
  const int n = d * ((rf + 4 * d) / d + 1);
  std::vector<Conv3dKernel<double>> convs;
  for (const auto& l : spec.layers) {
    if (l.kind != ProbeLayer::Conv) continue;
    auto k = Conv3dKernel<double>::zeros(l.out, l.in, l.k, l.k, 1, Padding::Same);
    std::fill(k.weights.begin(), k.weights.end(), 1.0 / (l.k * l.k * l.in));
    convs.push_back(std::move(k));
  }
  ProbeNetSpec same = spec;
  same.padding = Padding::Same;
  const int oc = (n / d) / 2;
  const int row = oc * d + (d - 1) / 2;
  int width = 0;
  for (int x = 0; x < n; ++x) {
    Tensor<double> in({1, n, n, 1});
    in(0, row, x, 0) = 1.0;
    const Tensor<double> out = run_forward<double>(same, convs, in, nullptr);
    if (out(0, oc, oc, 0) > 0.0) ++width;
  }
  return width;
}

const BiasArmResult* BiasReport::find(int rf, BiasCrop crop, Padding padding) const {
  for (const auto& a : arms)
    if (a.rf == rf && a.crop == crop && a.padding == padding) return &a;
  return nullptr;
}

FixationMap bias_target(int output_size, int bias_size) {
  FixationMap m(output_size, output_size);
  const int o = (output_size - bias_size) / 2;
  for (int y = o; y < o + bias_size; ++y)
    for (int x = o; x < o + bias_size; ++x) m.at(y, x) = 1.0;
  return m;
}

bool top_pixels_are_center(const FixationMap& map, int n) {
  if (map.height() != map.width() || (map.height() - n) % 2 != 0 || n < 1) return false;
  std::vector<std::size_t> idx(map.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const std::size_t k = static_cast<std::size_t>(n) * n;
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](std::size_t a, std::size_t b) {
    return map[a] > map[b] || (map[a] == map[b] && a < b);
  });
  const int o = (map.height() - n) / 2;
  for (std::size_t i = 0; i < k; ++i) {
    const int y = static_cast<int>(idx[i]) / map.width();
    const int x = static_cast<int>(idx[i]) % map.width();
    if (y < o || y >= o + n || x < o || x >= o + n) return false;
  }
  return true;
}

namespace {

Tensor<float> make_input(BiasInput kind, int size, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  if (kind == BiasInput::Uniform) return Tensor<float>({1, size, size, 1}, u(rng));
  Tensor<float> t({1, size, size, 1});
  for (auto& v : t.data()) v = u(rng);
  return t;
}

Tensor<float> map_tensor(const FixationMap& m) { return m.to_tensor<float>(); }

std::string arm_name(int rf, BiasCrop crop, Padding padding) {
  std::string s = "rf" + std::to_string(rf);
  if (padding == Padding::Valid) return s + "_nopad";
  return s + (crop == BiasCrop::None ? "_nocrop" : "_randomcrop");
}

}  // namespace

BiasArmResult run_bias_arm(const BiasExperimentConfig& cfg, int rf, BiasCrop crop,
                           Padding padding) {
  cfg.validate();
  const long long budget =
      cfg.param_budget > 0 ? cfg.param_budget
                           : default_probe_budget(cfg.receptive_fields, cfg.base_width);
  ProbeNetSpec spec = build_probe_net(rf, budget, cfg.base_width);
  spec.padding = padding;
  spec.slope = static_cast<float>(cfg.hidden_slope);
  const int in_size =
      padding == Padding::Same ? cfg.input_size : valid_input_size(spec, cfg.output_size);

  BiasArmResult r;
  r.name = arm_name(rf, crop, padding);
  r.rf = rf;
  r.crop = crop;
  r.padding = padding;
  r.params = spec.parameter_count();

  const std::uint64_t arm_seed =
      derive_seed(cfg.seed, static_cast<std::uint64_t>(rf) * 4 + static_cast<int>(crop) * 2 +
                                (padding == Padding::Valid ? 1 : 0));
  ProbeNet net = init_probe_net(spec, derive_seed(arm_seed, 0));
  std::mt19937_64 rng(derive_seed(arm_seed, 1));

  const int out = cfg.output_size;
  const Tensor<float> fixed_target = map_tensor(bias_target(out, cfg.bias_size));
  // Random crops are taken from a canvas twice the output size with the
  // square at its centre; the aligned input crop of an i.i.d. canvas is
  // statistically a fresh input, so only the target offset is drawn.
  const FixationMap canvas = bias_target(2 * out, cfg.bias_size);
  std::uniform_int_distribution<int> offset(0, out);

  Adam adam(AdamConfig{cfg.lr, 0.9, 0.999, 1e-8});
  std::vector<float> sum_w, sum_b;
  for (int it = 0; it < cfg.iterations; ++it) {
    std::vector<Tensor<float>> inputs, targets;
    for (int b = 0; b < cfg.batch; ++b) {
      inputs.push_back(make_input(cfg.input, in_size, rng));
      if (crop == BiasCrop::None) {
        targets.push_back(fixed_target);
      } else {
        const int oy = offset(rng), ox = offset(rng);
        Tensor<float> t({1, out, out, 1});
        for (int y = 0; y < out; ++y)
          for (int x = 0; x < out; ++x) t(0, y, x, 0) = static_cast<float>(canvas.at(oy + y, ox + x));
        targets.push_back(std::move(t));
      }
    }
    std::vector<std::vector<Conv3dGradients<float>>> per(cfg.batch);
    std::vector<double> losses(cfg.batch);
    parallel_for(
        cfg.batch, [&](std::size_t b) { losses[b] = probe_mse(net, inputs[b], targets[b], &per[b]); },
        cfg.threads);
    const double loss = std::accumulate(losses.begin(), losses.end(), 0.0) / cfg.batch;
    if (!std::isfinite(loss)) {
      spdlog::warn("bias arm {} diverged at step {}", r.name, it);
      r.diverged = true;
      break;
    }
    r.losses.push_back(loss);

    std::vector<Conv3dGradients<float>> g = std::move(per[0]);
    for (int b = 1; b < cfg.batch; ++b)
      for (std::size_t l = 0; l < g.size(); ++l) g[l].accumulate(per[b][l]);
    const float inv = 1.0f / static_cast<float>(cfg.batch);
    std::vector<std::span<float>> params;
    std::vector<std::span<const float>> grads;
    for (std::size_t l = 0; l < g.size(); ++l) {
      for (auto& v : g[l].weights) v *= inv;
      for (auto& v : g[l].bias) v *= inv;
      params.emplace_back(net.convs[l].weights);
      params.emplace_back(net.convs[l].bias);
      grads.emplace_back(g[l].weights);
      grads.emplace_back(g[l].bias);
    }
    adam.step<float>(params, grads);
  }

  if (r.diverged || r.losses.empty()) {
    r.final_mse = std::numeric_limits<double>::quiet_NaN();
  } else {
    const std::size_t n = std::min<std::size_t>(cfg.tail, r.losses.size());
    r.final_mse = std::accumulate(r.losses.end() - n, r.losses.end(), 0.0) / n;
  }
  std::mt19937_64 eval_rng(derive_seed(cfg.seed, 0xE7A1));
  const Tensor<float> y = probe_forward(net, make_input(cfg.input, in_size, eval_rng));
  r.prediction = FixationMap::from_tensor(y);
  r.top_is_bias_square = !r.diverged && top_pixels_are_center(r.prediction, cfg.bias_size);
  spdlog::info("bias arm {}: params {} final mse {:.3e} centred {}", r.name, r.params, r.final_mse,
               r.top_is_bias_square);
  return r;
}

BiasReport run_bias_experiment(const BiasExperimentConfig& cfg) {
  cfg.validate();
  BiasReport rep;
  rep.config = cfg;
  rep.min_rf = min_receptive_field(cfg.input_size, cfg.output_size, cfg.bias_size);
  const double p = static_cast<double>(cfg.bias_size) * cfg.bias_size /
                   (static_cast<double>(cfg.output_size) * cfg.output_size);
  rep.constant_mean_mse = p * (1.0 - p);

  struct Job {
    int rf;
    BiasCrop crop;
    Padding padding;
  };
  std::vector<Job> jobs;
  for (BiasCrop c : cfg.crops)
    for (int rf : cfg.receptive_fields) jobs.push_back({rf, c, Padding::Same});
  if (cfg.no_padding_arm) {
    jobs.push_back({*std::max_element(cfg.receptive_fields.begin(), cfg.receptive_fields.end()),
                    BiasCrop::None, Padding::Valid});
  }
  // Arms run one after another; each arm uses the worker pool for its batch.
  for (const Job& j : jobs) rep.arms.push_back(run_bias_arm(cfg, j.rf, j.crop, j.padding));
  return rep;
}

void write_bias_losses_csv(std::ostream& out, const BiasReport& report) {
  out << "arm,step,loss\n";
  out.precision(10);
  for (const auto& a : report.arms)
    for (std::size_t i = 0; i < a.losses.size(); ++i) out << a.name << ',' << i << ',' << a.losses[i] << '\n';
}

std::string bias_report_json(const BiasReport& report) {
  json arms = json::array();
  for (const auto& a : report.arms) {
    arms.push_back({{"name", a.name},
                    {"rf", a.rf},
                    {"crop", crop_name(a.crop)},
                    {"padding", a.padding == Padding::Same ? "same" : "valid"},
                    {"params", a.params},
                    {"steps", a.losses.size()},
                    {"final_mse", std::isfinite(a.final_mse) ? json(a.final_mse) : json(nullptr)},
                    {"diverged", a.diverged},
                    {"top_is_bias_square", a.top_is_bias_square}});
  }
  json j{{"config", json::parse(bias_config_to_json(report.config))},
         {"min_receptive_field", report.min_rf},
         {"constant_mean_mse", report.constant_mean_mse},
         {"arms", arms}};
  return j.dump(2);
}

void write_bias_outputs(const std::filesystem::path& dir, const BiasReport& report) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "losses.csv");
    if (!f) throw std::runtime_error("cannot write " + (dir / "losses.csv").string());
    write_bias_losses_csv(f, report);
  }
  {
    std::ofstream f(dir / "report.json");
    if (!f) throw std::runtime_error("cannot write " + (dir / "report.json").string());
    f << bias_report_json(report) << '\n';
  }
  static const std::array<std::array<std::uint8_t, 3>, 6> palette{
      {{31, 119, 180}, {214, 39, 40}, {44, 160, 44}, {148, 103, 189}, {255, 127, 14}, {23, 190, 207}}};
  std::vector<PlotSeries> series;
  for (std::size_t k = 0; k < report.arms.size(); ++k) {
    const auto& a = report.arms[k];
    PlotSeries s;
    s.color = palette[k % palette.size()];
    for (std::size_t i = 0; i < a.losses.size(); ++i) {
      s.x.push_back(static_cast<double>(i));
      s.y.push_back(std::log10(std::max(a.losses[i], 1e-12)));
    }
    series.push_back(std::move(s));
    if (!a.prediction.empty()) {
      FixationMap clipped = a.prediction;
      for (auto& v : clipped.data()) v = std::max(v, 0.0);
      write_png(dir / (a.name + ".png"), heatmap_image(clipped));
    }
  }
  if (!series.empty()) write_line_plot(dir / "losses.png", series);
}

}  // namespace foa
