#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "foa/fixation_map.hpp"
#include "foa/layers.hpp"

namespace foa {

enum class BiasInput { Uniform, Noise };
enum class BiasCrop { None, Random };

BiasInput parse_bias_input(const std::string& s);
BiasCrop parse_bias_crop(const std::string& s);

struct BiasExperimentConfig {
  int input_size = 128;
  int output_size = 32;
  int bias_size = 4;
  BiasInput input = BiasInput::Uniform;
  std::vector<int> receptive_fields{98, 106, 114};
  std::vector<BiasCrop> crops{BiasCrop::None, BiasCrop::Random};
  bool no_padding_arm = true;
  std::uint64_t seed = 0;
  int iterations = 5000;
  int batch = 16;
  double lr = 1e-3;
  int base_width = 8;
  /// Parameter budget shared by every probe net; 0 derives it from the
  /// largest receptive field at base_width.
  long long param_budget = 0;
  int tail = 100;  // steps averaged for the final loss
  /// Negative-side slope of the hidden activations (0 = plain ReLU).
  double hidden_slope = 0.1;
  int threads = 0;

  void validate() const;
};

/// Missing keys keep their defaults.
BiasExperimentConfig bias_config_from_json(const std::string& text);
std::string bias_config_to_json(const BiasExperimentConfig& cfg);

/// Smallest receptive field that can see a border from every output pixel
/// outside the bias square. Throws std::invalid_argument when out does not
/// divide in, or bias does not fit in out.
int min_receptive_field(int input_size, int output_size, int bias_size);

struct ProbeLayer {
  enum Kind { Conv, Pool } kind = Conv;
  int in = 0;
  int out = 0;
  int k = 3;       // conv kernel side or pool window/stride
  bool relu = true;
};

struct ProbeNetSpec {
  std::vector<ProbeLayer> layers;
  Padding padding = Padding::Same;
  float slope = 0.0f;  // leaky slope of the hidden activations

  long long parameter_count() const;
  /// RF recurrence: rf += (k - 1) * jump, jump *= stride.
  int receptive_field() const;
  int downsampling() const;
};

/// 3x3 conv stack with two 2x2 pools and a linear 1x1 head. Widths of the
/// first two stages are tuned so the parameter count lands within 1% of
/// `param_budget` (0 = the unadjusted count at `base_width`).
/// Throws std::invalid_argument for an unreachable rf or budget.
ProbeNetSpec build_probe_net(int rf, long long param_budget, int base_width = 8);

/// Parameter count of the deepest (largest-rf) net at base_width.
long long default_probe_budget(const std::vector<int>& rfs, int base_width);

struct ProbeNet {
  ProbeNetSpec spec;
  std::vector<Conv3dKernel<float>> convs;  // one per Conv layer, in order
};

ProbeNet init_probe_net(const ProbeNetSpec& spec, std::uint64_t seed);

/// Single-image (1, H, W, C) forward pass.
Tensor<float> probe_forward(const ProbeNet& net, const Tensor<float>& input);

/// MSE against `target` (1, h, w, 1); fills `grads` (one per conv) when given.
double probe_mse(const ProbeNet& net, const Tensor<float>& input, const Tensor<float>& target,
                 std::vector<Conv3dGradients<float>>* grads);

/// Input side that yields `output_size` for an unpadded net.
int valid_input_size(const ProbeNetSpec& spec, int output_size);

/// Measured receptive field: width of the input row span whose perturbation
/// changes the centre output pixel of a positive-weight copy of the net.
int simulate_receptive_field(const ProbeNetSpec& spec);

struct BiasArmResult {
  std::string name;
  int rf = 0;
  BiasCrop crop = BiasCrop::None;
  Padding padding = Padding::Same;
  long long params = 0;
  std::vector<double> losses;
  double final_mse = 0.0;
  bool diverged = false;
  FixationMap prediction;  // output for a fixed evaluation input
  bool top_is_bias_square = false;
};

struct BiasReport {
  BiasExperimentConfig config;
  int min_rf = 0;
  double constant_mean_mse = 0.0;
  std::vector<BiasArmResult> arms;

  const BiasArmResult* find(int rf, BiasCrop crop, Padding padding = Padding::Same) const;
};

/// Centred bias_size square of ones on an out x out grid.
FixationMap bias_target(int output_size, int bias_size);

/// True when the n*n largest entries (row-major tie-break) are exactly the
/// centred n x n square.
bool top_pixels_are_center(const FixationMap& map, int n);

BiasArmResult run_bias_arm(const BiasExperimentConfig& cfg, int rf, BiasCrop crop,
                           Padding padding);
BiasReport run_bias_experiment(const BiasExperimentConfig& cfg);

/// Long format: arm,step,loss.
void write_bias_losses_csv(std::ostream& out, const BiasReport& report);
/// Loss plot plus one heatmap PNG per arm.
void write_bias_outputs(const std::filesystem::path& dir, const BiasReport& report);
std::string bias_report_json(const BiasReport& report);

}  // namespace foa
