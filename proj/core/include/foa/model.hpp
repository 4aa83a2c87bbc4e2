#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "foa/fixation_map.hpp"
#include "foa/kl_loss.hpp"
#include "foa/layers.hpp"

namespace foa {

struct ModelConfig {
  int frames = 16;
  int input_size = 112;   // side of both streams fed to COARSE
  int source_size = 256;  // side of the frames crops are taken from
  std::vector<int> coarse_widths{16, 32, 64, 64};
  /// One pooling layer after each COARSE convolution.
  std::vector<PoolWindow> pools{{1, 2, 2}, {2, 2, 2}, {2, 2, 2}, {4, 1, 1}};
  std::vector<int> refine_widths{32, 16, 8, 1};
  double leaky_slope = 1e-3;
  /// Initial bias of the two single-channel output convolutions.
  double output_bias_init = 0.1;

  /// Throws std::invalid_argument when the pooling schedule does not
  /// collapse `frames` to one frame or does not divide `input_size`.
  void validate() const;
  /// Spatial side of the encoder output before upsampling.
  int encoder_size() const;
};

/// 8-frame clips at 32 px from 64 px sources with narrow layers; small
/// enough to train on a single core in minutes.
ModelConfig desk_model_config();

/// Input channels per domain: RGB 3, colour-encoded flow 3, 19 class scores.
int domain_channels(Domain d);

/// Learnable weights of one COARSE + REFINE branch.
template <typename Scalar>
struct BranchParams {
  Domain domain = Domain::Rgb;
  int in_channels = 3;
  std::vector<Conv3dKernel<Scalar>> coarse;  // 3x3x3, zero padded
  Conv3dKernel<Scalar> coarse_head;          // 3x3 2-D conv to 1 channel
  std::vector<Conv3dKernel<Scalar>> refine;  // 3x3 2-D convs

  /// He-normal weights from a seeded generator, zero biases except the two
  /// output layers.
  static BranchParams init(const ModelConfig& cfg, Domain domain,
                           int in_channels, std::uint64_t seed);

  std::size_t parameter_count() const;
  std::vector<Conv3dKernel<Scalar>*> kernels();
  std::vector<const Conv3dKernel<Scalar>*> kernels() const;
  std::vector<std::span<Scalar>> parameter_spans();

  template <typename Other>
  BranchParams<Other> cast() const {
    BranchParams<Other> o;
    o.domain = domain;
    o.in_channels = in_channels;
    for (const auto& k : coarse) o.coarse.push_back(k.template cast<Other>());
    o.coarse_head = coarse_head.template cast<Other>();
    for (const auto& k : refine) o.refine.push_back(k.template cast<Other>());
    return o;
  }
};

template <typename Scalar>
struct BranchGrads {
  std::vector<Conv3dGradients<Scalar>> coarse;
  Conv3dGradients<Scalar> coarse_head;
  std::vector<Conv3dGradients<Scalar>> refine;

  static BranchGrads zeros_like(const BranchParams<Scalar>& p);
  void accumulate(const BranchGrads& o);
  void scale(Scalar s);
  std::vector<std::span<const Scalar>> spans() const;
};

/// Intermediate values of a COARSE pass, kept for the backward pass.
template <typename Scalar>
struct CoarseTrace {
  std::vector<Tensor<Scalar>> conv_in;   // input of conv i
  std::vector<Tensor<Scalar>> relu_out;  // ReLU(conv i)
  std::vector<std::vector<std::size_t>> pool_argmax;
  Tensor<Scalar> encoded;    // last pooled tensor, (1, e, e, C)
  Tensor<Scalar> upsampled;  // (1, S, S, C)
  Tensor<Scalar> output;     // ReLU(head conv), (1, S, S, 1)
};

template <typename Scalar>
struct RefineTrace {
  std::vector<Tensor<Scalar>> layer_in;  // input of refine layer l
  std::vector<Tensor<Scalar>> layer_out;  // activation output of layer l
  Tensor<Scalar> output;                  // (1, S, S, 1)
};

/// clip: (frames, S, S, in_channels). Output is non-negative, (1, S, S, 1).
template <typename Scalar>
CoarseTrace<Scalar> coarse_forward(const ModelConfig& cfg,
                                   const BranchParams<Scalar>& p,
                                   const Tensor<Scalar>& clip);

/// Accumulates parameter gradients into `g`; returns d/d clip.
template <typename Scalar>
Tensor<Scalar> coarse_backward(const ModelConfig& cfg,
                               const BranchParams<Scalar>& p,
                               const CoarseTrace<Scalar>& trace,
                               const Tensor<Scalar>& upstream,
                               BranchGrads<Scalar>& g);

/// coarse_map: (1, S, S, 1); last_frame: (1, S, S, in_channels).
template <typename Scalar>
RefineTrace<Scalar> refine_forward(const ModelConfig& cfg,
                                   const BranchParams<Scalar>& p,
                                   const Tensor<Scalar>& coarse_map,
                                   const Tensor<Scalar>& last_frame);

/// Accumulates parameter gradients; returns (d/d coarse_map, d/d last_frame).
template <typename Scalar>
std::pair<Tensor<Scalar>, Tensor<Scalar>> refine_backward(
    const ModelConfig& cfg, const BranchParams<Scalar>& p,
    const RefineTrace<Scalar>& trace, const Tensor<Scalar>& upstream,
    BranchGrads<Scalar>& g);

/// One branch evaluated on both streams.
template <typename Scalar>
struct BranchPass {
  CoarseTrace<Scalar> crop;
  CoarseTrace<Scalar> resized;
  RefineTrace<Scalar> refine;
};

template <typename Scalar>
BranchPass<Scalar> branch_forward(const ModelConfig& cfg,
                                  const BranchParams<Scalar>& p,
                                  const Tensor<Scalar>& crop_clip,
                                  const Tensor<Scalar>& resized_clip);

/// Gradients of a pass given d loss / d(crop coarse output) and
/// d loss / d(refined output).
template <typename Scalar>
void branch_backward(const ModelConfig& cfg, const BranchParams<Scalar>& p,
                     const BranchPass<Scalar>& pass,
                     const Tensor<Scalar>& crop_upstream,
                     const Tensor<Scalar>& refine_upstream,
                     BranchGrads<Scalar>& g);

struct LossTerms {
  double crop = 0.0;     // KL on the cropped stream
  double resized = 0.0;  // KL on the refined, resized stream
  double total() const { return crop + resized; }
};

/// Single-branch objective:
///   KL(y_crop || COARSE(X_crop)) + KL(y || REFINE(COARSE(X_res), x_last)).
template <typename Scalar>
LossTerms branch_loss(const ModelConfig& cfg, const BranchParams<Scalar>& p,
                      const Tensor<Scalar>& crop_clip, const FixationMap& crop_target,
                      const Tensor<Scalar>& resized_clip,
                      const FixationMap& resized_target, double eps,
                      BranchGrads<Scalar>* grads);

/// Fusion objective over the branches listed in `branches` (each paired with
/// its crop and resized clips): the same two KL terms applied to the sum of
/// branch outputs, each sum normalized before its KL.
template <typename Scalar>
struct FusionInput {
  const BranchParams<Scalar>* params = nullptr;
  const Tensor<Scalar>* crop_clip = nullptr;
  const Tensor<Scalar>* resized_clip = nullptr;
};

template <typename Scalar>
LossTerms fusion_loss(const ModelConfig& cfg,
                      std::span<const FusionInput<Scalar>> branches,
                      const FixationMap& crop_target,
                      const FixationMap& resized_target, double eps,
                      std::vector<BranchGrads<Scalar>>* grads);

/// Sum of maps normalized to 1. All-zero input yields the uniform map and a
/// logged warning.
FixationMap fuse_maps(std::span<const FixationMap> maps);

/// Three branches plus an enable mask for ablations.
struct MultiBranchModel {
  ModelConfig config;
  std::array<std::optional<BranchParams<float>>, kNumDomains> branches;
  std::array<bool, kNumDomains> enabled{true, true, true};

  bool has(Domain d) const {
    return branches[static_cast<int>(d)].has_value() && enabled[static_cast<int>(d)];
  }
};

/// Per-domain input clips; unused domains may be empty tensors.
using DomainClips = std::array<Tensor<float>, kNumDomains>;

/// Resize stream only: sum of the enabled branches' refined maps, normalized.
FixationMap infer(const MultiBranchModel& model, const DomainClips& clips);

/// Refined map of a single branch (unnormalized).
FixationMap branch_prediction(const ModelConfig& cfg,
                              const BranchParams<float>& p,
                              const Tensor<float>& clip);

}  // namespace foa
