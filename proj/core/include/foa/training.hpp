#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "foa/dataset.hpp"
#include "foa/metrics.hpp"
#include "foa/model.hpp"

namespace foa {

enum class CropPolicy { Random, Center };

/// Area-averaging resize of every frame of a square clip to size x size.
Tensor<float> resize_clip(const Tensor<float>& clip, int size);
/// Mass-preserving area resize of a map, renormalized.
FixationMap resize_map(const FixationMap& map, int size);

Tensor<float> crop_clip(const Tensor<float>& clip, int y0, int x0, int size);
/// Cropped and renormalized; a crop with no mass becomes uniform.
FixationMap crop_map(const FixationMap& map, int y0, int x0, int size);

/// Horizontal flip. For the colour-encoded flow domain the encoded direction
/// is mirrored as well, so the result encodes the mirrored displacement.
Tensor<float> mirror_clip(const Tensor<float>& clip, Domain domain);
FixationMap mirror_map(const FixationMap& map);

struct CropResizePair {
  DomainClips resized;
  DomainClips crop;
  FixationMap resized_map;
  FixationMap crop_map;
  int offset_y = 0;
  int offset_x = 0;
  bool mirrored = false;
};

/// `source` holds (T, src, src, C) clips per domain (empty entries are
/// skipped). Random policy draws the offset uniformly from
/// [0, src - input_size]^2; Center uses the middle. With `mirror`, a fair coin
/// decides whether the whole pair is flipped. Deterministic per seed.
CropResizePair crop_resize_sample(const DomainClips& source, const FixationMap& map,
                                  const ModelConfig& cfg, CropPolicy policy, bool mirror,
                                  std::uint64_t seed);

struct TrainConfig {
  int iterations = 100;
  int batch = 32;
  double lr = 1e-4;
  std::uint64_t seed = 0;
  CropPolicy crop = CropPolicy::Random;
  bool mirror = true;
  double eps = kDefaultEps;
  int threads = 0;
  std::filesystem::path log_csv;  // iteration,crop,resized,skipped
};

struct TrainLogRow {
  int iteration = 0;
  double crop = 0.0;
  double resized = 0.0;
  int skipped = 0;  // samples dropped for a non-finite loss
};

/// Source-resolution clips ending at `end` for the domains in `mask`.
DomainClips source_clips(const Sequence& seq, int end, int frames,
                         const std::array<bool, kNumDomains>& mask);

/// Branch pre-training with the single-branch objective, Adam.
std::vector<TrainLogRow> train_branch(const ModelConfig& cfg, BranchParams<float>& params,
                                      const std::vector<Sequence>& seqs,
                                      const std::vector<SampleRef>& samples,
                                      const TrainConfig& tc);

/// Joint fine-tuning of all enabled branches with the fusion objective.
std::vector<TrainLogRow> finetune_fusion(MultiBranchModel& model,
                                         const std::vector<Sequence>& seqs,
                                         const std::vector<SampleRef>& samples,
                                         const TrainConfig& tc);

/// Resize-stream clips for inference.
DomainClips inference_clips(const Sequence& seq, int end, const ModelConfig& cfg,
                            const std::array<bool, kNumDomains>& mask);

/// Ground truth for frame `t` at the model's input resolution.
FixationMap target_map(const Sequence& seq, int t, int size);

/// CC / KL / IG rows of the model against the given baseline.
std::vector<MetricRow> evaluate_model(const MultiBranchModel& model,
                                      const std::vector<Sequence>& seqs,
                                      const std::vector<SampleRef>& samples,
                                      const FixationMap& baseline, int threads = 0);

/// Training-mean baseline at the model's input resolution.
FixationMap training_mean_at(const std::vector<Sequence>& seqs,
                             const std::vector<SampleRef>& samples, int size);

}  // namespace foa
