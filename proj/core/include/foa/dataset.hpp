#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "foa/fixmap.hpp"
#include "foa/model.hpp"
#include "foa/synthetic.hpp"

namespace foa {

/// A sequence in model-ready form at source resolution.
struct Sequence {
  std::string name;
  DomainClips streams;  // per domain (N, S, S, C_d)
  std::vector<FixationMap> maps;  // S x S, normalized
  std::vector<double> speed;
  std::vector<LabelMap> labels;
  int frames() const { return static_cast<int>(maps.size()); }
  int size() const { return maps.empty() ? 0 : maps[0].height(); }
};

struct PrepareOptions {
  FixmapConfig fixmap{};  // coord_scale is derived from the sequence sizes
  double flow_max_magnitude = 4.0;
  int threads = 0;
};

Sequence prepare_sequence(const SyntheticSequence& raw, const PrepareOptions& opt = {});

/// Loads every seqNN directory below `dir`, sorted by name.
std::vector<Sequence> load_dataset(const std::filesystem::path& dir,
                                   const PrepareOptions& opt = {});

/// Frames [end - frames + 1, end] of a (N, H, W, C) stream.
Tensor<float> extract_clip(const Tensor<float>& stream, int end, int frames);

struct SampleRef {
  int sequence = 0;
  int frame = 0;  // last frame of the clip; the target is this frame's map
};

/// All (sequence, frame) pairs with a full clip history, every `stride` frames.
std::vector<SampleRef> enumerate_samples(const std::vector<Sequence>& seqs,
                                         int clip_frames, int stride = 1);

}  // namespace foa
