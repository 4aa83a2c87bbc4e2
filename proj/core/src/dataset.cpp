#include "foa/dataset.hpp"

#include <algorithm>
#include <stdexcept>

#include "foa/flow_encoding.hpp"

namespace foa {

Sequence prepare_sequence(const SyntheticSequence& raw, const PrepareOptions& opt) {
  const int n = raw.frames(), s = raw.size;
  Sequence seq;
  seq.name = raw.name;
  seq.streams[static_cast<int>(Domain::Rgb)] = raw.rgb;
  seq.streams[static_cast<int>(Domain::Flow)] = encode_flow(raw.flow, opt.flow_max_magnitude);
  Tensor<float> seg({n, s, s, cls::kCount});
  for (int t = 0; t < n; ++t) {
    const LabelMap& l = raw.labels[t];
    for (std::size_t i = 0; i < l.ids.size(); ++i) {
      const int c = l.ids[i];
      if (c < 0 || c >= cls::kCount) throw std::out_of_range("prepare_sequence: bad label id");
      seg.frame_ptr(t)[i * cls::kCount + c] = 1.0f;
    }
  }
  seq.streams[static_cast<int>(Domain::Seg)] = std::move(seg);
  FixmapConfig fm = opt.fixmap;
  fm.coord_scale = s / raw.native_size;
  seq.maps = build_sequence_maps(raw.gaze, n, fm, s, s, opt.threads);
  seq.speed = raw.speed;
  seq.labels = raw.labels;
  return seq;
}

std::vector<Sequence> load_dataset(const std::filesystem::path& dir, const PrepareOptions& opt) {
  std::vector<std::filesystem::path> dirs;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_directory() && std::filesystem::exists(e.path() / "script.json")) {
      dirs.push_back(e.path());
    }
  }
  if (dirs.empty()) throw std::runtime_error("no sequences found in " + dir.string());
  std::sort(dirs.begin(), dirs.end());
  std::vector<Sequence> out;
  for (const auto& d : dirs) out.push_back(prepare_sequence(read_sequence(d), opt));
  return out;
}

Tensor<float> extract_clip(const Tensor<float>& stream, int end, int frames) {
  const Shape4& s = stream.shape();
  if (end < frames - 1 || end >= s.t) {
    throw std::out_of_range("extract_clip: frames " + std::to_string(end - frames + 1) + ".." +
                            std::to_string(end) + " outside stream of " + std::to_string(s.t));
  }
  Tensor<float> clip({frames, s.h, s.w, s.c});
  const std::size_t per = static_cast<std::size_t>(s.h) * s.w * s.c;
  std::copy_n(stream.frame_ptr(end - frames + 1), per * frames, clip.data().data());
  return clip;
}

std::vector<SampleRef> enumerate_samples(const std::vector<Sequence>& seqs, int clip_frames,
                                         int stride) {
  if (stride < 1) throw std::invalid_argument("enumerate_samples: stride must be >= 1");
  std::vector<SampleRef> out;
  for (int i = 0; i < static_cast<int>(seqs.size()); ++i) {
    for (int t = clip_frames - 1; t < seqs[i].frames(); t += stride) out.push_back({i, t});
  }
  return out;
}

}  // namespace foa
