#include "foa/training.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include "foa/adam.hpp"
#include "foa/flow_encoding.hpp"
#include "foa/parallel.hpp"
#include "foa/rng.hpp"

namespace foa {

namespace {

// Overlap of output cell j with input cell i, in input-pixel units.
std::vector<std::vector<std::pair<int, double>>> area_weights(int in, int out) {
  std::vector<std::vector<std::pair<int, double>>> w(out);
  const double r = static_cast<double>(in) / out;
  for (int j = 0; j < out; ++j) {
    const double lo = j * r, hi = (j + 1) * r;
    for (int i = static_cast<int>(std::floor(lo)); i < std::min(in, static_cast<int>(std::ceil(hi))); ++i) {
      const double ov = std::min(hi, i + 1.0) - std::max(lo, static_cast<double>(i));
      if (ov > 1e-12) w[j].emplace_back(i, ov);
    }
  }
  return w;
}

}  // namespace

Tensor<float> resize_clip(const Tensor<float>& clip, int size) {
  const Shape4& s = clip.shape();
  if (s.h != s.w) throw std::invalid_argument("resize_clip: square frames expected");
  if (size == s.h) return clip;
  if (size > s.h) throw std::invalid_argument("resize_clip: upscaling not supported");
  const auto w = area_weights(s.h, size);
  const double inv = static_cast<double>(size) / s.h;
  Tensor<float> out({s.t, size, size, s.c});
  std::vector<double> acc(s.c);
  for (int t = 0; t < s.t; ++t)
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (const auto& [iy, wy] : w[y])
          for (const auto& [ix, wx] : w[x]) {
            const float* src = clip.data().data() + clip.index(t, iy, ix, 0);
            for (int c = 0; c < s.c; ++c) acc[c] += wy * wx * src[c];
          }
        for (int c = 0; c < s.c; ++c) out(t, y, x, c) = static_cast<float>(acc[c] * inv * inv);
      }
  return out;
}

FixationMap resize_map(const FixationMap& map, int size) {
  if (map.height() != map.width()) throw std::invalid_argument("resize_map: square map expected");
  if (size == map.height()) return normalize_map(map);
  if (size > map.height()) throw std::invalid_argument("resize_map: upscaling not supported");
  const auto w = area_weights(map.height(), size);
  FixationMap out(size, size, 0.0);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      double acc = 0.0;
      for (const auto& [iy, wy] : w[y])
        for (const auto& [ix, wx] : w[x]) acc += wy * wx * map.at(iy, ix);
      out.at(y, x) = acc;
    }
  return normalize_map(out);
}

Tensor<float> crop_clip(const Tensor<float>& clip, int y0, int x0, int size) {
  const Shape4& s = clip.shape();
  if (y0 < 0 || x0 < 0 || y0 + size > s.h || x0 + size > s.w) {
    throw std::out_of_range("crop_clip: window outside frame");
  }
  Tensor<float> out({s.t, size, size, s.c});
  for (int t = 0; t < s.t; ++t)
    for (int y = 0; y < size; ++y)
      std::copy_n(clip.data().data() + clip.index(t, y0 + y, x0, 0),
                  static_cast<std::size_t>(size) * s.c,
                  out.data().data() + out.index(t, y, 0, 0));
  return out;
}

FixationMap crop_map(const FixationMap& map, int y0, int x0, int size) {
  if (y0 < 0 || x0 < 0 || y0 + size > map.height() || x0 + size > map.width()) {
    throw std::out_of_range("crop_map: window outside map");
  }
  FixationMap out(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) out.at(y, x) = map.at(y0 + y, x0 + x);
  if (!(out.sum() > 0.0)) return uniform_map(size, size);
  return normalize_map(out);
}

Tensor<float> mirror_clip(const Tensor<float>& clip, Domain domain) {
  const Shape4& s = clip.shape();
  Tensor<float> out(s);
  for (int t = 0; t < s.t; ++t)
    for (int y = 0; y < s.h; ++y)
      for (int x = 0; x < s.w; ++x) {
        const float* src = clip.data().data() + clip.index(t, y, s.w - 1 - x, 0);
        float* dst = out.data().data() + out.index(t, y, x, 0);
        if (domain == Domain::Flow && s.c == 3) {
          const auto d = decode_flow_pixel({src[0], src[1], src[2]}, 1.0);
          const auto e = encode_flow_pixel(-d[0], d[1], 1.0);
          std::copy(e.begin(), e.end(), dst);
        } else {
          std::copy_n(src, s.c, dst);
        }
      }
  return out;
}

FixationMap mirror_map(const FixationMap& map) {
  FixationMap out(map.height(), map.width());
  for (int y = 0; y < map.height(); ++y)
    for (int x = 0; x < map.width(); ++x) out.at(y, x) = map.at(y, map.width() - 1 - x);
  return out;
}

CropResizePair crop_resize_sample(const DomainClips& source, const FixationMap& map,
                                  const ModelConfig& cfg, CropPolicy policy, bool mirror,
                                  std::uint64_t seed) {
  const int src = map.height(), size = cfg.input_size;
  if (map.width() != src || src < size) {
    throw std::invalid_argument("crop_resize_sample: map must be square and >= input size");
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> off(0, src - size);
  CropResizePair p;
  if (policy == CropPolicy::Random) {
    p.offset_y = off(rng);
    p.offset_x = off(rng);
  } else {
    p.offset_y = p.offset_x = (src - size) / 2;
  }
  p.mirrored = mirror && (rng() & 1u);
  for (int d = 0; d < kNumDomains; ++d) {
    if (source[d].empty()) continue;
    if (source[d].height() != src || source[d].width() != src) {
      throw std::invalid_argument("crop_resize_sample: clip/map size mismatch");
    }
    p.resized[d] = resize_clip(source[d], size);
    p.crop[d] = crop_clip(source[d], p.offset_y, p.offset_x, size);
    if (p.mirrored) {
      p.resized[d] = mirror_clip(p.resized[d], static_cast<Domain>(d));
      p.crop[d] = mirror_clip(p.crop[d], static_cast<Domain>(d));
    }
  }
  p.resized_map = resize_map(map, size);
  p.crop_map = crop_map(map, p.offset_y, p.offset_x, size);
  if (p.mirrored) {
    p.resized_map = mirror_map(p.resized_map);
    p.crop_map = mirror_map(p.crop_map);
  }
  return p;
}

DomainClips source_clips(const Sequence& seq, int end, int frames,
                         const std::array<bool, kNumDomains>& mask) {
  DomainClips c;
  for (int d = 0; d < kNumDomains; ++d) {
    if (mask[d]) c[d] = extract_clip(seq.streams[d], end, frames);
  }
  return c;
}

namespace {

class CsvLog {
 public:
  explicit CsvLog(const std::filesystem::path& p) {
    if (p.empty()) return;
    out_.open(p);
    if (!out_) throw std::runtime_error("cannot write " + p.string());
    out_ << "iteration,crop,resized,skipped\n";
    out_.precision(10);
  }
  void row(const TrainLogRow& r) {
    if (out_.is_open()) out_ << r.iteration << ',' << r.crop << ',' << r.resized << ',' << r.skipped << '\n';
  }

 private:
  std::ofstream out_;
};

void check_train_config(const TrainConfig& tc, const std::vector<SampleRef>& samples) {
  if (tc.iterations < 0 || tc.batch < 1 || !(tc.lr > 0)) {
    throw std::invalid_argument("TrainConfig: iterations >= 0, batch >= 1, lr > 0");
  }
  if (samples.empty()) throw std::invalid_argument("training: no samples");
}

}  // namespace

std::vector<TrainLogRow> train_branch(const ModelConfig& cfg, BranchParams<float>& params,
                                      const std::vector<Sequence>& seqs,
                                      const std::vector<SampleRef>& samples,
                                      const TrainConfig& tc) {
  check_train_config(tc, samples);
  const int d = static_cast<int>(params.domain);
  std::array<bool, kNumDomains> mask{};
  mask[d] = true;
  Adam adam({tc.lr});
  CsvLog log(tc.log_csv);
  std::vector<TrainLogRow> rows;
  std::mt19937_64 pick_rng(derive_seed(tc.seed, 0xB4A7C8));
  std::uniform_int_distribution<std::size_t> pick(0, samples.size() - 1);

  for (int it = 0; it < tc.iterations; ++it) {
    std::vector<std::size_t> chosen(tc.batch);
    for (auto& c : chosen) c = pick(pick_rng);
    std::vector<BranchGrads<float>> grads(tc.batch);
    std::vector<LossTerms> losses(tc.batch);
    std::vector<char> ok(tc.batch, 0);
    parallel_for(
        static_cast<std::size_t>(tc.batch),
        [&](std::size_t b) {
          const SampleRef& s = samples[chosen[b]];
          const Sequence& seq = seqs[s.sequence];
          const CropResizePair pair = crop_resize_sample(
              source_clips(seq, s.frame, cfg.frames, mask), seq.maps[s.frame], cfg, tc.crop,
              tc.mirror, derive_seed(tc.seed, static_cast<std::uint64_t>(it) * 4096 + b));
          try {
            losses[b] = branch_loss(cfg, params, pair.crop[d], pair.crop_map, pair.resized[d],
                                    pair.resized_map, tc.eps, &grads[b]);
            ok[b] = 1;
          } catch (const std::runtime_error& e) {
            spdlog::error("iteration {} sample {}: {}; sample skipped", it, b, e.what());
          }
        },
        tc.threads);

    TrainLogRow row;
    row.iteration = it;
    BranchGrads<float> total;
    int used = 0;
    for (int b = 0; b < tc.batch; ++b) {
      if (!ok[b]) {
        ++row.skipped;
        continue;
      }
      total.accumulate(grads[b]);
      row.crop += losses[b].crop;
      row.resized += losses[b].resized;
      ++used;
    }
    if (used > 0) {
      total.scale(1.0f / static_cast<float>(used));
      row.crop /= used;
      row.resized /= used;
      adam.step(params.parameter_spans(), total.spans());
    }
    log.row(row);
    rows.push_back(row);
  }
  return rows;
}

std::vector<TrainLogRow> finetune_fusion(MultiBranchModel& model,
                                         const std::vector<Sequence>& seqs,
                                         const std::vector<SampleRef>& samples,
                                         const TrainConfig& tc) {
  check_train_config(tc, samples);
  const ModelConfig& cfg = model.config;
  std::array<bool, kNumDomains> mask{};
  std::vector<int> active;
  for (int d = 0; d < kNumDomains; ++d) {
    if (model.has(static_cast<Domain>(d))) {
      mask[d] = true;
      active.push_back(d);
    }
  }
  if (active.empty()) throw std::invalid_argument("finetune_fusion: no enabled branch");

  Adam adam({tc.lr});
  CsvLog log(tc.log_csv);
  std::vector<TrainLogRow> rows;
  std::mt19937_64 pick_rng(derive_seed(tc.seed, 0xF0510));
  std::uniform_int_distribution<std::size_t> pick(0, samples.size() - 1);

  for (int it = 0; it < tc.iterations; ++it) {
    std::vector<std::size_t> chosen(tc.batch);
    for (auto& c : chosen) c = pick(pick_rng);
    std::vector<std::vector<BranchGrads<float>>> grads(tc.batch);
    std::vector<LossTerms> losses(tc.batch);
    std::vector<char> ok(tc.batch, 0);
    parallel_for(
        static_cast<std::size_t>(tc.batch),
        [&](std::size_t b) {
          const SampleRef& s = samples[chosen[b]];
          const Sequence& seq = seqs[s.sequence];
          const CropResizePair pair = crop_resize_sample(
              source_clips(seq, s.frame, cfg.frames, mask), seq.maps[s.frame], cfg, tc.crop,
              tc.mirror, derive_seed(tc.seed, static_cast<std::uint64_t>(it) * 4096 + b));
          std::vector<FusionInput<float>> in;
          for (int d : active) in.push_back({&*model.branches[d], &pair.crop[d], &pair.resized[d]});
          try {
            losses[b] = fusion_loss<float>(cfg, in, pair.crop_map, pair.resized_map, tc.eps, &grads[b]);
            ok[b] = 1;
          } catch (const std::runtime_error& e) {
            spdlog::error("iteration {} sample {}: {}; sample skipped", it, b, e.what());
          }
        },
        tc.threads);

    TrainLogRow row;
    row.iteration = it;
    std::vector<BranchGrads<float>> total(active.size());
    int used = 0;
    for (int b = 0; b < tc.batch; ++b) {
      if (!ok[b]) {
        ++row.skipped;
        continue;
      }
      for (std::size_t k = 0; k < active.size(); ++k) total[k].accumulate(grads[b][k]);
      row.crop += losses[b].crop;
      row.resized += losses[b].resized;
      ++used;
    }
    if (used > 0) {
      std::vector<std::span<float>> ps;
      std::vector<std::span<const float>> gs;
      for (std::size_t k = 0; k < active.size(); ++k) {
        total[k].scale(1.0f / static_cast<float>(used));
        for (auto sp : model.branches[active[k]]->parameter_spans()) ps.push_back(sp);
        for (auto sp : total[k].spans()) gs.push_back(sp);
      }
      row.crop /= used;
      row.resized /= used;
      adam.step(ps, gs);
    }
    log.row(row);
    rows.push_back(row);
  }
  return rows;
}

DomainClips inference_clips(const Sequence& seq, int end, const ModelConfig& cfg,
                            const std::array<bool, kNumDomains>& mask) {
  DomainClips c = source_clips(seq, end, cfg.frames, mask);
  for (auto& t : c)
    if (!t.empty()) t = resize_clip(t, cfg.input_size);
  return c;
}

FixationMap target_map(const Sequence& seq, int t, int size) {
  return resize_map(seq.maps[t], size);
}

std::vector<MetricRow> evaluate_model(const MultiBranchModel& model,
                                      const std::vector<Sequence>& seqs,
                                      const std::vector<SampleRef>& samples,
                                      const FixationMap& baseline, int threads) {
  std::array<bool, kNumDomains> mask{};
  for (int d = 0; d < kNumDomains; ++d) mask[d] = model.has(static_cast<Domain>(d));
  std::vector<MetricRow> rows(samples.size());
  parallel_for(
      samples.size(),
      [&](std::size_t i) {
        const SampleRef& s = samples[i];
        const Sequence& seq = seqs[s.sequence];
        const FixationMap pred = infer(model, inference_clips(seq, s.frame, model.config, mask));
        rows[i] = compute_metric_row(pred, target_map(seq, s.frame, model.config.input_size),
                                     baseline);
        rows[i].sequence = seq.name;
        rows[i].frame = s.frame;
      },
      threads);
  return rows;
}

FixationMap training_mean_at(const std::vector<Sequence>& seqs,
                             const std::vector<SampleRef>& samples, int size) {
  std::vector<FixationMap> maps;
  maps.reserve(samples.size());
  for (const SampleRef& s : samples) maps.push_back(target_map(seqs[s.sequence], s.frame, size));
  return training_mean_baseline(maps).map;
}

}  // namespace foa
