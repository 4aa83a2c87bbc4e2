#include "foa/model.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "foa/rng.hpp"

namespace foa {

void ModelConfig::validate() const {
  if (frames < 1 || input_size < 1 || source_size < input_size) {
    throw std::invalid_argument("ModelConfig: need frames >= 1 and source_size >= input_size >= 1");
  }
  if (coarse_widths.empty() || coarse_widths.size() != pools.size()) {
    throw std::invalid_argument("ModelConfig: one pooling layer per COARSE convolution required");
  }
  if (refine_widths.empty() || refine_widths.back() != 1) {
    throw std::invalid_argument("ModelConfig: REFINE must end with a single channel");
  }
  int t = frames, s = input_size;
  for (const PoolWindow& p : pools) {
    if (p.h != p.w) throw std::invalid_argument("ModelConfig: pooling must be square in space");
    if (t % p.t != 0 || s % p.h != 0) {
      throw std::invalid_argument("ModelConfig: pooling schedule does not divide " +
                                  std::to_string(frames) + " frames x " +
                                  std::to_string(input_size) + " px");
    }
    t /= p.t;
    s /= p.h;
  }
  if (t != 1) {
    throw std::invalid_argument("ModelConfig: temporal pooling must collapse " +
                                std::to_string(frames) + " frames to 1, leaves " +
                                std::to_string(t));
  }
}

int ModelConfig::encoder_size() const {
  int s = input_size;
  for (const PoolWindow& p : pools) s /= p.h;
  return s;
}

ModelConfig desk_model_config() {
  ModelConfig c;
  c.frames = 8;
  c.input_size = 32;
  c.source_size = 64;
  c.coarse_widths = {8, 16, 16, 16};
  c.pools = {{1, 2, 2}, {2, 2, 2}, {2, 2, 2}, {2, 1, 1}};
  c.refine_widths = {8, 4, 1};
  return c;
}

int domain_channels(Domain d) {
  switch (d) {
    case Domain::Rgb: return 3;
    case Domain::Flow: return 3;
    case Domain::Seg: return 19;
  }
  return 0;
}

template <typename Scalar>
BranchParams<Scalar> BranchParams<Scalar>::init(const ModelConfig& cfg, Domain domain,
                                                int in_channels, std::uint64_t seed) {
  cfg.validate();
  if (in_channels < 1) throw std::invalid_argument("BranchParams: in_channels must be >= 1");
  std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(domain)));
  auto he = [&](Conv3dKernel<Scalar>& k) {
    const double fan_in = static_cast<double>(k.in_channels) * k.height * k.width * k.depth;
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
    for (Scalar& w : k.weights) w = static_cast<Scalar>(dist(rng));
  };
  BranchParams p;
  p.domain = domain;
  p.in_channels = in_channels;
  int c = in_channels;
  for (int w : cfg.coarse_widths) {
    p.coarse.push_back(Conv3dKernel<Scalar>::zeros(w, c, 3, 3, 3));
    he(p.coarse.back());
    c = w;
  }
  p.coarse_head = Conv3dKernel<Scalar>::zeros(1, c, 3, 3, 1);
  he(p.coarse_head);
  p.coarse_head.bias[0] = static_cast<Scalar>(cfg.output_bias_init);
  c = in_channels + 1;
  for (int w : cfg.refine_widths) {
    p.refine.push_back(Conv3dKernel<Scalar>::zeros(w, c, 3, 3, 1));
    he(p.refine.back());
    c = w;
  }
  p.refine.back().bias[0] = static_cast<Scalar>(cfg.output_bias_init);
  return p;
}

template <typename Scalar>
std::vector<Conv3dKernel<Scalar>*> BranchParams<Scalar>::kernels() {
  std::vector<Conv3dKernel<Scalar>*> out;
  for (auto& k : coarse) out.push_back(&k);
  out.push_back(&coarse_head);
  for (auto& k : refine) out.push_back(&k);
  return out;
}

template <typename Scalar>
std::vector<const Conv3dKernel<Scalar>*> BranchParams<Scalar>::kernels() const {
  std::vector<const Conv3dKernel<Scalar>*> out;
  for (const auto& k : coarse) out.push_back(&k);
  out.push_back(&coarse_head);
  for (const auto& k : refine) out.push_back(&k);
  return out;
}

template <typename Scalar>
std::size_t BranchParams<Scalar>::parameter_count() const {
  std::size_t n = 0;
  for (const auto* k : kernels()) n += k->parameter_count();
  return n;
}

template <typename Scalar>
std::vector<std::span<Scalar>> BranchParams<Scalar>::parameter_spans() {
  std::vector<std::span<Scalar>> out;
  for (auto* k : kernels()) {
    out.emplace_back(k->weights);
    out.emplace_back(k->bias);
  }
  return out;
}

template <typename Scalar>
BranchGrads<Scalar> BranchGrads<Scalar>::zeros_like(const BranchParams<Scalar>& p) {
  BranchGrads g;
  g.coarse.resize(p.coarse.size());
  for (std::size_t i = 0; i < p.coarse.size(); ++i) g.coarse[i].resize_like(p.coarse[i]);
  g.coarse_head.resize_like(p.coarse_head);
  g.refine.resize(p.refine.size());
  for (std::size_t i = 0; i < p.refine.size(); ++i) g.refine[i].resize_like(p.refine[i]);
  return g;
}

template <typename Scalar>
void BranchGrads<Scalar>::accumulate(const BranchGrads& o) {
  if (coarse.empty() && refine.empty()) {
    *this = o;
    return;
  }
  for (std::size_t i = 0; i < coarse.size(); ++i) coarse[i].accumulate(o.coarse[i]);
  coarse_head.accumulate(o.coarse_head);
  for (std::size_t i = 0; i < refine.size(); ++i) refine[i].accumulate(o.refine[i]);
}

template <typename Scalar>
void BranchGrads<Scalar>::scale(Scalar s) {
  auto sc = [s](Conv3dGradients<Scalar>& g) {
    for (Scalar& v : g.weights) v *= s;
    for (Scalar& v : g.bias) v *= s;
  };
  for (auto& g : coarse) sc(g);
  sc(coarse_head);
  for (auto& g : refine) sc(g);
}

template <typename Scalar>
std::vector<std::span<const Scalar>> BranchGrads<Scalar>::spans() const {
  std::vector<std::span<const Scalar>> out;
  for (const auto& g : coarse) {
    out.emplace_back(g.weights);
    out.emplace_back(g.bias);
  }
  out.emplace_back(coarse_head.weights);
  out.emplace_back(coarse_head.bias);
  for (const auto& g : refine) {
    out.emplace_back(g.weights);
    out.emplace_back(g.bias);
  }
  return out;
}

template <typename Scalar>
CoarseTrace<Scalar> coarse_forward(const ModelConfig& cfg, const BranchParams<Scalar>& p,
                                   const Tensor<Scalar>& clip) {
  const Shape4& s = clip.shape();
  if (s.t != cfg.frames || s.h != cfg.input_size || s.w != cfg.input_size ||
      s.c != p.in_channels) {
    throw std::invalid_argument("coarse_forward: expected clip (" + std::to_string(cfg.frames) +
                                "," + std::to_string(cfg.input_size) + "," +
                                std::to_string(cfg.input_size) + "," +
                                std::to_string(p.in_channels) + "), got " + s.str());
  }
  CoarseTrace<Scalar> tr;
  Tensor<Scalar> x = clip;
  for (std::size_t i = 0; i < p.coarse.size(); ++i) {
    Tensor<Scalar> r = relu(conv3d_forward(x, p.coarse[i]));
    PoolResult<Scalar> pooled = maxpool3d(r, cfg.pools[i]);
    tr.conv_in.push_back(std::move(x));
    tr.relu_out.push_back(std::move(r));
    tr.pool_argmax.push_back(std::move(pooled.argmax));
    x = std::move(pooled.output);
  }
  tr.encoded = std::move(x);
  tr.upsampled = bilinear_upsample(tr.encoded, cfg.input_size, cfg.input_size);
  tr.output = relu(conv3d_forward(tr.upsampled, p.coarse_head));
  return tr;
}

template <typename Scalar>
Tensor<Scalar> coarse_backward(const ModelConfig& cfg, const BranchParams<Scalar>& p,
                               const CoarseTrace<Scalar>& tr, const Tensor<Scalar>& upstream,
                               BranchGrads<Scalar>& g) {
  (void)cfg;
  if (g.coarse.empty()) g = BranchGrads<Scalar>::zeros_like(p);
  const Tensor<Scalar> gh = relu_backward(tr.output, upstream);
  Conv3dBackward<Scalar> hb = conv3d_backward(tr.upsampled, p.coarse_head, gh);
  g.coarse_head.accumulate(hb.params);
  Tensor<Scalar> gx = bilinear_upsample_backward(tr.encoded.shape(), hb.input_grad);
  for (std::size_t i = p.coarse.size(); i-- > 0;) {
    const Tensor<Scalar> gr = maxpool3d_backward(tr.relu_out[i].shape(), tr.pool_argmax[i], gx);
    const Tensor<Scalar> ga = relu_backward(tr.relu_out[i], gr);
    Conv3dBackward<Scalar> cb = conv3d_backward(tr.conv_in[i], p.coarse[i], ga);
    g.coarse[i].accumulate(cb.params);
    gx = std::move(cb.input_grad);
  }
  return gx;
}

template <typename Scalar>
RefineTrace<Scalar> refine_forward(const ModelConfig& cfg, const BranchParams<Scalar>& p,
                                   const Tensor<Scalar>& coarse_map,
                                   const Tensor<Scalar>& last_frame) {
  const Shape4 &cs = coarse_map.shape(), &fs = last_frame.shape();
  if (cs.t != 1 || cs.c != 1 || fs.t != 1 || fs.c != p.in_channels || cs.h != fs.h ||
      cs.w != fs.w) {
    throw std::invalid_argument("refine_forward: coarse map " + cs.str() +
                                " incompatible with last frame " + fs.str());
  }
  const Scalar slope = static_cast<Scalar>(cfg.leaky_slope);
  RefineTrace<Scalar> tr;
  Tensor<Scalar> x = concat_channels(last_frame, coarse_map);
  for (std::size_t l = 0; l < p.refine.size(); ++l) {
    Tensor<Scalar> a = conv3d_forward(x, p.refine[l]);
    Tensor<Scalar> y = l + 1 < p.refine.size() ? leaky_relu(a, slope) : relu(a);
    tr.layer_in.push_back(std::move(x));
    x = y;
    tr.layer_out.push_back(std::move(y));
  }
  tr.output = std::move(x);
  return tr;
}

template <typename Scalar>
std::pair<Tensor<Scalar>, Tensor<Scalar>> refine_backward(const ModelConfig& cfg,
                                                          const BranchParams<Scalar>& p,
                                                          const RefineTrace<Scalar>& tr,
                                                          const Tensor<Scalar>& upstream,
                                                          BranchGrads<Scalar>& g) {
  if (g.coarse.empty()) g = BranchGrads<Scalar>::zeros_like(p);
  const Scalar slope = static_cast<Scalar>(cfg.leaky_slope);
  Tensor<Scalar> gy = upstream;
  for (std::size_t l = p.refine.size(); l-- > 0;) {
    const Tensor<Scalar> ga = l + 1 < p.refine.size()
                                  ? leaky_relu_backward(tr.layer_out[l], gy, slope)
                                  : relu_backward(tr.layer_out[l], gy);
    Conv3dBackward<Scalar> cb = conv3d_backward(tr.layer_in[l], p.refine[l], ga);
    g.refine[l].accumulate(cb.params);
    gy = std::move(cb.input_grad);
  }
  auto [g_frame, g_coarse] = split_channels(gy, p.in_channels);
  return {std::move(g_coarse), std::move(g_frame)};
}

template <typename Scalar>
BranchPass<Scalar> branch_forward(const ModelConfig& cfg, const BranchParams<Scalar>& p,
                                  const Tensor<Scalar>& crop_clip,
                                  const Tensor<Scalar>& resized_clip) {
  BranchPass<Scalar> pass;
  pass.crop = coarse_forward(cfg, p, crop_clip);
  pass.resized = coarse_forward(cfg, p, resized_clip);
  pass.refine = refine_forward(cfg, p, pass.resized.output,
                               take_frame(resized_clip, resized_clip.frames() - 1));
  return pass;
}

template <typename Scalar>
void branch_backward(const ModelConfig& cfg, const BranchParams<Scalar>& p,
                     const BranchPass<Scalar>& pass, const Tensor<Scalar>& crop_upstream,
                     const Tensor<Scalar>& refine_upstream, BranchGrads<Scalar>& g) {
  if (g.coarse.empty()) g = BranchGrads<Scalar>::zeros_like(p);
  coarse_backward(cfg, p, pass.crop, crop_upstream, g);
  auto [g_coarse, g_frame] = refine_backward(cfg, p, pass.refine, refine_upstream, g);
  (void)g_frame;
  coarse_backward(cfg, p, pass.resized, g_coarse, g);
}

namespace {

template <typename Scalar>
FixationMap map_of(const Tensor<Scalar>& t) {
  return FixationMap::from_tensor(t);
}

template <typename Scalar>
Tensor<Scalar> grad_tensor(const std::vector<double>& g, int size) {
  Tensor<Scalar> t({1, size, size, 1});
  for (std::size_t i = 0; i < g.size(); ++i) t.data()[i] = static_cast<Scalar>(g[i]);
  return t;
}

void check_target(const FixationMap& m, int size, const char* what) {
  if (m.height() != size || m.width() != size) {
    throw std::invalid_argument(std::string(what) + " target must be " + std::to_string(size) +
                                "x" + std::to_string(size));
  }
}

void check_loss(const LossTerms& l) {
  if (!std::isfinite(l.crop) || !std::isfinite(l.resized)) {
    throw std::runtime_error("non-finite loss (crop " + std::to_string(l.crop) + ", resized " +
                             std::to_string(l.resized) + ")");
  }
}

}  // namespace

template <typename Scalar>
LossTerms branch_loss(const ModelConfig& cfg, const BranchParams<Scalar>& p,
                      const Tensor<Scalar>& crop_clip, const FixationMap& crop_target,
                      const Tensor<Scalar>& resized_clip, const FixationMap& resized_target,
                      double eps, BranchGrads<Scalar>* grads) {
  check_target(crop_target, cfg.input_size, "crop");
  check_target(resized_target, cfg.input_size, "resized");
  const BranchPass<Scalar> pass = branch_forward(cfg, p, crop_clip, resized_clip);
  const bool need = grads != nullptr;
  const KlResult kc = kl_loss(crop_target, map_of(pass.crop.output), eps, need);
  const KlResult kr = kl_loss(resized_target, map_of(pass.refine.output), eps, need);
  LossTerms l{kc.loss, kr.loss};
  check_loss(l);
  if (need) {
    branch_backward(cfg, p, pass, grad_tensor<Scalar>(kc.grad, cfg.input_size),
                    grad_tensor<Scalar>(kr.grad, cfg.input_size), *grads);
  }
  return l;
}

template <typename Scalar>
LossTerms fusion_loss(const ModelConfig& cfg, std::span<const FusionInput<Scalar>> branches,
                      const FixationMap& crop_target, const FixationMap& resized_target,
                      double eps, std::vector<BranchGrads<Scalar>>* grads) {
  if (branches.empty()) throw std::invalid_argument("fusion_loss: no branches");
  check_target(crop_target, cfg.input_size, "crop");
  check_target(resized_target, cfg.input_size, "resized");
  std::vector<BranchPass<Scalar>> passes;
  FixationMap crop_sum(cfg.input_size, cfg.input_size, 0.0);
  FixationMap res_sum(cfg.input_size, cfg.input_size, 0.0);
  for (const auto& b : branches) {
    if (!b.params || !b.crop_clip || !b.resized_clip) {
      throw std::invalid_argument("fusion_loss: missing branch input");
    }
    passes.push_back(branch_forward(cfg, *b.params, *b.crop_clip, *b.resized_clip));
    for (std::size_t i = 0; i < crop_sum.size(); ++i) {
      crop_sum[i] += static_cast<double>(passes.back().crop.output.data()[i]);
      res_sum[i] += static_cast<double>(passes.back().refine.output.data()[i]);
    }
  }
  const bool need = grads != nullptr;
  const KlResult kc = kl_loss(crop_target, crop_sum, eps, need);
  const KlResult kr = kl_loss(resized_target, res_sum, eps, need);
  LossTerms l{kc.loss, kr.loss};
  check_loss(l);
  if (need) {
    grads->resize(branches.size());
    const auto gc = grad_tensor<Scalar>(kc.grad, cfg.input_size);
    const auto gr = grad_tensor<Scalar>(kr.grad, cfg.input_size);
    for (std::size_t b = 0; b < branches.size(); ++b) {
      branch_backward(cfg, *branches[b].params, passes[b], gc, gr, (*grads)[b]);
    }
  }
  return l;
}

FixationMap fuse_maps(std::span<const FixationMap> maps) {
  if (maps.empty()) throw std::invalid_argument("fuse_maps: no maps");
  FixationMap acc(maps[0].height(), maps[0].width(), 0.0);
  for (const FixationMap& m : maps) {
    if (!m.same_shape(acc)) throw std::invalid_argument("fuse_maps: shape mismatch");
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += m[i];
  }
  if (!(acc.sum() > 0.0)) {
    spdlog::warn("fused prediction has zero mass, falling back to the uniform map");
    return uniform_map(acc.height(), acc.width());
  }
  return normalize_map(acc);
}

FixationMap branch_prediction(const ModelConfig& cfg, const BranchParams<float>& p,
                              const Tensor<float>& clip) {
  const CoarseTrace<float> c = coarse_forward(cfg, p, clip);
  const RefineTrace<float> r =
      refine_forward(cfg, p, c.output, take_frame(clip, clip.frames() - 1));
  return FixationMap::from_tensor(r.output);
}

FixationMap infer(const MultiBranchModel& model, const DomainClips& clips) {
  std::vector<FixationMap> maps;
  for (int d = 0; d < kNumDomains; ++d) {
    if (!model.has(static_cast<Domain>(d))) continue;
    if (clips[d].empty()) {
      throw std::invalid_argument(std::string("infer: missing clip for branch ") +
                                  domain_name(static_cast<Domain>(d)));
    }
    maps.push_back(branch_prediction(model.config, *model.branches[d], clips[d]));
  }
  if (maps.empty()) throw std::invalid_argument("infer: no enabled branch");
  return fuse_maps(maps);
}

#define FOA_INSTANTIATE_MODEL(S)                                                          \
  template struct BranchParams<S>;                                                        \
  template struct BranchGrads<S>;                                                         \
  template CoarseTrace<S> coarse_forward(const ModelConfig&, const BranchParams<S>&,      \
                                         const Tensor<S>&);                               \
  template Tensor<S> coarse_backward(const ModelConfig&, const BranchParams<S>&,          \
                                     const CoarseTrace<S>&, const Tensor<S>&,             \
                                     BranchGrads<S>&);                                    \
  template RefineTrace<S> refine_forward(const ModelConfig&, const BranchParams<S>&,      \
                                         const Tensor<S>&, const Tensor<S>&);             \
  template std::pair<Tensor<S>, Tensor<S>> refine_backward(                               \
      const ModelConfig&, const BranchParams<S>&, const RefineTrace<S>&,                  \
      const Tensor<S>&, BranchGrads<S>&);                                                 \
  template BranchPass<S> branch_forward(const ModelConfig&, const BranchParams<S>&,       \
                                        const Tensor<S>&, const Tensor<S>&);              \
  template void branch_backward(const ModelConfig&, const BranchParams<S>&,               \
                                const BranchPass<S>&, const Tensor<S>&, const Tensor<S>&, \
                                BranchGrads<S>&);                                         \
  template LossTerms branch_loss(const ModelConfig&, const BranchParams<S>&,              \
                                 const Tensor<S>&, const FixationMap&, const Tensor<S>&,  \
                                 const FixationMap&, double, BranchGrads<S>*);            \
  template LossTerms fusion_loss(const ModelConfig&, std::span<const FusionInput<S>>,     \
                                 const FixationMap&, const FixationMap&, double,          \
                                 std::vector<BranchGrads<S>>*);

FOA_INSTANTIATE_MODEL(float)
FOA_INSTANTIATE_MODEL(double)

#undef FOA_INSTANTIATE_MODEL

}  // namespace foa
