#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "foa/checkpoint.hpp"
#include "foa/model.hpp"
#include "foa/shift_eval.hpp"
#include "foa/training.hpp"
#include "gradcheck.hpp"

using namespace foa;
using namespace foa::test;

TEST(Model, ConfigValidation) {
  ModelConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.encoder_size(), 14);
  c.frames = 12;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = reduced_config();
  c.refine_widths = {4, 2};
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Model, ShapesAndNonNegativity) {
  const auto cfg = reduced_config();
  std::mt19937_64 rng(41);
  const auto p = BranchParams<double>::init(cfg, Domain::Rgb, 2, 7);
  const auto clip = random_tensor<double>({8, 32, 32, 2}, rng, 0, 1);
  const auto pass = branch_forward(cfg, p, clip, clip);
  EXPECT_EQ(pass.crop.encoded.shape(), (Shape4{1, 4, 4, 4}));
  EXPECT_EQ(pass.refine.output.shape(), (Shape4{1, 32, 32, 1}));
  for (double v : pass.refine.output.data()) EXPECT_GE(v, 0.0);
  for (double v : pass.crop.output.data()) EXPECT_GE(v, 0.0);
  EXPECT_THROW(coarse_forward(cfg, p, random_tensor<double>({4, 32, 32, 2}, rng)),
               std::invalid_argument);
}

TEST(Model, ZeroClipWithZeroBiasesGivesZeroMap) {
  const auto cfg = reduced_config();
  auto p = BranchParams<double>::init(cfg, Domain::Rgb, 2, 3);
  for (auto* k : p.kernels()) std::fill(k->bias.begin(), k->bias.end(), 0.0);
  const Tensor<double> zero({8, 32, 32, 2});
  const auto pass = branch_forward(cfg, p, zero, zero);
  for (double v : pass.refine.output.data()) EXPECT_EQ(v, 0.0);
}

TEST(Model, InitIsSeededAndDomainSpecific) {
  const auto cfg = reduced_config();
  const auto a = BranchParams<float>::init(cfg, Domain::Rgb, 3, 5);
  const auto b = BranchParams<float>::init(cfg, Domain::Rgb, 3, 5);
  const auto c = BranchParams<float>::init(cfg, Domain::Flow, 3, 5);
  EXPECT_EQ(a.coarse[0].weights, b.coarse[0].weights);
  EXPECT_NE(a.coarse[0].weights, c.coarse[0].weights);
  EXPECT_EQ(domain_channels(Domain::Seg), 19);
}

TEST(Model, BranchLossGradient) {
  GradStats st;
  for (std::uint64_t s = 0; s < 3; ++s) st.merge(check_branch_loss(s, 12));
  EXPECT_GT(st.checked, 20);
  EXPECT_LT(st.max_rel, 1e-4) << st.worst;
}

TEST(Model, FusionLossGradient) {
  GradStats st;
  for (std::uint64_t s = 0; s < 2; ++s) st.merge(check_fusion_loss(s, 8));
  EXPECT_GT(st.checked, 20);
  EXPECT_LT(st.max_rel, 1e-4) << st.worst;
}

TEST(Model, LayerOpGradients) {
  const auto st = check_layer_ops(1);
  EXPECT_GT(st.checked, 100);
  EXPECT_LT(st.max_rel, 1e-4) << st.worst;
}

TEST(Model, InferenceIsNormalizedFusion) {
  auto cfg = reduced_config();
  MultiBranchModel m;
  m.config = cfg;
  m.branches[0] = BranchParams<float>::init(cfg, Domain::Rgb, 3, 1);
  m.branches[1] = BranchParams<float>::init(cfg, Domain::Flow, 3, 1);
  std::mt19937_64 rng(42);
  DomainClips clips;
  clips[0] = random_tensor<float>({8, 32, 32, 3}, rng, 0, 1);
  clips[1] = random_tensor<float>({8, 32, 32, 3}, rng, 0, 1);
  const auto fused = infer(m, clips);
  EXPECT_TRUE(fused.is_normalized(1e-9));
  const auto a = branch_prediction(cfg, *m.branches[0], clips[0]);
  const auto b = branch_prediction(cfg, *m.branches[1], clips[1]);
  const double s = a.sum() + b.sum();
  for (std::size_t i = 0; i < fused.size(); ++i) EXPECT_NEAR(fused[i], (a[i] + b[i]) / s, 1e-12);
  m.enabled = {false, true, false};
  const auto only = infer(m, clips);
  for (std::size_t i = 0; i < only.size(); ++i) EXPECT_NEAR(only[i], b[i] / b.sum(), 1e-12);
  const std::vector<FixationMap> zeros(2, FixationMap(4, 4, 0.0));
  EXPECT_DOUBLE_EQ(fuse_maps(zeros)[0], 1.0 / 16);
}

TEST(Checkpoint, RoundTrip) {
  auto cfg = reduced_config();
  MultiBranchModel m;
  m.config = cfg;
  m.branches[2] = BranchParams<float>::init(cfg, Domain::Seg, 19, 9);
  const auto dir = std::filesystem::temp_directory_path() / "foa_test_ckpt";
  std::filesystem::remove_all(dir);
  save_checkpoint(dir, m, {12, 9, "unit"});
  CheckpointInfo info;
  const auto back = load_checkpoint(dir, &info);
  EXPECT_EQ(info.iteration, 12);
  EXPECT_EQ(back.config.coarse_widths, cfg.coarse_widths);
  ASSERT_TRUE(back.branches[2].has_value());
  EXPECT_FALSE(back.branches[0].has_value());
  const auto ks = back.branches[2]->kernels();
  const auto kw = m.branches[2]->kernels();
  for (std::size_t i = 0; i < ks.size(); ++i) {
    EXPECT_EQ(ks[i]->weights, kw[i]->weights);
    EXPECT_EQ(ks[i]->bias, kw[i]->bias);
  }
}

TEST(Training, CropResizeHelpers) {
  std::mt19937_64 rng(43);
  const auto clip = random_tensor<float>({2, 8, 8, 1}, rng, 0, 1);
  const auto r = resize_clip(clip, 4);
  EXPECT_NEAR(r(1, 0, 0, 0),
              (clip(1, 0, 0, 0) + clip(1, 0, 1, 0) + clip(1, 1, 0, 0) + clip(1, 1, 1, 0)) / 4, 1e-6);
  const auto c = crop_clip(clip, 2, 3, 4);
  EXPECT_EQ(c(0, 0, 0, 0), clip(0, 2, 3, 0));
  const auto m = random_map(8, 8, rng);
  const auto rm = resize_map(m, 4);
  EXPECT_TRUE(rm.is_normalized());
  const auto mm = mirror_map(mirror_map(m));
  for (std::size_t i = 0; i < m.size(); ++i) EXPECT_EQ(mm[i], m[i]);
  const auto mc = mirror_clip(clip, Domain::Rgb);
  EXPECT_EQ(mc(0, 1, 0, 0), clip(0, 1, 7, 0));
}

TEST(Training, CropResizeSampleIsDeterministic) {
  ModelConfig cfg = reduced_config();
  cfg.source_size = 48;
  std::mt19937_64 rng(44);
  DomainClips src;
  src[0] = random_tensor<float>({8, 48, 48, 3}, rng, 0, 1);
  const auto map = random_map(48, 48, rng);
  const auto a = crop_resize_sample(src, map, cfg, CropPolicy::Random, true, 99);
  const auto b = crop_resize_sample(src, map, cfg, CropPolicy::Random, true, 99);
  EXPECT_EQ(a.offset_y, b.offset_y);
  EXPECT_EQ(a.crop[0].storage(), b.crop[0].storage());
  EXPECT_EQ(a.resized[0].shape(), (Shape4{8, 32, 32, 3}));
  const auto c = crop_resize_sample(src, map, cfg, CropPolicy::Center, false, 1);
  EXPECT_EQ(c.offset_x, 8);
}

TEST(ShiftEval, ZeroShiftAndHarnessConsistency) {
  std::mt19937_64 rng(45);
  const auto clip = random_tensor<float>({2, 6, 8, 1}, rng, 0, 1);
  EXPECT_EQ(shift_clip(clip, 0).storage(), clip.storage());
  const auto s = shift_clip(clip, 3);
  EXPECT_EQ(s(0, 1, 5, 0), clip(0, 1, 2, 0));
  EXPECT_EQ(s(0, 1, 0, 0), clip(0, 1, 2, 0));  // mirror fill: column -3 reflects to 2
  EXPECT_THROW(shift_clip(clip, 9), std::invalid_argument);

  // A predictor that reads the ground truth straight from the clip gives a
  // flat curve at zero KL.
  std::vector<DomainClips> clips;
  std::vector<FixationMap> gts;
  for (int i = 0; i < 3; ++i) {
    auto m = normalize_map(random_map(6, 8, rng, 0.1, 1));
    DomainClips d;
    Tensor<float> t({1, 6, 8, 1});
    for (std::size_t k = 0; k < m.size(); ++k) t.data()[k] = static_cast<float>(m[k]);
    m = FixationMap::from_tensor(t);
    d[0] = t;
    clips.push_back(d);
    gts.push_back(normalize_map(m));
  }
  const Predictor identity = [](const DomainClips& d) { return FixationMap::from_tensor(d[0]); };
  const auto curve = shift_robustness_eval(identity, clips, gts, {-8, -4, 0, 4, 8});
  for (const auto& p : curve) EXPECT_LT(p.mean_kl, 1e-6);
}
