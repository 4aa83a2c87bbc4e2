#include "foa/checkpoint.hpp"

#include <fstream>
#include <json.hpp>
#include <stdexcept>

#include "foa/tensor_io.hpp"

namespace foa {

namespace {

using nlohmann::json;

json config_to_json(const ModelConfig& c) {
  json pools = json::array();
  for (const PoolWindow& p : c.pools) pools.push_back({p.t, p.h, p.w});
  return {{"frames", c.frames},
          {"input_size", c.input_size},
          {"source_size", c.source_size},
          {"coarse_widths", c.coarse_widths},
          {"pools", pools},
          {"refine_widths", c.refine_widths},
          {"leaky_slope", c.leaky_slope},
          {"output_bias_init", c.output_bias_init}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.frames = j.at("frames").get<int>();
  c.input_size = j.at("input_size").get<int>();
  c.source_size = j.at("source_size").get<int>();
  c.coarse_widths = j.at("coarse_widths").get<std::vector<int>>();
  c.pools.clear();
  for (const auto& p : j.at("pools")) {
    const auto v = p.get<std::vector<int>>();
    if (v.size() != 3) throw std::runtime_error("checkpoint: pool spec needs 3 entries");
    c.pools.push_back({v[0], v[1], v[2]});
  }
  c.refine_widths = j.at("refine_widths").get<std::vector<int>>();
  c.leaky_slope = j.at("leaky_slope").get<double>();
  c.output_bias_init = j.value("output_bias_init", 0.1);
  c.validate();
  return c;
}

json save_kernel(const std::filesystem::path& dir, const std::string& name,
                 const Conv3dKernel<float>& k) {
  const std::string wf = name + ".w.foat", bf = name + ".b.foat";
  save_tensor(dir / wf, Tensor<float>({1, 1, 1, static_cast<int>(k.weights.size())}, k.weights));
  save_tensor(dir / bf, Tensor<float>({1, 1, 1, static_cast<int>(k.bias.size())}, k.bias));
  return {{"name", name},
          {"out", k.out_channels},
          {"in", k.in_channels},
          {"p", k.height},
          {"q", k.width},
          {"r", k.depth},
          {"padding", k.padding == Padding::Same ? "same" : "valid"},
          {"weights", wf},
          {"bias", bf}};
}

Conv3dKernel<float> load_kernel(const std::filesystem::path& dir, const json& j) {
  Conv3dKernel<float> k = Conv3dKernel<float>::zeros(
      j.at("out").get<int>(), j.at("in").get<int>(), j.at("p").get<int>(), j.at("q").get<int>(),
      j.at("r").get<int>(), j.at("padding").get<std::string>() == "same" ? Padding::Same : Padding::Valid);
  k.weights = load_tensor<float>(dir / j.at("weights").get<std::string>()).storage();
  k.bias = load_tensor<float>(dir / j.at("bias").get<std::string>()).storage();
  k.validate();
  return k;
}

}  // namespace

std::string model_config_json(const ModelConfig& cfg) { return config_to_json(cfg).dump(2); }

ModelConfig model_config_from_json(const std::string& text) {
  return config_from_json(json::parse(text));
}

void save_checkpoint(const std::filesystem::path& dir, const MultiBranchModel& model,
                     const CheckpointInfo& info) {
  std::filesystem::create_directories(dir);
  json m = {{"format", 1},
            {"config", config_to_json(model.config)},
            {"iteration", info.iteration},
            {"seed", info.seed},
            {"note", info.note},
            {"branches", json::array()}};
  for (int d = 0; d < kNumDomains; ++d) {
    if (!model.branches[d]) continue;
    const BranchParams<float>& p = *model.branches[d];
    const std::string prefix = domain_name(static_cast<Domain>(d));
    json layers = json::array();
    for (std::size_t i = 0; i < p.coarse.size(); ++i)
      layers.push_back(save_kernel(dir, prefix + ".coarse" + std::to_string(i), p.coarse[i]));
    layers.push_back(save_kernel(dir, prefix + ".head", p.coarse_head));
    for (std::size_t i = 0; i < p.refine.size(); ++i)
      layers.push_back(save_kernel(dir, prefix + ".refine" + std::to_string(i), p.refine[i]));
    m["branches"].push_back({{"domain", prefix},
                             {"enabled", model.enabled[d]},
                             {"in_channels", p.in_channels},
                             {"layers", layers}});
  }
  std::ofstream out(dir / "manifest.json");
  if (!out) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
  out << m.dump(2) << '\n';
}

MultiBranchModel load_checkpoint(const std::filesystem::path& dir, CheckpointInfo* info) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw std::runtime_error("missing " + (dir / "manifest.json").string());
  const json m = json::parse(in);
  if (m.value("format", 0) != 1) throw std::runtime_error("unsupported checkpoint format");
  MultiBranchModel model;
  model.config = config_from_json(m.at("config"));
  model.enabled = {false, false, false};
  for (const auto& b : m.at("branches")) {
    const Domain d = parse_domain(b.at("domain").get<std::string>());
    BranchParams<float> p;
    p.domain = d;
    p.in_channels = b.at("in_channels").get<int>();
    const auto& layers = b.at("layers");
    const std::size_t nc = model.config.coarse_widths.size(), nr = model.config.refine_widths.size();
    if (layers.size() != nc + 1 + nr) throw std::runtime_error("checkpoint: layer count mismatch");
    for (std::size_t i = 0; i < nc; ++i) p.coarse.push_back(load_kernel(dir, layers[i]));
    p.coarse_head = load_kernel(dir, layers[nc]);
    for (std::size_t i = 0; i < nr; ++i) p.refine.push_back(load_kernel(dir, layers[nc + 1 + i]));
    model.branches[static_cast<int>(d)] = std::move(p);
    model.enabled[static_cast<int>(d)] = b.value("enabled", true);
  }
  if (info) {
    info->iteration = m.value("iteration", 0LL);
    info->seed = m.value("seed", std::uint64_t{0});
    info->note = m.value("note", std::string());
  }
  return model;
}

}  // namespace foa
