#include <cstdio>
#include <fstream>
#include <memory>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "cli_common.hpp"
#include "foa/checkpoint.hpp"
#include "foa/fixmap.hpp"
#include "foa/metrics.hpp"
#include "foa/shift_eval.hpp"
#include "foa/training.hpp"

namespace foa::cli {

namespace {

struct TrainOpts {
  std::string data, out, preset = "desk", model_config, crop = "random", log;
  int stride = 1;
  bool no_mirror = false;
  TrainConfig tc;
};

void add_train_options(CLI::App* cmd, TrainOpts& o) {
  cmd->add_option("--data,-d", o.data, "dataset directory")->required();
  cmd->add_option("--out,-o", o.out, "checkpoint directory")->required();
  cmd->add_option("--iterations", o.tc.iterations, "optimizer steps")->capture_default_str();
  cmd->add_option("--batch", o.tc.batch, "clips per step")->capture_default_str();
  cmd->add_option("--lr", o.tc.lr, "Adam learning rate")->capture_default_str();
  cmd->add_option("--crop", o.crop, "random or center")->capture_default_str();
  cmd->add_flag("--no-mirror", o.no_mirror, "disable horizontal mirroring");
  cmd->add_option("--stride", o.stride, "use every n-th training frame")->capture_default_str();
  cmd->add_option("--log", o.log, "loss CSV");
}

TrainConfig finish(const TrainOpts& o, const Context& ctx) {
  TrainConfig tc = o.tc;
  if (o.crop == "random") tc.crop = CropPolicy::Random;
  else if (o.crop == "center") tc.crop = CropPolicy::Center;
  else throw UsageError("--crop must be random or center");
  tc.mirror = !o.no_mirror;
  tc.seed = ctx.seed;
  tc.threads = ctx.threads;
  tc.log_csv = o.log;
  return tc;
}

void check_source(const ModelConfig& cfg, const std::vector<Sequence>& seqs) {
  for (const auto& s : seqs)
    if (s.size() != cfg.source_size)
      throw std::runtime_error(s.name + " has " + std::to_string(s.size()) +
                               " px frames but the model expects " +
                               std::to_string(cfg.source_size));
}

std::array<bool, kNumDomains> enabled_mask(const MultiBranchModel& m) {
  std::array<bool, kNumDomains> mask{};
  for (int d = 0; d < kNumDomains; ++d) mask[d] = m.has(static_cast<Domain>(d));
  return mask;
}

void add_train(CLI::App& app, Context& ctx) {
  auto* train = app.add_subcommand("train", "model training");
  train->require_subcommand(1);

  auto* branch = train->add_subcommand("branch", "pre-train one branch");
  auto bo = std::make_shared<TrainOpts>();
  bo->tc.batch = 32;
  bo->tc.lr = 1e-4;
  auto domain = std::make_shared<std::string>();
  add_train_options(branch, *bo);
  branch->add_option("--domain", *domain, "rgb, flow or seg")->required();
  branch->add_option("--preset", bo->preset, "model size: full or desk")->capture_default_str();
  branch->add_option("--model-config", bo->model_config, "model config JSON (overrides --preset)");
  branch->callback([bo, domain, &ctx] {
    ctx.action = [bo, domain, &ctx] {
      const Domain dom = parse_domain(*domain);
      ModelConfig cfg = bo->model_config.empty()
                            ? model_preset(bo->preset)
                            : model_config_from_json(read_text(bo->model_config));
      cfg.validate();
      const Split data = load_split(bo->data, ctx.threads);
      check_source(cfg, data.train);
      const auto samples = enumerate_samples(data.train, cfg.frames, bo->stride);
      auto params = BranchParams<float>::init(cfg, dom, domain_channels(dom), ctx.seed);
      const auto log = train_branch(cfg, params, data.train, samples, finish(*bo, ctx));
      MultiBranchModel m;
      m.config = cfg;
      m.branches[static_cast<int>(dom)] = std::move(params);
      save_checkpoint(bo->out, m,
                      {bo->tc.iterations, ctx.seed, std::string("branch ") + domain_name(dom)});
      if (!log.empty())
        std::printf("%s branch: final crop loss %.4f, resized loss %.4f\n", domain_name(dom),
                    log.back().crop, log.back().resized);
      return kOk;
    };
  });

  auto* fuse = train->add_subcommand("fuse", "fine-tune pre-trained branches jointly");
  auto fo = std::make_shared<TrainOpts>();
  fo->tc.batch = 4;
  fo->tc.lr = 1e-5;
  auto branches = std::make_shared<std::vector<std::string>>();
  add_train_options(fuse, *fo);
  fuse->add_option("--branch", *branches, "branch checkpoint (repeatable)")->required();
  fuse->callback([fo, branches, &ctx] {
    ctx.action = [fo, branches, &ctx] {
      MultiBranchModel m;
      std::string cfg_json;
      for (const auto& path : *branches) {
        const MultiBranchModel b = load_checkpoint(path);
        const std::string j = model_config_json(b.config);
        if (cfg_json.empty()) {
          m.config = b.config;
          cfg_json = j;
        } else if (j != cfg_json) {
          throw std::runtime_error(path + " uses a different model config");
        }
        for (int d = 0; d < kNumDomains; ++d)
          if (b.branches[d]) m.branches[d] = b.branches[d];
      }
      const Split data = load_split(fo->data, ctx.threads);
      check_source(m.config, data.train);
      const auto samples = enumerate_samples(data.train, m.config.frames, fo->stride);
      const auto log = finetune_fusion(m, data.train, samples, finish(*fo, ctx));
      save_checkpoint(fo->out, m, {fo->tc.iterations, ctx.seed, "fusion"});
      if (!log.empty())
        std::printf("fusion: final crop loss %.4f, resized loss %.4f\n", log.back().crop,
                    log.back().resized);
      return kOk;
    };
  });
}

void add_infer(CLI::App& app, Context& ctx) {
  auto* cmd = app.add_subcommand("infer", "predict the attention map of one clip");
  struct Opts {
    std::string checkpoint, clip, out;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--checkpoint,-c", o->checkpoint, "checkpoint directory")->required();
  cmd->add_option("--clip", o->clip, "SEQUENCE_DIR/FIRST..LAST, e.g. data/seq01/0000..0015")
      ->required();
  cmd->add_option("--out,-o", o->out, "output directory")->required();
  cmd->callback([o, &ctx] {
    ctx.action = [o, &ctx] {
      const auto slash = o->clip.find_last_of('/');
      if (slash == std::string::npos) throw UsageError("--clip needs SEQUENCE_DIR/FIRST..LAST");
      const auto [first, last] = parse_range(o->clip.substr(slash + 1));
      const MultiBranchModel m = load_checkpoint(o->checkpoint);
      if (last - first + 1 != m.config.frames)
        throw UsageError("clip has " + std::to_string(last - first + 1) +
                         " frames, the model expects " + std::to_string(m.config.frames));
      PrepareOptions popt;
      popt.threads = ctx.threads;
      const Sequence seq = prepare_sequence(read_sequence(o->clip.substr(0, slash)), popt);
      check_source(m.config, {seq});
      const FixationMap map = infer(m, inference_clips(seq, last, m.config, enabled_mask(m)));
      write_map_outputs(o->out, "map", map);
      std::printf("map %dx%d sum %.12f -> %s\n", map.height(), map.width(), map.sum(),
                  o->out.c_str());
      return kOk;
    };
  });
}

FixationMap pick_baseline(const std::string& kind, const Split& data, const ModelConfig& cfg,
                          int size) {
  if (kind == "central") return central_gaussian_baseline(size, size).map;
  if (kind == "mean")
    return training_mean_at(data.train, enumerate_samples(data.train, cfg.frames), size);
  throw UsageError("--baseline must be central or mean");
}

void add_metrics(CLI::App& app, Context& ctx) {
  auto* metrics = app.add_subcommand("metrics", "CC / KL / IG evaluation");
  metrics->require_subcommand(1);
  auto* eval = metrics->add_subcommand("eval", "score a model or precomputed maps on the test set");
  struct Opts {
    std::string data, checkpoint, pred, baseline = "mean", out, summary;
    int stride = 1;
  };
  auto o = std::make_shared<Opts>();
  eval->add_option("--data,-d", o->data, "dataset directory")->required();
  auto* ck = eval->add_option("--checkpoint,-c", o->checkpoint, "model checkpoint");
  auto* pr = eval->add_option("--pred", o->pred, "directory of SEQ/NNNN.foat predictions");
  ck->excludes(pr);
  eval->add_option("--baseline", o->baseline, "central or mean (training mean)")
      ->capture_default_str();
  eval->add_option("--stride", o->stride, "evaluate every n-th frame")->capture_default_str();
  eval->add_option("--out,-o", o->out, "per-frame CSV report (default: stdout)");
  eval->add_option("--summary", o->summary, "summary JSON");
  eval->callback([o, &ctx] {
    ctx.action = [o, &ctx] {
      if (o->checkpoint.empty() == o->pred.empty())
        throw UsageError("pass exactly one of --checkpoint and --pred");
      const Split data = load_split(o->data, ctx.threads);
      std::vector<MetricRow> rows;
      if (!o->checkpoint.empty()) {
        const MultiBranchModel m = load_checkpoint(o->checkpoint);
        check_source(m.config, data.test);
        const auto samples = enumerate_samples(data.test, m.config.frames, o->stride);
        rows = evaluate_model(m, data.test, samples,
                              pick_baseline(o->baseline, data, m.config, m.config.input_size),
                              ctx.threads);
      } else {
        std::optional<FixationMap> baseline;
        for (const auto& seq : data.test)
          for (int t = 0; t < seq.frames(); t += o->stride) {
            char name[16];
            std::snprintf(name, sizeof name, "%04d.foat", t);
            const auto path = std::filesystem::path(o->pred) / seq.name / name;
            if (!std::filesystem::exists(path)) continue;
            const FixationMap pred = load_map_sidecar(path);
            if (!baseline)
              baseline = pick_baseline(o->baseline, data, ModelConfig{.frames = 1}, pred.height());
            MetricRow r = compute_metric_row(pred, target_map(seq, t, pred.height()), *baseline);
            r.sequence = seq.name;
            r.frame = t;
            rows.push_back(r);
          }
        if (rows.empty()) throw std::runtime_error("no prediction files found in " + o->pred);
      }
      SequenceMetadata md;
      const auto meta = std::filesystem::path(o->data) / "metadata.csv";
      if (std::filesystem::exists(meta)) md = read_metadata_csv(meta);
      const MetricReport rep = build_report(std::move(rows), md);
      if (o->out.empty()) {
        write_report_csv(std::cout, rep);
      } else {
        std::ofstream out(o->out);
        write_report_csv(out, rep);
      }
      const std::string summary = report_summary_json(rep);
      if (!o->summary.empty()) std::ofstream(o->summary) << summary << '\n';
      std::fprintf(stderr, "%s\n", summary.c_str());
      return kOk;
    };
  });
}

void add_eval_shift(CLI::App& app, Context& ctx) {
  auto* ev = app.add_subcommand("eval", "robustness evaluations");
  ev->require_subcommand(1);
  auto* shift = ev->add_subcommand("shift", "KL against horizontal input shift");
  struct Opts {
    std::vector<std::string> models;
    std::string data, out, shifts;
    int stride = 4;
  };
  auto o = std::make_shared<Opts>();
  shift->add_option("--model,-m", o->models, "NAME=CHECKPOINT (repeatable)")->required();
  shift->add_option("--data,-d", o->data, "dataset directory")->required();
  shift->add_option("--out,-o", o->out, "output directory for shift.csv and shift.png")
      ->required();
  shift->add_option("--shifts", o->shifts, "comma-separated px shifts (default: -W/2..W/2, step W/8)");
  shift->add_option("--stride", o->stride, "evaluate every n-th test frame")->capture_default_str();
  shift->callback([o, &ctx] {
    ctx.action = [o, &ctx] {
      const Split data = load_split(o->data, ctx.threads);
      std::vector<ShiftCurve> curves;
      for (const auto& spec : o->models) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos) throw UsageError("--model needs NAME=CHECKPOINT");
        const MultiBranchModel m = load_checkpoint(spec.substr(eq + 1));
        check_source(m.config, data.test);
        const int W = m.config.input_size;
        std::vector<int> shifts;
        if (o->shifts.empty()) {
          for (int s = -W / 2; s <= W / 2; s += std::max(1, W / 8)) shifts.push_back(s);
        } else {
          shifts = parse_int_list(o->shifts);
        }
        const auto mask = enabled_mask(m);
        std::vector<DomainClips> clips;
        std::vector<FixationMap> targets;
        for (const auto& s : enumerate_samples(data.test, m.config.frames, o->stride)) {
          clips.push_back(inference_clips(data.test[s.sequence], s.frame, m.config, mask));
          targets.push_back(target_map(data.test[s.sequence], s.frame, W));
        }
        const Predictor pred = [&m](const DomainClips& c) { return infer(m, c); };
        curves.push_back({spec.substr(0, eq),
                          shift_robustness_eval(pred, clips, targets, shifts, ctx.threads)});
      }
      std::filesystem::create_directories(o->out);
      std::ofstream csv(std::filesystem::path(o->out) / "shift.csv");
      write_shift_csv(csv, curves);
      write_shift_plot(std::filesystem::path(o->out) / "shift.png", curves);
      write_shift_csv(std::cout, curves);
      return kOk;
    };
  });
}

}  // namespace

void register_model_commands(CLI::App& app, Context& ctx) {
  add_train(app, ctx);
  add_infer(app, ctx);
  add_metrics(app, ctx);
  add_eval_shift(app, ctx);
}

}  // namespace foa::cli
