#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "cli_common.hpp"
#include "foa/analysis.hpp"
#include "foa/checkpoint.hpp"
#include "foa/fixmap.hpp"
#include "foa/foveation.hpp"
#include "foa/image_io.hpp"
#include "foa/synthetic.hpp"
#include "foa/training.hpp"

namespace foa::cli {

namespace {

using nlohmann::json;

void add_synth(CLI::App& parent, Context& ctx) {
  auto* synth = parent.add_subcommand("synth", "synthetic driving scenes");
  synth->require_subcommand(1);
  auto* gen = synth->add_subcommand("generate", "write a seeded synthetic dataset");
  struct Opts {
    std::string out, scenario = "drive";
    SyntheticSpec spec;
  };
  auto o = std::make_shared<Opts>();
  gen->add_option("--out,-o", o->out, "output directory")->required();
  gen->add_option("--sequences", o->spec.sequences, "number of sequences")->capture_default_str();
  gen->add_option("--frames", o->spec.frames, "frames per sequence")->capture_default_str();
  gen->add_option("--size", o->spec.size, "rendered frame side (px)")->capture_default_str();
  gen->add_option("--scenario", o->scenario, "drive, drift, speed or semantic")
      ->capture_default_str();
  gen->add_option("--drift-length", o->spec.drift_length, "scripted glance length (frames)")
      ->capture_default_str();
  gen->callback([o, &ctx] {
    ctx.action = [o, &ctx] {
      o->spec.seed = ctx.seed;
      o->spec.scenario = parse_scenario(o->scenario);
      write_synthetic_dataset(o->out, o->spec);
      std::printf("wrote %d %s sequences to %s\n", o->spec.sequences, o->scenario.c_str(),
                  o->out.c_str());
      return kOk;
    };
  });
}

void add_fixmap(CLI::App& parent, Context& ctx) {
  auto* fx = parent.add_subcommand("fixmap", "fixation maps from gaze records");
  fx->require_subcommand(1);
  auto* build = fx->add_subcommand("build", "build normalized fixation maps");
  struct Opts {
    std::string gaze, out, homographies;
    int frames = 0, height = 0, width = 0, frame = -1;
    FixmapConfig cfg;
  };
  auto o = std::make_shared<Opts>();
  build->add_option("--gaze", o->gaze, "gaze CSV (frame_id,x,y,valid)")->required();
  build->add_option("--height", o->height, "map height")->required();
  build->add_option("--width", o->width, "map width")->required();
  build->add_option("--out,-o", o->out, "output directory")->required();
  build->add_option("--frame", o->frame, "single target frame (default: every frame)");
  build->add_option("--frames", o->frames, "sequence length (default: from the gaze file)");
  build->add_option("--homographies", o->homographies,
                    "registration window JSON for --frame (default: identity)");
  build->add_option("--window", o->cfg.window, "temporal window k")->capture_default_str();
  build->add_option("--sigma2", o->cfg.sigma2, "Gaussian variance (gaze px^2)")
      ->capture_default_str();
  build->add_option("--coord-scale", o->cfg.coord_scale, "map px per gaze px")
      ->capture_default_str();
  build->callback([o, &ctx] {
    ctx.action = [o, &ctx] {
      const auto gaze = read_gaze_csv(o->gaze);
      if (o->frame >= 0) {
        HomographyWindow homs;
        if (!o->homographies.empty()) homs = load_homography_window(o->homographies);
        const auto m = build_fixation_map(gaze, o->frame, homs, o->cfg, o->height, o->width);
        char stem[16];
        std::snprintf(stem, sizeof stem, "%04d", o->frame);
        write_map_outputs(o->out, stem, m);
        return kOk;
      }
      if (!o->homographies.empty()) throw UsageError("--homographies requires --frame");
      int n = o->frames;
      for (const auto& g : gaze) n = std::max(n, g.frame_id + 1);
      const auto maps = build_sequence_maps(gaze, n, o->cfg, o->height, o->width, ctx.threads);
      for (int t = 0; t < n; ++t) {
        char stem[16];
        std::snprintf(stem, sizeof stem, "%04d", t);
        write_map_outputs(o->out, stem, maps[t]);
      }
      std::printf("wrote %d maps to %s\n", n, o->out.c_str());
      return kOk;
    };
  });
}

struct RawAndPrepared {
  std::vector<SyntheticSequence> raw;
  std::vector<Sequence> prepared;
};

RawAndPrepared load_all(const std::string& dir, int threads) {
  RawAndPrepared r;
  PrepareOptions opt;
  opt.threads = threads;
  for (const auto& d : sequence_dirs(dir)) {
    r.raw.push_back(read_sequence(d));
    r.prepared.push_back(prepare_sequence(r.raw.back(), opt));
  }
  return r;
}

void add_analyze(CLI::App& parent, Context& ctx) {
  auto* an = parent.add_subcommand("analyze", "dataset analyses");
  an->require_subcommand(1);

  auto* speed = an->add_subcommand("speed", "gaze spread per speed bin");
  struct SpeedOpts {
    std::string data, out, edges;
  };
  auto so = std::make_shared<SpeedOpts>();
  speed->add_option("--data,-d", so->data, "dataset directory")->required();
  speed->add_option("--out,-o", so->out, "CSV output (default: stdout)");
  speed->add_option("--edges", so->edges, "bin edges a,b,c (default: from the dataset)");
  speed->callback([so, &ctx] {
    ctx.action = [so, &ctx] {
      const auto d = load_all(so->data, ctx.threads);
      std::vector<FixationMap> maps;
      std::vector<double> speeds, edges;
      for (std::size_t i = 0; i < d.prepared.size(); ++i) {
        maps.insert(maps.end(), d.prepared[i].maps.begin(), d.prepared[i].maps.end());
        speeds.insert(speeds.end(), d.prepared[i].speed.begin(), d.prepared[i].speed.end());
        if (edges.empty()) edges = d.raw[i].speed_bin_edges;
      }
      if (!so->edges.empty()) {
        edges = parse_double_list(so->edges);
      }
      if (edges.size() < 2) throw UsageError("no speed bin edges; pass --edges");
      const auto bins = speed_bin_spread(maps, speeds, edges);
      std::ofstream file;
      if (!so->out.empty()) file.open(so->out);
      std::ostream& out = so->out.empty() ? std::cout : file;
      out << "lo,hi,frames,mean_x,mean_y,cov_xx,cov_xy,cov_yy,det\n";
      for (const auto& b : bins)
        out << b.lo << ',' << b.hi << ',' << b.frames << ',' << b.spread.mean.x() << ','
            << b.spread.mean.y() << ',' << b.spread.cov(0, 0) << ',' << b.spread.cov(0, 1) << ','
            << b.spread.cov(1, 1) << ',' << b.spread.det << '\n';
      return kOk;
    };
  });

  auto* sem = an->add_subcommand("semantics", "class proportions inside thresholded maps");
  struct SemOpts {
    std::string data, out;
    int thresholds = 9;
  };
  auto mo = std::make_shared<SemOpts>();
  sem->add_option("--data,-d", mo->data, "dataset directory")->required();
  sem->add_option("--out,-o", mo->out, "CSV output (default: stdout)");
  sem->add_option("--thresholds", mo->thresholds, "number of thresholds")->capture_default_str();
  sem->callback([mo, &ctx] {
    ctx.action = [mo, &ctx] {
      const auto d = load_all(mo->data, ctx.threads);
      std::vector<FixationMap> maps;
      std::vector<LabelMap> labels;
      for (const auto& s : d.prepared) {
        maps.insert(maps.end(), s.maps.begin(), s.maps.end());
        labels.insert(labels.end(), s.labels.begin(), s.labels.end());
      }
      const auto h = semantic_threshold_histogram(maps, labels, mo->thresholds, cls::kCount);
      std::ofstream file;
      if (!mo->out.empty()) file.open(mo->out);
      std::ostream& out = mo->out.empty() ? std::cout : file;
      out << "class,threshold,count,proportion\n";
      for (int c = 0; c < h.num_classes; ++c)
        for (std::size_t k = 0; k < h.thresholds.size(); ++k)
          out << c << ',' << h.thresholds[k] << ',' << h.counts[c][k] << ','
              << h.proportions[c][k] << '\n';
      json trends;
      for (int c = 0; c < h.num_classes; ++c) {
        double total = 0;
        for (double v : h.counts[c]) total += v;
        if (total > 0) trends[std::to_string(c)] = curve_trend(h, c);
      }
      std::fprintf(stderr, "%s\n", json{{"trend_by_class", trends}}.dump().c_str());
      return kOk;
    };
  });
}

void add_foveate(CLI::App& app, Context& ctx) {
  auto* fv = app.add_subcommand("foveate", "foveated rendering driven by attention maps");
  struct Opts {
    std::string data, sequence, checkpoint, out, frames;
    double ppd = 10.0;
    int points = 25, levels = 5;
  };
  auto o = std::make_shared<Opts>();
  fv->add_option("--data,-d", o->data, "dataset directory")->required();
  fv->add_option("--sequence", o->sequence, "sequence name, e.g. seq03")->required();
  fv->add_option("--out,-o", o->out, "output directory")->required();
  fv->add_option("--checkpoint", o->checkpoint,
                 "drive foveation with model predictions instead of ground truth");
  fv->add_option("--frames", o->frames, "frame range a..b (default: all usable frames)");
  fv->add_option("--ppd", o->ppd, "pixels per visual degree")->capture_default_str();
  fv->add_option("--points", o->points, "fixation points per frame")->capture_default_str();
  fv->add_option("--levels", o->levels, "pyramid levels")->capture_default_str();
  fv->callback([o, &ctx] {
    ctx.action = [o, &ctx] {
      PrepareOptions popt;
      popt.threads = ctx.threads;
      const auto raw = read_sequence(std::filesystem::path(o->data) / o->sequence);
      const Sequence seq = prepare_sequence(raw, popt);
      std::optional<MultiBranchModel> model;
      std::array<bool, kNumDomains> mask{};
      int first = 0;
      if (!o->checkpoint.empty()) {
        model = load_checkpoint(o->checkpoint);
        for (int d = 0; d < kNumDomains; ++d) mask[d] = model->has(static_cast<Domain>(d));
        first = model->config.frames - 1;
      }
      auto [a, b] = o->frames.empty() ? std::pair{first, seq.frames() - 1} : parse_range(o->frames);
      if (a < first || b >= seq.frames()) throw UsageError("--frames outside the usable range");
      const int S = seq.size();
      std::vector<FixationMap> res_maps;
      for (int t = a; t <= b; ++t) {
        std::vector<PixelPoint> pts;
        if (model) {
          const auto pred = infer(*model, inference_clips(seq, t, model->config, mask));
          const double scale = double(S) / pred.width();
          for (auto p : extract_fixation_points(pred, o->points))
            pts.push_back({std::min(S - 1, int((p.x + 0.5) * scale)),
                           std::min(S - 1, int((p.y + 0.5) * scale))});
        } else {
          pts = extract_fixation_points(seq.maps[t], o->points);
        }
        const auto res = build_resolution_map(pts, o->ppd, S, S);
        const auto frame = take_frame(raw.rgb, t);
        const auto fov = foveate_frame(frame, res, o->levels);
        char stem[32];
        std::snprintf(stem, sizeof stem, "%04d", t);
        std::filesystem::create_directories(std::filesystem::path(o->out) / "frames");
        std::filesystem::create_directories(std::filesystem::path(o->out) / "resolution");
        write_png(std::filesystem::path(o->out) / "frames" / (std::string(stem) + ".png"),
                  to_image(fov));
        Image8 r{S, S, 1, std::vector<std::uint8_t>(static_cast<std::size_t>(S) * S)};
        for (std::size_t i = 0; i < res.size(); ++i)
          r.pixels[i] = static_cast<std::uint8_t>(std::lround(res[i]));
        write_png(std::filesystem::path(o->out) / "resolution" / (std::string(stem) + ".png"), r);
        res_maps.push_back(res);
      }
      const auto avg = average_resolution(res_maps);
      const json summary{{"frames", res_maps.size()},
                         {"frame_sum_mean", avg.frame_sum_mean},
                         {"pixel_mean", avg.pixel_mean}};
      std::ofstream(std::filesystem::path(o->out) / "summary.json") << summary.dump(2) << '\n';
      std::printf("%s\n", summary.dump().c_str());
      return kOk;
    };
  });
}

}  // namespace

void register_data_commands(CLI::App& app, Context& ctx) {
  add_synth(app, ctx);
  add_fixmap(app, ctx);
  add_analyze(app, ctx);
  add_foveate(app, ctx);
}

}  // namespace foa::cli
