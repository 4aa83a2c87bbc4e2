#include <cstdio>
#include <fstream>
#include <memory>

#include "cli_common.hpp"
#include "foa/bias_lab.hpp"

namespace foa::cli {

void register_bias_command(CLI::App& app, Context& ctx) {
  auto* bias = app.add_subcommand("bias", "centre-bias receptive field experiment");
  bias->require_subcommand(1);
  auto* run = bias->add_subcommand("run", "train the probe arms and write the report");
  struct Opts {
    std::string config, out = "bias_out", dump;
    int iterations = 0, batch = 0;
  };
  auto o = std::make_shared<Opts>();
  run->add_option("--config", o->config, "experiment config JSON (default: built-in)");
  run->add_option("--out,-o", o->out, "output directory")->capture_default_str();
  run->add_option("--iterations", o->iterations, "override the configured iterations");
  run->add_option("--batch", o->batch, "override the configured batch size");
  run->add_option("--dump-config", o->dump, "write the effective config JSON here and exit");
  run->callback([o, &ctx] {
    ctx.action = [o, &ctx] {
      BiasExperimentConfig cfg;
      if (!o->config.empty()) cfg = bias_config_from_json(read_text(o->config));
      if (o->iterations > 0) cfg.iterations = o->iterations;
      if (o->batch > 0) cfg.batch = o->batch;
      cfg.seed = ctx.seed;
      cfg.threads = ctx.threads;
      cfg.validate();
      if (!o->dump.empty()) {
        std::ofstream(o->dump) << bias_config_to_json(cfg) << '\n';
        return kOk;
      }
      const BiasReport rep = run_bias_experiment(cfg);
      write_bias_outputs(o->out, rep);
      std::printf("minimum receptive field %d; constant-mean mse %.4e\n", rep.min_rf,
                  rep.constant_mean_mse);
      for (const auto& a : rep.arms)
        std::printf("%-20s rf %3d params %6lld final mse %.4e centred %s%s\n", a.name.c_str(),
                    a.rf, a.params, a.final_mse, a.top_is_bias_square ? "yes" : "no",
                    a.diverged ? " (diverged)" : "");
      return kOk;
    };
  });
}

}  // namespace foa::cli
