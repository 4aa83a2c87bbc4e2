#include <cstdio>

#include <spdlog/spdlog.h>

#include "cli_common.hpp"
#include "foa/parallel.hpp"

int main(int argc, char** argv) {
  using namespace foa::cli;
  CLI::App app{"foa: driver focus-of-attention toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Context ctx;
  std::string log_level = "info";
  app.add_option("--seed", ctx.seed, "seed for every random choice")->capture_default_str();
  app.add_option("--threads", ctx.threads, "worker threads (0 = hardware; 1 = deterministic)")
      ->capture_default_str();
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")
      ->capture_default_str();

  register_data_commands(app, ctx);
  register_geometry_commands(app, ctx);
  register_model_commands(app, ctx);
  register_bias_command(app, ctx);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  spdlog::set_level(spdlog::level::from_str(log_level));
  foa::set_default_threads(ctx.threads);
  if (!ctx.action) {
    std::fputs(app.help().c_str(), stderr);
    return kUsage;
  }
  try {
    return ctx.action();
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRuntime;
  }
}
