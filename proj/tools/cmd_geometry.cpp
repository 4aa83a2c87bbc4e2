#include <cstdio>
#include <fstream>
#include <memory>

#include <json.hpp>

#include "cli_common.hpp"
#include "foa/metric_error.hpp"

namespace foa::cli {

namespace {

using nlohmann::json;

json vec(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace

void register_geometry_commands(CLI::App& app, Context& ctx) {
  auto* geom = app.add_subcommand("geom", "registration error geometry");
  geom->require_subcommand(1);

  auto* verify = geom->add_subcommand(
      "verify", "Monte Carlo check of the closed forms and the 2h bound (exit 3 on failure)");
  struct VerifyOpts {
    long long trials = 100000;
    std::string out;
    bool parallel = false;
  };
  auto vo = std::make_shared<VerifyOpts>();
  verify->add_option("--trials", vo->trials, "number of random scenes")->capture_default_str();
  verify->add_option("--out,-o", vo->out, "per-scene CSV report");
  verify->add_flag("--parallel-baseline", vo->parallel, "keep baselines inside the plane");
  verify->callback([vo, &ctx] {
    ctx.action = [vo, &ctx] {
      MonteCarloOptions opt;
      opt.trials = vo->trials;
      opt.seed = ctx.seed;
      opt.threads = ctx.threads;
      opt.parallel_baseline = vo->parallel;
      opt.keep_rows = !vo->out.empty();
      const auto r = monte_carlo_bound_suite(opt);
      if (!vo->out.empty()) {
        std::ofstream out(vo->out);
        write_monte_carlo_csv(out, r);
      }
      const bool forms_ok = r.max_rel_plane <= 1e-9 && r.max_rel_camera <= 1e-9;
      const bool bound_ok = r.violations == 0;
      const bool proj_ok = r.max_bound_over_2f <= 1.0 + 1e-12;
      const json summary{{"trials", r.trials},
                         {"skipped", r.skipped},
                         {"precondition_hits", r.precondition_hits},
                         {"violations", r.violations},
                         {"worst_violation_ratio", r.worst_violation_ratio},
                         {"max_rel_plane", r.max_rel_plane},
                         {"max_rel_camera", r.max_rel_camera},
                         {"max_rel_literal", r.max_rel_literal},
                         {"literal_mismatches", r.literal_mismatches},
                         {"max_bound_over_2f", r.max_bound_over_2f},
                         {"projection_exceed", r.projection_exceed},
                         {"closed_forms_ok", forms_ok},
                         {"bound_ok", bound_ok},
                         {"projection_ok", proj_ok}};
      std::printf("%s\n", summary.dump(2).c_str());
      return forms_ok && bound_ok && proj_ok ? kOk : kCheckFailed;
    };
  });

  auto* bound = geom->add_subcommand("bound", "error, bound and diagnostics for one scene");
  struct BoundOpts {
    std::string normal = "0,0,1", x2 = "0,0,1", camera_a = "0,0,3", baseline = "0.5,0,0";
    double h = 1.0, focal = 350.0;
  };
  auto bo = std::make_shared<BoundOpts>();
  bound->add_option("--normal", bo->normal, "unit plane normal x,y,z")->capture_default_str();
  bound->add_option("--x2", bo->x2, "point x,y,z")->capture_default_str();
  bound->add_option("--height", bo->h, "height of x2 above the plane")->capture_default_str();
  bound->add_option("--camera-a", bo->camera_a, "camera A x,y,z")->capture_default_str();
  bound->add_option("--baseline", bo->baseline, "B - A as x,y,z")->capture_default_str();
  bound->add_option("--focal", bo->focal, "focal length (px)")->capture_default_str();
  bound->callback([bo, &ctx] {
    ctx.action = [bo] {
      CameraScene s;
      s.normal = parse_vec3(bo->normal);
      s.x2 = parse_vec3(bo->x2);
      s.h = bo->h;
      s.camera_a = parse_vec3(bo->camera_a);
      s.baseline = parse_vec3(bo->baseline);
      s.focal_px = bo->focal;
      check_scene(s);
      const auto oracle = metric_error_ray_oracle(s);
      const auto pf = metric_error_plane_frame(s);
      const auto cf = metric_error_camera_frame(s);
      const auto ob = check_bound_observation1(s);
      json out{{"e_w_ray", vec(oracle)},
               {"e_w_plane_frame", vec(pf.e_w)},
               {"e_w_camera_frame", vec(cf.e_w)},
               {"e_w_norm", oracle.norm()},
               {"e_a_px", pf.e_a},
               {"cos_theta", cf.cos_theta},
               {"cos_beta", cf.cos_beta},
               {"Q", cf.Q},
               {"preconditions_hold", ob.preconditions_hold},
               {"bound_2h", ob.bound},
               {"bound_violated", ob.violated}};
      if (cf.cos_theta >= 0) out["projection_bound_px"] = projection_error_bound(s);
      std::printf("%s\n", out.dump(2).c_str());
      return kOk;
    };
  });
}

}  // namespace foa::cli
