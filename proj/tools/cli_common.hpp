#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Core>

#include "foa/dataset.hpp"
#include "foa/model.hpp"

namespace foa::cli {

enum ExitCode { kOk = 0, kUsage = 1, kRuntime = 2, kCheckFailed = 3 };

/// Thrown for argument combinations CLI11 cannot validate on its own.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Context {
  std::uint64_t seed = 0;
  int threads = 0;
  std::function<int()> action;
};

void register_data_commands(CLI::App& app, Context& ctx);
void register_geometry_commands(CLI::App& app, Context& ctx);
void register_model_commands(CLI::App& app, Context& ctx);
void register_bias_command(CLI::App& app, Context& ctx);

Eigen::Vector3d parse_vec3(const std::string& text);
std::vector<int> parse_int_list(const std::string& text);
std::vector<double> parse_double_list(const std::string& text);
/// "a..b" inclusive.
std::pair<int, int> parse_range(const std::string& text);
Domain parse_domain(const std::string& name);

/// Sequence directories below `dir` (those holding script.json), sorted.
std::vector<std::filesystem::path> sequence_dirs(const std::filesystem::path& dir);

struct Split {
  std::vector<Sequence> train, test;
};
/// Splits by the `set` column of metadata.csv; without it the last quarter
/// (at least one sequence) is the test set.
Split load_split(const std::filesystem::path& dir, int threads);

/// `full` (full-size defaults) or `desk`.
ModelConfig model_preset(const std::string& name);

/// Writes map.png (16 bit), map.foat and heatmap.png into `dir` under `stem`.
void write_map_outputs(const std::filesystem::path& dir, const std::string& stem,
                       const FixationMap& map);

std::string read_text(const std::filesystem::path& path);

}  // namespace foa::cli
