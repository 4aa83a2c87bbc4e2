#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "foa/analysis.hpp"
#include "foa/fixmap.hpp"
#include "foa/tensor.hpp"

namespace foa {

/// Cityscapes-style class ids used by the generator.
namespace cls {
inline constexpr int kRoad = 0, kSidewalk = 1, kBuilding = 2, kPole = 5, kSign = 7,
                     kVegetation = 8, kTerrain = 9, kSky = 10, kPerson = 11, kCar = 13;
inline constexpr int kCount = 19;
}  // namespace cls

enum class Scenario {
  Drive,      // gaze tracks the lead vehicle
  Drift,      // Drive plus one scripted glance at a roadside sign
  SpeedBins,  // gaze scatter around the vanishing point shrinks with speed
  Semantic,   // gaze on a distant lead vehicle near the horizon
};

Scenario parse_scenario(const std::string& name);
const char* scenario_name(Scenario s);

struct SyntheticSpec {
  int sequences = 4;
  int frames = 160;
  int size = 64;              // rendered frame side
  double native_size = 256;   // side of the gaze coordinate frame
  std::uint64_t seed = 1;
  Scenario scenario = Scenario::Drive;
  int drift_length = 20;
  /// Gaze scatter (native px) per speed bin, slowest bin first.
  std::vector<double> bin_sigmas{60, 40, 25, 15, 8};
};

struct SyntheticSequence {
  std::string name;
  Scenario scenario = Scenario::Drive;
  int size = 0;
  double native_size = 0;
  Tensor<float> rgb;   // (N, S, S, 3) in [0, 1]
  Tensor<float> flow;  // (N, S, S, 2) displacement since the previous frame, px
  std::vector<LabelMap> labels;
  std::vector<GazeRecord> gaze;  // native coordinates, one per frame
  std::vector<double> speed;
  int drift_start = -1;  // scripted glance window [start, end], or -1
  int drift_end = -1;
  std::vector<double> speed_bin_edges;
  int attended_class = cls::kCar;
  int peripheral_class = cls::kSky;

  int frames() const { return rgb.frames(); }
};

/// Deterministic in (spec, index).
SyntheticSequence generate_sequence(const SyntheticSpec& spec, int index);

/// Directory layout: metadata.csv and seqNN/ holding frames/NNNN.png,
/// labels/NNNN.png, flow.foat, gaze.csv, speed.csv and script.json.
void write_synthetic_dataset(const std::filesystem::path& dir, const SyntheticSpec& spec);
void write_sequence(const std::filesystem::path& dir, const SyntheticSequence& seq);
SyntheticSequence read_sequence(const std::filesystem::path& dir);

}  // namespace foa
