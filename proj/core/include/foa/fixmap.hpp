#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "foa/fixation_map.hpp"
#include "foa/homography.hpp"

namespace foa {

struct GazeRecord {
  int frame_id = 0;
  double x = 0.0;  // px in the frame's own image plane
  double y = 0.0;
  bool valid = true;
};

struct FixmapConfig {
  int window = 25;        // k; offsets -k/2 .. k/2
  double sigma2 = 200.0;  // px^2 in gaze coordinates
  /// Map pixels per gaze-coordinate pixel. sigma scales along with it.
  double coord_scale = 1.0;
};

/// H_{t+i}^t for one target frame t, keyed by the offset i.
using HomographyWindow = std::map<int, Homography>;

/// max over the window of isotropic Gaussians centred at the registered gaze
/// points, evaluated at pixel centres (x = column, y = row). Records outside
/// [t - k/2, t + k/2] and invalid records are ignored. An empty `homs`
/// means identity registration; otherwise every used offset must be present.
/// With no usable record the result is uniform and a warning is logged.
FixationMap build_fixation_map(std::span<const GazeRecord> gaze, int t,
                               const HomographyWindow& homs,
                               const FixmapConfig& cfg, int height, int width,
                               bool normalize = true);

/// One map per frame of a sequence whose gaze is indexed by frame, with
/// identity registration (static camera). Frames are processed in parallel.
std::vector<FixationMap> build_sequence_maps(std::span<const GazeRecord> gaze,
                                             int num_frames,
                                             const FixmapConfig& cfg,
                                             int height, int width,
                                             int threads = 0);

/// Normalized mean of the given maps.
FixationMap mean_map(std::span<const FixationMap> maps);

/// Maximal runs [start, end] (inclusive) of frames whose CC against `mean`
/// is below `threshold`. Frames whose CC is undefined count as drift.
std::vector<std::pair<int, int>> label_drift_subsequences(
    std::span<const FixationMap> maps, const FixationMap& mean,
    double threshold = 0.3);

std::vector<GazeRecord> read_gaze_csv(const std::filesystem::path& path);
void write_gaze_csv(const std::filesystem::path& path,
                    std::span<const GazeRecord> gaze);

/// JSON array [{"offset": i, "H": [9 numbers]}, ...].
HomographyWindow load_homography_window(const std::filesystem::path& path);
void save_homography_window(const std::filesystem::path& path,
                            const HomographyWindow& homs);

/// 16-bit grayscale PNG scaled so the map maximum is 65535, plus an exact
/// double-precision sidecar `<stem>.foat` next to it.
void export_map(const std::filesystem::path& png_path, const FixationMap& map);
FixationMap load_map_sidecar(const std::filesystem::path& foat_path);

}  // namespace foa
