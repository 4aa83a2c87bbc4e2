#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

#include "foa/fixation_map.hpp"

namespace foa {

struct GaussianSpread {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();  // (x, y) in px
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();   // population moments
  double det = 0.0;
  bool degenerate = false;  // det <= 0: all mass on a point or a line
};

/// Moment-matched Gaussian of a map treated as a distribution over pixel
/// centres. The map is normalized internally.
GaussianSpread fit_gaussian_spread(const FixationMap& map);

struct SpeedBinSpread {
  double lo = 0.0, hi = 0.0;  // [lo, hi)
  int frames = 0;
  GaussianSpread spread;
};

/// Groups frames by speed into bins [edges[i], edges[i+1]), averages the
/// maps of each bin and fits the spread of the averaged map. Empty bins are
/// reported with frames = 0 and a degenerate spread.
std::vector<SpeedBinSpread> speed_bin_spread(std::span<const FixationMap> maps,
                                             std::span<const double> speeds,
                                             std::span<const double> edges);

/// Integer class ids, row-major.
struct LabelMap {
  int height = 0;
  int width = 0;
  std::vector<int> ids;
};

struct SemanticHistogram {
  int num_classes = 0;
  std::vector<double> thresholds;  // k / (n + 1), k = 1..n
  /// counts[c][k]: pixels of class c inside mask k, summed over frames.
  std::vector<std::vector<double>> counts;
  /// proportions[c][k] = counts[c][k] / sum_c counts[c][k] (0 for empty masks).
  std::vector<std::vector<double>> proportions;
};

/// Each map is divided by its maximum, then mask k = {value >= threshold_k}.
/// Throws std::out_of_range for a label outside [0, num_classes).
SemanticHistogram semantic_threshold_histogram(std::span<const FixationMap> maps,
                                               std::span<const LabelMap> labels,
                                               int n_thresholds = 9,
                                               int num_classes = 19);

/// Least-squares slope of a class curve against the threshold values.
double curve_trend(const SemanticHistogram& h, int class_id);

/// Kendall tau-b. Throws std::invalid_argument for length < 2, unequal
/// lengths, or a constant series.
double kendall_tau_b(std::span<const double> a, std::span<const double> b);

}  // namespace foa
