#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "foa/fixation_map.hpp"
#include "foa/kl_loss.hpp"

namespace foa {

/// Sample Pearson correlation over pixels (two-pass). Throws
/// std::invalid_argument on shape mismatch and std::domain_error when either
/// map has zero variance.
double pearson_cc(const FixationMap& a, const FixationMap& b);

/// Value of kl_loss(gt, pred, eps).
double eval_kl(const FixationMap& gt, const FixationMap& pred,
               double eps = kDefaultEps);

enum class BaselineKind { CentralGaussian, TrainingMean };

struct BaselineMap {
  BaselineKind kind = BaselineKind::CentralGaussian;
  FixationMap map;
};

/// Isotropic Gaussian at the map centre with sigma = sigma_fraction * height.
BaselineMap central_gaussian_baseline(int height, int width,
                                      double sigma_fraction = 1.0 / 6.0);
BaselineMap training_mean_baseline(std::span<const FixationMap> train_maps);

/// (1/N) sum_i Y_i (log2(eps + P_i) - log2(eps + B_i)) where Y is the ground
/// truth normalized to sum 1 and scaled by N, i.e. sum_i y_i (...).
/// pred and baseline are normalized internally.
double info_gain(const FixationMap& pred, const FixationMap& gt,
                 const FixationMap& baseline, double eps = kDefaultEps);

struct MetricRow {
  std::string sequence;
  int frame = 0;
  double cc = 0.0;  // NaN when undefined
  double kl = 0.0;
  double ig = 0.0;
};

MetricRow compute_metric_row(const FixationMap& pred, const FixationMap& gt,
                             const FixationMap& baseline,
                             double eps = kDefaultEps);

struct MetricAggregate {
  double cc = 0.0, kl = 0.0, ig = 0.0;
  int count = 0;     // rows
  int cc_count = 0;  // rows with a defined CC
};

/// sequence -> {daytime, weather, landscape, driver, set}
using SequenceMetadata = std::map<std::string, std::map<std::string, std::string>>;

struct MetricReport {
  std::vector<MetricRow> rows;
  MetricAggregate overall;
  /// condition key -> condition value -> aggregate
  std::map<std::string, std::map<std::string, MetricAggregate>> by_condition;
};

MetricAggregate aggregate_rows(std::span<const MetricRow> rows);
MetricReport build_report(std::vector<MetricRow> rows,
                          const SequenceMetadata& metadata = {});

/// Header `sequence,daytime,weather,landscape,driver,set`.
SequenceMetadata read_metadata_csv(const std::filesystem::path& path);
void write_metadata_csv(const std::filesystem::path& path,
                        const SequenceMetadata& metadata);

void write_report_csv(std::ostream& out, const MetricReport& r);
std::string report_summary_json(const MetricReport& r);

}  // namespace foa
