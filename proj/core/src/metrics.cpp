#include "foa/metrics.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace foa {

double pearson_cc(const FixationMap& a, const FixationMap& b) {
  if (!a.same_shape(b) || a.empty()) {
    throw std::invalid_argument("pearson_cc: shape mismatch");
  }
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) {
    throw std::domain_error("pearson_cc: zero-variance input");
  }
  return sab / std::sqrt(saa * sbb);
}

double eval_kl(const FixationMap& gt, const FixationMap& pred, double eps) {
  return kl_loss(gt, pred, eps, false).loss;
}

BaselineMap central_gaussian_baseline(int height, int width, double sigma_fraction) {
  if (!(sigma_fraction > 0.0)) throw std::invalid_argument("central baseline: sigma must be > 0");
  const double sigma = sigma_fraction * height;
  const double cy = (height - 1) / 2.0, cx = (width - 1) / 2.0;
  FixationMap m(height, width);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
      m.at(y, x) = std::exp(-0.5 * d2 / (sigma * sigma));
    }
  return {BaselineKind::CentralGaussian, normalize_map(m)};
}

BaselineMap training_mean_baseline(std::span<const FixationMap> train_maps) {
  if (train_maps.empty()) throw std::invalid_argument("training mean baseline: no maps");
  FixationMap acc(train_maps[0].height(), train_maps[0].width(), 0.0);
  for (const FixationMap& m : train_maps) {
    if (!m.same_shape(acc)) throw std::invalid_argument("training mean baseline: shape mismatch");
    const double s = m.sum();
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += m[i] / s;
  }
  return {BaselineKind::TrainingMean, normalize_map(acc)};
}

double info_gain(const FixationMap& pred, const FixationMap& gt,
                 const FixationMap& baseline, double eps) {
  if (!pred.same_shape(gt) || !pred.same_shape(baseline)) {
    throw std::invalid_argument("info_gain: shape mismatch");
  }
  const FixationMap y = normalize_map(gt);
  const double ps = pred.sum(), bs = baseline.sum();
  if (!(ps > 0.0) || !(bs > 0.0)) throw std::domain_error("info_gain: zero-mass input");
  double ig = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] == 0.0) continue;
    ig += y[i] * (std::log2(eps + pred[i] / ps) - std::log2(eps + baseline[i] / bs));
  }
  return ig;
}

MetricRow compute_metric_row(const FixationMap& pred, const FixationMap& gt,
                             const FixationMap& baseline, double eps) {
  MetricRow r;
  try {
    r.cc = pearson_cc(pred, gt);
  } catch (const std::domain_error&) {
    r.cc = std::numeric_limits<double>::quiet_NaN();
  }
  r.kl = eval_kl(gt, pred, eps);
  r.ig = info_gain(pred, gt, baseline, eps);
  return r;
}

MetricAggregate aggregate_rows(std::span<const MetricRow> rows) {
  MetricAggregate a;
  for (const MetricRow& r : rows) {
    ++a.count;
    a.kl += r.kl;
    a.ig += r.ig;
    if (std::isfinite(r.cc)) {
      ++a.cc_count;
      a.cc += r.cc;
    }
  }
  if (a.count > 0) {
    a.kl /= a.count;
    a.ig /= a.count;
  }
  a.cc = a.cc_count > 0 ? a.cc / a.cc_count : std::numeric_limits<double>::quiet_NaN();
  return a;
}

MetricReport build_report(std::vector<MetricRow> rows, const SequenceMetadata& metadata) {
  MetricReport rep;
  rep.rows = std::move(rows);
  rep.overall = aggregate_rows(rep.rows);
  std::map<std::string, std::map<std::string, std::vector<MetricRow>>> groups;
  for (const MetricRow& r : rep.rows) {
    auto it = metadata.find(r.sequence);
    if (it == metadata.end()) continue;
    for (const auto& [key, value] : it->second) groups[key][value].push_back(r);
  }
  for (const auto& [key, values] : groups)
    for (const auto& [value, members] : values)
      rep.by_condition[key][value] = aggregate_rows(members);
  return rep;
}

namespace {
const std::vector<std::string> kMetadataColumns = {"daytime", "weather", "landscape",
                                                   "driver", "set"};
}

SequenceMetadata read_metadata_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "sequence,daytime,weather,landscape,driver,set") {
    throw std::runtime_error(path.string() +
                             ": expected header sequence,daytime,weather,landscape,driver,set");
  }
  SequenceMetadata md;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6) throw std::runtime_error(path.string() + ": malformed row '" + line + "'");
    auto& entry = md[cells[0]];
    for (std::size_t k = 0; k < kMetadataColumns.size(); ++k) entry[kMetadataColumns[k]] = cells[k + 1];
  }
  return md;
}

void write_metadata_csv(const std::filesystem::path& path, const SequenceMetadata& metadata) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "sequence,daytime,weather,landscape,driver,set\n";
  for (const auto& [seq, cols] : metadata) {
    out << seq;
    for (const auto& k : kMetadataColumns) {
      auto it = cols.find(k);
      out << ',' << (it == cols.end() ? "" : it->second);
    }
    out << '\n';
  }
}

void write_report_csv(std::ostream& out, const MetricReport& r) {
  out << "sequence,frame,cc,kl,ig\n";
  out.precision(12);
  for (const MetricRow& row : r.rows) {
    out << row.sequence << ',' << row.frame << ',' << row.cc << ',' << row.kl << ','
        << row.ig << '\n';
  }
}

namespace {
nlohmann::json agg_json(const MetricAggregate& a) {
  nlohmann::json j = {{"kl", a.kl}, {"ig", a.ig}, {"count", a.count}, {"cc_count", a.cc_count}};
  j["cc"] = std::isfinite(a.cc) ? nlohmann::json(a.cc) : nlohmann::json(nullptr);
  return j;
}
}  // namespace

std::string report_summary_json(const MetricReport& r) {
  nlohmann::json j;
  j["overall"] = agg_json(r.overall);
  j["by_condition"] = nlohmann::json::object();
  for (const auto& [key, values] : r.by_condition)
    for (const auto& [value, agg] : values) j["by_condition"][key][value] = agg_json(agg);
  return j.dump(2);
}

}  // namespace foa
