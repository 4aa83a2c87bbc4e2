#include "foa/analysis.hpp"

#include <Eigen/LU>

#include <cmath>
#include <stdexcept>
#include <string>

namespace foa {

GaussianSpread fit_gaussian_spread(const FixationMap& map) {
  const FixationMap p = normalize_map(map);
  GaussianSpread g;
  for (int y = 0; y < p.height(); ++y)
    for (int x = 0; x < p.width(); ++x) g.mean += p.at(y, x) * Eigen::Vector2d(x, y);
  for (int y = 0; y < p.height(); ++y)
    for (int x = 0; x < p.width(); ++x) {
      const Eigen::Vector2d d = Eigen::Vector2d(x, y) - g.mean;
      g.cov += p.at(y, x) * d * d.transpose();
    }
  g.det = g.cov.determinant();
  const double scale = g.cov.trace() * g.cov.trace();
  if (!(g.det > 1e-12 * scale) || scale == 0.0) {
    g.det = std::max(0.0, g.det);
    g.degenerate = true;
  }
  return g;
}

std::vector<SpeedBinSpread> speed_bin_spread(std::span<const FixationMap> maps,
                                             std::span<const double> speeds,
                                             std::span<const double> edges) {
  if (maps.size() != speeds.size()) throw std::invalid_argument("speed_bin_spread: maps/speeds mismatch");
  if (edges.size() < 2) throw std::invalid_argument("speed_bin_spread: need >= 2 edges");
  std::vector<SpeedBinSpread> bins(edges.size() - 1);
  for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
    if (!(edges[b] < edges[b + 1])) throw std::invalid_argument("speed_bin_spread: edges must increase");
    SpeedBinSpread& bin = bins[b];
    bin.lo = edges[b];
    bin.hi = edges[b + 1];
    FixationMap acc;
    for (std::size_t i = 0; i < maps.size(); ++i) {
      if (speeds[i] < bin.lo || speeds[i] >= bin.hi) continue;
      if (acc.empty()) acc = FixationMap(maps[i].height(), maps[i].width(), 0.0);
      const double s = maps[i].sum();
      for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += maps[i][k] / s;
      ++bin.frames;
    }
    if (bin.frames > 0) {
      bin.spread = fit_gaussian_spread(acc);
    } else {
      bin.spread.degenerate = true;
    }
  }
  return bins;
}

SemanticHistogram semantic_threshold_histogram(std::span<const FixationMap> maps,
                                               std::span<const LabelMap> labels,
                                               int n_thresholds, int num_classes) {
  if (maps.size() != labels.size()) throw std::invalid_argument("semantic histogram: maps/labels mismatch");
  if (n_thresholds < 1 || num_classes < 1) throw std::invalid_argument("semantic histogram: bad sizes");
  SemanticHistogram h;
  h.num_classes = num_classes;
  for (int k = 1; k <= n_thresholds; ++k) h.thresholds.push_back(static_cast<double>(k) / (n_thresholds + 1));
  h.counts.assign(num_classes, std::vector<double>(n_thresholds, 0.0));

  for (std::size_t f = 0; f < maps.size(); ++f) {
    const FixationMap& m = maps[f];
    const LabelMap& l = labels[f];
    if (l.height != m.height() || l.width != m.width() || l.ids.size() != m.size()) {
      throw std::invalid_argument("semantic histogram: label map shape mismatch");
    }
    const double mx = m.max();
    if (!(mx > 0.0)) continue;
    for (std::size_t i = 0; i < m.size(); ++i) {
      const int c = l.ids[i];
      if (c < 0 || c >= num_classes) {
        throw std::out_of_range("semantic histogram: label " + std::to_string(c) +
                                " outside class table");
      }
      const double v = m[i] / mx;
      for (int k = 0; k < n_thresholds; ++k) {
        if (v >= h.thresholds[k]) h.counts[c][k] += 1.0;
      }
    }
  }
  h.proportions = h.counts;
  for (int k = 0; k < n_thresholds; ++k) {
    double total = 0.0;
    for (int c = 0; c < num_classes; ++c) total += h.counts[c][k];
    for (int c = 0; c < num_classes; ++c) h.proportions[c][k] = total > 0 ? h.counts[c][k] / total : 0.0;
  }
  return h;
}

double curve_trend(const SemanticHistogram& h, int class_id) {
  if (class_id < 0 || class_id >= h.num_classes) throw std::out_of_range("curve_trend: bad class");
  const auto& ys = h.proportions[class_id];
  const double n = static_cast<double>(ys.size());
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < ys.size(); ++k) {
    mx += h.thresholds[k];
    my += ys[k];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t k = 0; k < ys.size(); ++k) {
    sxy += (h.thresholds[k] - mx) * (ys[k] - my);
    sxx += (h.thresholds[k] - mx) * (h.thresholds[k] - mx);
  }
  return sxx > 0 ? sxy / sxx : 0.0;
}

double kendall_tau_b(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("kendall_tau_b: length mismatch");
  if (a.size() < 2) throw std::invalid_argument("kendall_tau_b: need at least 2 items");
  long long concordant = 0, discordant = 0, ties_a = 0, ties_b = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const double da = a[i] - a[j], db = b[i] - b[j];
      if (da == 0 && db == 0) continue;
      if (da == 0) {
        ++ties_a;
      } else if (db == 0) {
        ++ties_b;
      } else if ((da > 0) == (db > 0)) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  const double n1 = static_cast<double>(concordant + discordant + ties_a);
  const double n2 = static_cast<double>(concordant + discordant + ties_b);
  if (n1 == 0 || n2 == 0) throw std::invalid_argument("kendall_tau_b: constant series");
  return static_cast<double>(concordant - discordant) / std::sqrt(n1 * n2);
}

}  // namespace foa
