#include "foa/fixmap.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "foa/image_io.hpp"
#include "foa/metrics.hpp"
#include "foa/parallel.hpp"
#include "foa/tensor_io.hpp"

namespace foa {

double FixationMap::sum() const {
  double s = 0.0;
  for (double v : data_) s += v;
  return s;
}

double FixationMap::max() const {
  if (data_.empty()) throw std::logic_error("FixationMap::max on empty map");
  return *std::max_element(data_.begin(), data_.end());
}

bool FixationMap::is_normalized(double tol) const {
  if (data_.empty()) return false;
  for (double v : data_)
    if (!(v >= 0.0) || !std::isfinite(v)) return false;
  return std::abs(sum() - 1.0) <= tol;
}

FixationMap normalize_map(const FixationMap& map) {
  double s = 0.0;
  for (double v : map.data()) {
    if (!std::isfinite(v) || v < 0.0) {
      throw std::invalid_argument("normalize_map: negative or non-finite value");
    }
    s += v;
  }
  if (!(s > 0.0)) throw std::domain_error("normalize_map: map has zero mass");
  FixationMap out = map;
  for (double& v : out.data()) v /= s;
  return out;
}

FixationMap uniform_map(int height, int width) {
  return FixationMap(height, width,
                     1.0 / (static_cast<double>(height) * width));
}

FixationMap build_fixation_map(std::span<const GazeRecord> gaze, int t,
                               const HomographyWindow& homs,
                               const FixmapConfig& cfg, int height, int width,
                               bool normalize) {
  if (cfg.window < 1 || !(cfg.sigma2 > 0.0) || !(cfg.coord_scale > 0.0)) {
    throw std::invalid_argument("FixmapConfig: window >= 1, sigma2 > 0, coord_scale > 0");
  }
  const int half = cfg.window / 2;
  const double var = cfg.sigma2 * cfg.coord_scale * cfg.coord_scale;
  const double norm = 1.0 / (2.0 * std::numbers::pi * var);

  std::vector<Point2> centres;
  for (const GazeRecord& g : gaze) {
    const int off = g.frame_id - t;
    if (off < -half || off > half || !g.valid) continue;
    Point2 p{g.x, g.y};
    if (!homs.empty()) {
      auto it = homs.find(off);
      if (it == homs.end()) {
        throw std::invalid_argument("build_fixation_map: no homography for offset " +
                                    std::to_string(off));
      }
      try {
        p = project_point(it->second, p);
      } catch (const std::domain_error&) {
        continue;
      }
    }
    centres.push_back({(p.x + 0.5) * cfg.coord_scale - 0.5, (p.y + 0.5) * cfg.coord_scale - 0.5});
  }

  if (centres.empty()) {
    spdlog::warn("fixation map for frame {}: no valid gaze in window, using uniform map", t);
    return uniform_map(height, width);
  }

  FixationMap m(height, width, 0.0);
  for (const Point2& c : centres) {
    for (int y = 0; y < height; ++y) {
      const double dy2 = (y - c.y) * (y - c.y);
      for (int x = 0; x < width; ++x) {
        const double d2 = (x - c.x) * (x - c.x) + dy2;
        const double v = norm * std::exp(-0.5 * d2 / var);
        double& dst = m.at(y, x);
        if (v > dst) dst = v;
      }
    }
  }
  if (!normalize) return m;
  if (!(m.sum() > 0.0)) {
    spdlog::warn("fixation map for frame {}: all gaze far outside the frame, using uniform map", t);
    return uniform_map(height, width);
  }
  return normalize_map(m);
}

std::vector<FixationMap> build_sequence_maps(std::span<const GazeRecord> gaze,
                                             int num_frames,
                                             const FixmapConfig& cfg,
                                             int height, int width,
                                             int threads) {
  std::vector<FixationMap> maps(num_frames);
  const HomographyWindow identity;
  const int half = cfg.window / 2;
  parallel_for(
      static_cast<std::size_t>(num_frames),
      [&](std::size_t i) {
        const int t = static_cast<int>(i);
        std::vector<GazeRecord> win;
        for (const GazeRecord& g : gaze) {
          if (g.frame_id >= t - half && g.frame_id <= t + half) win.push_back(g);
        }
        maps[i] = build_fixation_map(win, t, identity, cfg, height, width);
      },
      threads);
  return maps;
}

FixationMap mean_map(std::span<const FixationMap> maps) {
  if (maps.empty()) throw std::invalid_argument("mean_map: no maps");
  FixationMap acc(maps[0].height(), maps[0].width(), 0.0);
  for (const FixationMap& m : maps) {
    if (!m.same_shape(acc)) throw std::invalid_argument("mean_map: shape mismatch");
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += m[i];
  }
  return normalize_map(acc);
}

std::vector<std::pair<int, int>> label_drift_subsequences(
    std::span<const FixationMap> maps, const FixationMap& mean,
    double threshold) {
  if (maps.empty()) throw std::invalid_argument("label_drift_subsequences: no frames");
  std::vector<std::pair<int, int>> runs;
  int start = -1;
  for (int t = 0; t < static_cast<int>(maps.size()); ++t) {
    bool drift;
    try {
      drift = pearson_cc(maps[t], mean) < threshold;
    } catch (const std::domain_error&) {
      drift = true;
    }
    if (drift && start < 0) start = t;
    if (!drift && start >= 0) {
      runs.emplace_back(start, t - 1);
      start = -1;
    }
  }
  if (start >= 0) runs.emplace_back(start, static_cast<int>(maps.size()) - 1);
  return runs;
}

std::vector<GazeRecord> read_gaze_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty gaze log");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "frame_id,x,y,valid") {
    throw std::runtime_error(path.string() + ": expected header frame_id,x,y,valid");
  }
  std::vector<GazeRecord> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    GazeRecord g;
    int valid = 0;
    if (!(ss >> g.frame_id >> g.x >> g.y >> valid)) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": malformed gaze row");
    }
    g.valid = valid != 0 && std::isfinite(g.x) && std::isfinite(g.y);
    out.push_back(g);
  }
  return out;
}

void write_gaze_csv(const std::filesystem::path& path,
                    std::span<const GazeRecord> gaze) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "frame_id,x,y,valid\n";
  out.precision(10);
  for (const GazeRecord& g : gaze) {
    out << g.frame_id << ',' << g.x << ',' << g.y << ',' << (g.valid ? 1 : 0) << '\n';
  }
}

HomographyWindow load_homography_window(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  const auto j = nlohmann::json::parse(in);
  if (!j.is_array()) throw std::runtime_error(path.string() + ": expected a JSON array");
  HomographyWindow w;
  for (const auto& e : j) {
    const int off = e.at("offset").get<int>();
    const auto h = e.at("H");
    if (!h.is_array() || h.size() != 9) {
      throw std::runtime_error(path.string() + ": H must have 9 entries");
    }
    w.emplace(off, Homography::from_row_major(h.get<std::array<double, 9>>()));
  }
  return w;
}

void save_homography_window(const std::filesystem::path& path,
                            const HomographyWindow& homs) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& [off, h] : homs) j.push_back({{"offset", off}, {"H", h.row_major()}});
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void export_map(const std::filesystem::path& png_path, const FixationMap& map) {
  write_map_png16(png_path, map);
  auto sidecar = png_path;
  sidecar.replace_extension(".foat");
  save_tensor(sidecar, map.to_tensor<double>());
}

FixationMap load_map_sidecar(const std::filesystem::path& foat_path) {
  return FixationMap::from_tensor(load_tensor<double>(foat_path));
}

}  // namespace foa
