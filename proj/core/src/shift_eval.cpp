#include "foa/shift_eval.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "foa/kl_loss.hpp"
#include "foa/parallel.hpp"
#include "foa/plot.hpp"

namespace foa {

namespace {

int reflect(int x, int w) {
  if (x < 0) return -x - 1;
  if (x >= w) return 2 * w - x - 1;
  return x;
}

void check_shift(int shift, int width) {
  if (std::abs(shift) > width) {
    throw std::invalid_argument("shift " + std::to_string(shift) + " exceeds frame width " +
                                std::to_string(width));
  }
}

}  // namespace

Tensor<float> shift_clip(const Tensor<float>& clip, int shift) {
  const Shape4& s = clip.shape();
  check_shift(shift, s.w);
  if (shift == 0) return clip;
  Tensor<float> out(s);
  for (int t = 0; t < s.t; ++t)
    for (int y = 0; y < s.h; ++y)
      for (int x = 0; x < s.w; ++x) {
        const int sx = reflect(x - shift, s.w);
        for (int c = 0; c < s.c; ++c) out(t, y, x, c) = clip(t, y, sx, c);
      }
  return out;
}

FixationMap shift_map(const FixationMap& map, int shift) {
  check_shift(shift, map.width());
  if (shift == 0) return map;
  FixationMap out(map.height(), map.width());
  for (int y = 0; y < map.height(); ++y)
    for (int x = 0; x < map.width(); ++x) out.at(y, x) = map.at(y, reflect(x - shift, map.width()));
  return normalize_map(out);
}

std::vector<ShiftPoint> shift_robustness_eval(const Predictor& predict,
                                              const std::vector<DomainClips>& clips,
                                              const std::vector<FixationMap>& targets,
                                              const std::vector<int>& shifts, int threads) {
  if (clips.size() != targets.size() || clips.empty()) {
    throw std::invalid_argument("shift_robustness_eval: need matching, non-empty clips and targets");
  }
  for (int s : shifts) check_shift(s, targets[0].width());
  std::vector<ShiftPoint> out;
  for (int s : shifts) {
    std::vector<double> kl(clips.size());
    parallel_for(
        clips.size(),
        [&](std::size_t i) {
          DomainClips shifted;
          for (int d = 0; d < kNumDomains; ++d)
            if (!clips[i][d].empty()) shifted[d] = shift_clip(clips[i][d], s);
          const FixationMap pred = predict(shifted);
          kl[i] = kl_loss(shift_map(targets[i], s), pred, kDefaultEps, false).loss;
        },
        threads);
    ShiftPoint p;
    p.shift = s;
    p.count = static_cast<int>(kl.size());
    for (double v : kl) p.mean_kl += v;
    p.mean_kl /= p.count;
    for (double v : kl) p.std_kl += (v - p.mean_kl) * (v - p.mean_kl);
    p.std_kl = p.count > 1 ? std::sqrt(p.std_kl / (p.count - 1)) : 0.0;
    out.push_back(p);
  }
  return out;
}

void write_shift_csv(std::ostream& out, const std::vector<ShiftCurve>& curves) {
  out << "model,shift,mean_kl,std_kl,count\n";
  out.precision(10);
  for (const auto& c : curves)
    for (const auto& p : c.points)
      out << c.name << ',' << p.shift << ',' << p.mean_kl << ',' << p.std_kl << ',' << p.count << '\n';
}

void write_shift_plot(const std::filesystem::path& png, const std::vector<ShiftCurve>& curves) {
  static const std::array<std::array<std::uint8_t, 3>, 4> palette{
      {{31, 119, 180}, {214, 39, 40}, {44, 160, 44}, {148, 103, 189}}};
  std::vector<PlotSeries> series;
  for (std::size_t k = 0; k < curves.size(); ++k) {
    PlotSeries s;
    s.color = palette[k % palette.size()];
    for (const auto& p : curves[k].points) {
      s.x.push_back(p.shift);
      s.y.push_back(p.mean_kl);
      s.spread.push_back(p.std_kl);
    }
    series.push_back(std::move(s));
  }
  write_line_plot(png, series);
}

}  // namespace foa
