#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "foa/model.hpp"

namespace foa {

/// Horizontal translation by `shift` px (positive = content moves right);
/// vacated columns are filled by reflecting the frame about its border.
/// Throws std::invalid_argument when |shift| exceeds the width.
Tensor<float> shift_clip(const Tensor<float>& clip, int shift);
FixationMap shift_map(const FixationMap& map, int shift);

using Predictor = std::function<FixationMap(const DomainClips&)>;

struct ShiftPoint {
  int shift = 0;
  double mean_kl = 0.0;
  double std_kl = 0.0;
  int count = 0;
};

/// For every shift, shifts each clip and its ground truth identically and
/// records the KL of the prediction.
std::vector<ShiftPoint> shift_robustness_eval(const Predictor& predict,
                                              const std::vector<DomainClips>& clips,
                                              const std::vector<FixationMap>& targets,
                                              const std::vector<int>& shifts,
                                              int threads = 0);

struct ShiftCurve {
  std::string name;
  std::vector<ShiftPoint> points;
};

/// Long format: model,shift,mean_kl,std_kl,count.
void write_shift_csv(std::ostream& out, const std::vector<ShiftCurve>& curves);
void write_shift_plot(const std::filesystem::path& png, const std::vector<ShiftCurve>& curves);

}  // namespace foa
