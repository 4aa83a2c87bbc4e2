#include "foa/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "foa/image_io.hpp"
#include "foa/layers.hpp"
#include "foa/metrics.hpp"
#include "foa/rng.hpp"
#include "foa/tensor_io.hpp"

namespace foa {

Scenario parse_scenario(const std::string& name) {
  if (name == "drive") return Scenario::Drive;
  if (name == "drift") return Scenario::Drift;
  if (name == "speed") return Scenario::SpeedBins;
  if (name == "semantic") return Scenario::Semantic;
  throw std::invalid_argument("unknown scenario '" + name +
                              "' (expected drive, drift, speed or semantic)");
}

const char* scenario_name(Scenario s) {
  switch (s) {
    case Scenario::Drive: return "drive";
    case Scenario::Drift: return "drift";
    case Scenario::SpeedBins: return "speed";
    case Scenario::Semantic: return "semantic";
  }
  return "?";
}

namespace {

using Rgb = std::array<float, 3>;

struct Rect {
  double cx = 0, cy = 0, w = 0, h = 0;  // centre, size (px)
  bool contains(double x, double y) const {
    return std::abs(x - cx) <= w / 2 && std::abs(y - cy) <= h / 2;
  }
};

// Smooth pseudo-random signal in [-1, 1].
struct Wave {
  std::array<double, 3> freq{}, phase{};
  double operator()(double t) const {
    double s = 0;
    for (int k = 0; k < 3; ++k) s += std::sin(freq[k] * t + phase[k]);
    return s / 3.0;
  }
};

Wave make_wave(std::mt19937_64& rng, double base_freq) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Wave w;
  for (int k = 0; k < 3; ++k) {
    w.freq[k] = base_freq * (0.5 + u(rng)) * (k + 1);
    w.phase[k] = 2 * std::numbers::pi * u(rng);
  }
  return w;
}

class Scene {
 public:
  Scene(const SyntheticSpec& spec, int index)
      : spec_(spec), s_(spec.size), rng_(derive_seed(spec.seed, static_cast<std::uint64_t>(index))) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    horizon_ = 0.4 * s_;
    vp_x_ = s_ / 2.0 + (u(rng_) - 0.5) * 0.3 * s_;
    lateral_ = make_wave(rng_, 0.05);
    depth_ = make_wave(rng_, 0.03);
    ped_ = make_wave(rng_, 0.02);
    speed_wave_ = make_wave(rng_, 0.01);
    onc_phase_ = u(rng_);
    sign_side_ = vp_x_ < s_ / 2.0 ? 1.0 : -1.0;
    texture_.resize(static_cast<std::size_t>(s_) * s_);
    std::uniform_real_distribution<float> tex(-0.04f, 0.04f);
    for (float& v : texture_) v = tex(rng_);
    for (int b = 0; b < 3; ++b) {
      Rect r;
      r.w = (0.08 + 0.08 * u(rng_)) * s_;
      r.h = (0.05 + 0.12 * u(rng_)) * s_;
      const double side = b % 2 == 0 ? -1.0 : 1.0;
      r.cx = vp_x_ + side * (0.22 + 0.2 * u(rng_)) * s_;
      r.cy = horizon_ - r.h / 2;
      buildings_.push_back(r);
    }
    setup_speed();
  }

  double speed(int t) const { return speeds_[static_cast<std::size_t>(t + 1)]; }
  double horizon() const { return horizon_; }
  double vp_x() const { return vp_x_; }
  const std::vector<double>& bin_edges() const { return bin_edges_; }
  const std::vector<int>& bin_of_frame() const { return bin_of_frame_; }
  std::mt19937_64& rng() { return rng_; }

  double road_u(double y) const { return (y - horizon_) / (s_ - horizon_); }
  double road_y(double u) const { return horizon_ + u * (s_ - horizon_); }
  double road_cx(double u) const { return vp_x_ + (s_ / 2.0 - vp_x_) * u; }
  double road_halfw(double u) const { return 0.05 * s_ + 0.55 * s_ * u; }

  Rect lead_car(int t) const {
    double u, lat;
    switch (spec_.scenario) {
      case Scenario::Drift: u = 0.3 + 0.03 * depth_(t); lat = 0.1 * lateral_(t); break;
      case Scenario::Semantic: u = 0.12 + 0.01 * depth_(t); lat = 0.1 * lateral_(t); break;
      default: u = 0.32 + 0.16 * depth_(t); lat = 0.75 * lateral_(t); break;
    }
    return car_at(u, lat);
  }

  Rect oncoming_car(int t) const {
    const double cyc = std::fmod(onc_phase_ + 0.01 * t, 1.0);
    return car_at(0.05 + 0.9 * cyc * cyc, -0.6);
  }

  Rect pedestrian(int t, int k) const {
    const double u = k == 0 ? 0.55 + 0.1 * ped_(t) : 0.4 - 0.08 * ped_(t + 50);
    const double side = k == 0 ? -1.0 : 1.0;
    const double hw = road_halfw(u);
    Rect r;
    r.h = 0.12 * hw + 2.0;
    r.w = 0.35 * r.h;
    r.cx = road_cx(u) + side * (hw * 1.1 + r.w);
    r.cy = road_y(u) - r.h / 2;
    return r;
  }

  Rect sign() const {
    const double u = 0.3;
    const double hw = road_halfw(u);
    Rect r;
    r.w = r.h = std::max(3.0, 0.07 * s_);
    r.cx = std::clamp(road_cx(u) + sign_side_ * (hw * 1.25 + r.w), r.w, s_ - 1 - r.w);
    r.cy = road_y(u) - 0.16 * s_;
    return r;
  }
  Rect pole() const {
    const Rect sg = sign();
    Rect r;
    r.w = 1.0;
    r.h = road_y(0.3) - (sg.cy + sg.h / 2);
    r.cx = sg.cx;
    r.cy = sg.cy + sg.h / 2 + r.h / 2;
    return r;
  }

  void render(int t, Tensor<float>& rgb, Tensor<float>& flow, LabelMap& labels) const {
    const double phase = dash_phase(t);
    const double delta = 0.001 * speed(t);
    const std::array<Rect, 2> cars_now{oncoming_car(t), lead_car(t)};
    const std::array<Rect, 2> cars_prev{oncoming_car(t - 1), lead_car(t - 1)};
    const std::array<Rect, 2> peds_now{pedestrian(t, 0), pedestrian(t, 1)};
    const std::array<Rect, 2> peds_prev{pedestrian(t - 1, 0), pedestrian(t - 1, 1)};
    const Rect sg = sign(), pl = pole();

    for (int y = 0; y < s_; ++y) {
      for (int x = 0; x < s_; ++x) {
        Rgb c;
        int label;
        double fx = 0, fy = 0;
        if (y < horizon_) {
          const float g = static_cast<float>(y) / static_cast<float>(horizon_);
          c = {0.55f + 0.15f * g, 0.70f + 0.1f * g, 0.95f};
          label = cls::kSky;
        } else {
          const double u = road_u(y);
          const double side = (x - road_cx(u)) / road_halfw(u);
          if (std::abs(side) <= 1.0) {
            label = cls::kRoad;
            c = {0.38f, 0.38f, 0.40f};
            const double z = 1.0 / (u + 0.1);
            if (std::abs(side) < 0.06 && std::fmod(0.8 * z + phase, 1.0) < 0.45) {
              c = {0.95f, 0.95f, 0.9f};
            }
          } else if (std::abs(side) <= 1.15) {
            label = cls::kSidewalk;
            c = {0.65f, 0.62f, 0.6f};
          } else {
            label = side < 0 ? cls::kVegetation : cls::kTerrain;
            c = side < 0 ? Rgb{0.2f, 0.45f, 0.18f} : Rgb{0.45f, 0.5f, 0.25f};
          }
          if (std::abs(side) <= 1.15) ground_flow(x, y, u, side, delta, fx, fy);
        }
        for (const Rect& b : buildings_) {
          if (b.contains(x, y)) {
            label = cls::kBuilding;
            c = {0.55f, 0.45f, 0.4f};
            fx = fy = 0;
          }
        }
        if (pl.contains(x, y)) {
          label = cls::kPole;
          c = {0.3f, 0.3f, 0.3f};
          fx = fy = 0;
        }
        if (sg.contains(x, y)) {
          label = cls::kSign;
          c = {0.95f, 0.8f, 0.1f};
          fx = fy = 0;
        }
        for (int k = 0; k < 2; ++k) {
          if (peds_now[k].contains(x, y)) {
            label = cls::kPerson;
            c = {0.45f, 0.15f, 0.5f};
            rigid_flow(peds_now[k], peds_prev[k], x, y, fx, fy);
          }
        }
        for (int k = 0; k < 2; ++k) {
          if (cars_now[k].contains(x, y)) {
            label = cls::kCar;
            const bool window = y < cars_now[k].cy - cars_now[k].h * 0.1;
            c = k == 1 ? (window ? Rgb{0.4f, 0.05f, 0.05f} : Rgb{0.85f, 0.1f, 0.1f})
                       : (window ? Rgb{0.05f, 0.1f, 0.35f} : Rgb{0.15f, 0.3f, 0.85f});
            rigid_flow(cars_now[k], cars_prev[k], x, y, fx, fy);
          }
        }
        const float n = texture_[static_cast<std::size_t>(y) * s_ + x];
        for (int ch = 0; ch < 3; ++ch) rgb(t, y, x, ch) = std::clamp(c[ch] + n, 0.0f, 1.0f);
        flow(t, y, x, 0) = static_cast<float>(fx);
        flow(t, y, x, 1) = static_cast<float>(fy);
        labels.ids[static_cast<std::size_t>(y) * s_ + x] = label;
      }
    }
  }

 private:
  Rect car_at(double u, double lat) const {
    const double hw = road_halfw(u);
    Rect r;
    r.w = 0.5 * hw + 2.0;
    r.h = 0.6 * r.w;
    r.cx = road_cx(u) + lat * 0.6 * hw;
    r.cy = road_y(u) - r.h / 2;
    return r;
  }

  double dash_phase(int t) const {
    double p = 0;
    for (int k = 0; k <= t + 1; ++k) p += 0.8 * 0.001 * speeds_[static_cast<std::size_t>(k)];
    return p;
  }

  // Displacement of a ground point since the previous frame; the camera moved
  // forward by `delta` depth units.
  void ground_flow(int x, int y, double u, double side, double delta, double& fx,
                   double& fy) const {
    (void)x;
    const double z = 1.0 / (u + 0.1);
    const double u_prev = std::max(0.0, 1.0 / (z + delta) - 0.1);
    const double y_prev = road_y(u_prev);
    const double x_prev = road_cx(u_prev) + side * road_halfw(u_prev);
    fx = (road_cx(u) + side * road_halfw(u)) - x_prev;
    fy = y - y_prev;
  }

  static void rigid_flow(const Rect& now, const Rect& prev, int x, int y, double& fx,
                         double& fy) {
    const double sx = prev.w / now.w, sy = prev.h / now.h;
    const double px = prev.cx + (x - now.cx) * sx;
    const double py = prev.cy + (y - now.cy) * sy;
    fx = x - px;
    fy = y - py;
  }

  void setup_speed() {
    const int n = spec_.frames;
    speeds_.assign(static_cast<std::size_t>(n) + 1, 0.0);
    if (spec_.scenario == Scenario::SpeedBins) {
      const int bins = static_cast<int>(spec_.bin_sigmas.size());
      if (bins < 1) throw std::invalid_argument("SyntheticSpec: bin_sigmas must not be empty");
      for (int b = 0; b <= bins; ++b) bin_edges_.push_back(12.5 + 25.0 * b);
      std::vector<int> order(bins);
      for (int b = 0; b < bins; ++b) order[b] = b;
      std::shuffle(order.begin(), order.end(), rng_);
      std::uniform_real_distribution<double> jitter(-5.0, 5.0);
      bin_of_frame_.assign(n, 0);
      for (int t = -1; t < n; ++t) {
        const int seg = std::clamp((std::max(t, 0) * bins) / n, 0, bins - 1);
        const int b = order[seg];
        if (t >= 0) bin_of_frame_[t] = b;
        speeds_[static_cast<std::size_t>(t + 1)] = 25.0 + 25.0 * b + jitter(rng_);
      }
    } else {
      for (int t = -1; t < n; ++t) {
        speeds_[static_cast<std::size_t>(t + 1)] = 60.0 + 30.0 * speed_wave_(t);
      }
    }
  }

  const SyntheticSpec& spec_;
  int s_;
  mutable std::mt19937_64 rng_;
  double horizon_ = 0, vp_x_ = 0, onc_phase_ = 0, sign_side_ = 1;
  Wave lateral_, depth_, ped_, speed_wave_;
  std::vector<float> texture_;
  std::vector<Rect> buildings_;
  std::vector<double> speeds_;  // index t + 1, t = -1 .. N-1
  std::vector<double> bin_edges_;
  std::vector<int> bin_of_frame_;
};

}  // namespace

SyntheticSequence generate_sequence(const SyntheticSpec& spec, int index) {
  if (spec.frames < 1 || spec.size < 8 || !(spec.native_size > 0)) {
    throw std::invalid_argument("SyntheticSpec: frames >= 1, size >= 8, native_size > 0");
  }
  Scene scene(spec, index);
  const int n = spec.frames, s = spec.size;
  const double to_native = spec.native_size / s;

  SyntheticSequence seq;
  std::ostringstream name;
  name << "seq" << std::setw(2) << std::setfill('0') << index;
  seq.name = name.str();
  seq.scenario = spec.scenario;
  seq.size = s;
  seq.native_size = spec.native_size;
  seq.rgb = Tensor<float>({n, s, s, 3});
  seq.flow = Tensor<float>({n, s, s, 2});
  seq.labels.assign(n, LabelMap{s, s, std::vector<int>(static_cast<std::size_t>(s) * s, 0)});

  auto& rng = scene.rng();
  std::normal_distribution<double> gauss(0.0, 1.0);
  if (spec.scenario == Scenario::Drift) {
    const int len = std::min(spec.drift_length, n);
    std::uniform_int_distribution<int> off(-n / 10, n / 10);
    seq.drift_start = std::clamp(n / 2 - len / 2 + off(rng), 0, n - len);
    seq.drift_end = seq.drift_start + len - 1;
  }

  for (int t = 0; t < n; ++t) {
    scene.render(t, seq.rgb, seq.flow, seq.labels[t]);
    seq.speed.push_back(scene.speed(t));
    double gx, gy, sigma;
    switch (spec.scenario) {
      case Scenario::SpeedBins: {
        gx = scene.vp_x();
        gy = scene.horizon();
        sigma = spec.bin_sigmas[scene.bin_of_frame()[t]];
        break;
      }
      case Scenario::Semantic: {
        const Rect car = scene.lead_car(t);
        gx = car.cx;
        gy = car.cy;
        sigma = 2.0;
        break;
      }
      default: {
        const bool glance = t >= seq.drift_start && t <= seq.drift_end;
        const Rect target = glance ? scene.sign() : scene.lead_car(t);
        gx = target.cx;
        gy = target.cy;
        sigma = 6.0;
        break;
      }
    }
    GazeRecord g;
    g.frame_id = t;
    g.x = gx * to_native + sigma * gauss(rng);
    g.y = gy * to_native + sigma * gauss(rng);
    g.valid = g.x >= 0 && g.y >= 0 && g.x < spec.native_size && g.y < spec.native_size;
    seq.gaze.push_back(g);
  }
  seq.speed_bin_edges = scene.bin_edges();
  return seq;
}

void write_sequence(const std::filesystem::path& dir, const SyntheticSequence& seq) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "frames");
  fs::create_directories(dir / "labels");
  for (int t = 0; t < seq.frames(); ++t) {
    std::ostringstream fn;
    fn << std::setw(4) << std::setfill('0') << t << ".png";
    write_png(dir / "frames" / fn.str(), to_image(take_frame(seq.rgb, t)));
    const LabelMap& l = seq.labels[t];
    Image8 li{l.height, l.width, 1, std::vector<std::uint8_t>(l.ids.begin(), l.ids.end())};
    write_png(dir / "labels" / fn.str(), li);
  }
  save_tensor(dir / "flow.foat", seq.flow);
  write_gaze_csv(dir / "gaze.csv", seq.gaze);
  {
    std::ofstream out(dir / "speed.csv");
    out << "frame_id,speed\n";
    out.precision(10);
    for (std::size_t t = 0; t < seq.speed.size(); ++t) out << t << ',' << seq.speed[t] << '\n';
  }
  nlohmann::json script = {{"name", seq.name},
                           {"scenario", scenario_name(seq.scenario)},
                           {"size", seq.size},
                           {"native_size", seq.native_size},
                           {"frames", seq.frames()},
                           {"drift_start", seq.drift_start},
                           {"drift_end", seq.drift_end},
                           {"speed_bin_edges", seq.speed_bin_edges},
                           {"attended_class", seq.attended_class},
                           {"peripheral_class", seq.peripheral_class}};
  std::ofstream(dir / "script.json") << script.dump(2) << '\n';
}

SyntheticSequence read_sequence(const std::filesystem::path& dir) {
  std::ifstream sj(dir / "script.json");
  if (!sj) throw std::runtime_error("missing " + (dir / "script.json").string());
  const auto script = nlohmann::json::parse(sj);
  SyntheticSequence seq;
  seq.name = script.at("name").get<std::string>();
  seq.scenario = parse_scenario(script.at("scenario").get<std::string>());
  seq.size = script.at("size").get<int>();
  seq.native_size = script.at("native_size").get<double>();
  seq.drift_start = script.at("drift_start").get<int>();
  seq.drift_end = script.at("drift_end").get<int>();
  seq.speed_bin_edges = script.at("speed_bin_edges").get<std::vector<double>>();
  seq.attended_class = script.at("attended_class").get<int>();
  seq.peripheral_class = script.at("peripheral_class").get<int>();
  const int n = script.at("frames").get<int>();
  const int s = seq.size;

  seq.rgb = Tensor<float>({n, s, s, 3});
  for (int t = 0; t < n; ++t) {
    std::ostringstream fn;
    fn << std::setw(4) << std::setfill('0') << t << ".png";
    const Image8 img = read_png(dir / "frames" / fn.str(), true);
    if (img.height != s || img.width != s) throw std::runtime_error("frame size mismatch in " + dir.string());
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
      seq.rgb.frame_ptr(t)[i] = img.pixels[i] / 255.0f;
    }
    const Image8 li = read_png(dir / "labels" / fn.str());
    seq.labels.push_back(LabelMap{s, s, std::vector<int>(li.pixels.begin(), li.pixels.end())});
  }
  seq.flow = load_tensor<float>(dir / "flow.foat");
  seq.gaze = read_gaze_csv(dir / "gaze.csv");
  std::ifstream sp(dir / "speed.csv");
  std::string line;
  std::getline(sp, line);
  while (std::getline(sp, line)) {
    const auto comma = line.find(',');
    if (comma == std::string::npos) continue;
    seq.speed.push_back(std::stod(line.substr(comma + 1)));
  }
  if (static_cast<int>(seq.speed.size()) != n || seq.flow.frames() != n) {
    throw std::runtime_error("inconsistent sequence files in " + dir.string());
  }
  return seq;
}

void write_synthetic_dataset(const std::filesystem::path& dir, const SyntheticSpec& spec) {
  std::filesystem::create_directories(dir);
  SequenceMetadata md;
  const int n_test = std::max(1, spec.sequences / 4);
  std::mt19937_64 rng(derive_seed(spec.seed, 0xD47A));
  const std::array<const char*, 3> daytimes{"morning", "evening", "night"};
  const std::array<const char*, 3> weathers{"sunny", "cloudy", "rainy"};
  const std::array<const char*, 3> landscapes{"downtown", "countryside", "highway"};
  for (int i = 0; i < spec.sequences; ++i) {
    const SyntheticSequence seq = generate_sequence(spec, i);
    write_sequence(dir / seq.name, seq);
    auto& row = md[seq.name];
    row["daytime"] = daytimes[rng() % 3];
    row["weather"] = weathers[rng() % 3];
    row["landscape"] = landscapes[rng() % 3];
    row["driver"] = "d" + std::to_string(rng() % 4);
    row["set"] = i < spec.sequences - n_test ? "train" : "test";
  }
  write_metadata_csv(dir / "metadata.csv", md);
}

}  // namespace foa
