#include "cli_common.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "foa/fixmap.hpp"
#include "foa/image_io.hpp"
#include "foa/metrics.hpp"
#include "foa/synthetic.hpp"

namespace foa::cli {

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

template <typename T>
T number(const std::string& text) {
  T v{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end) throw UsageError("not a number: '" + text + "'");
  return v;
}

}  // namespace

Eigen::Vector3d parse_vec3(const std::string& text) {
  const auto parts = split(text, ',');
  if (parts.size() != 3) throw UsageError("expected x,y,z but got '" + text + "'");
  Eigen::Vector3d v;
  for (int i = 0; i < 3; ++i) v[i] = number<double>(parts[i]);
  return v;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  for (const auto& p : split(text, ',')) out.push_back(number<int>(p));
  if (out.empty()) throw UsageError("empty list");
  return out;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& p : split(text, ',')) out.push_back(number<double>(p));
  if (out.empty()) throw UsageError("empty list");
  return out;
}

std::pair<int, int> parse_range(const std::string& text) {
  const auto pos = text.find("..");
  if (pos == std::string::npos) throw UsageError("expected a..b but got '" + text + "'");
  const int a = number<int>(text.substr(0, pos)), b = number<int>(text.substr(pos + 2));
  if (b < a) throw UsageError("empty range '" + text + "'");
  return {a, b};
}

Domain parse_domain(const std::string& name) {
  if (name == "rgb") return Domain::Rgb;
  if (name == "flow") return Domain::Flow;
  if (name == "seg") return Domain::Seg;
  throw UsageError("unknown domain '" + name + "' (expected rgb, flow or seg)");
}

std::vector<std::filesystem::path> sequence_dirs(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> dirs;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_directory() && std::filesystem::exists(e.path() / "script.json"))
      dirs.push_back(e.path());
  if (dirs.empty()) throw std::runtime_error("no sequences found in " + dir.string());
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

Split load_split(const std::filesystem::path& dir, int threads) {
  PrepareOptions opt;
  opt.threads = threads;
  auto all = load_dataset(dir, opt);
  Split s;
  const auto meta_path = dir / "metadata.csv";
  if (std::filesystem::exists(meta_path)) {
    const SequenceMetadata md = read_metadata_csv(meta_path);
    for (auto& seq : all) {
      const auto it = md.find(seq.name);
      const bool test = it != md.end() && it->second.count("set") && it->second.at("set") == "test";
      (test ? s.test : s.train).push_back(std::move(seq));
    }
  } else {
    const std::size_t n_test = std::max<std::size_t>(1, all.size() / 4);
    for (std::size_t i = 0; i < all.size(); ++i)
      (i + n_test < all.size() ? s.train : s.test).push_back(std::move(all[i]));
  }
  if (s.train.empty() || s.test.empty())
    throw std::runtime_error("dataset needs at least one train and one test sequence");
  return s;
}

ModelConfig model_preset(const std::string& name) {
  if (name == "full") return ModelConfig{};
  if (name == "desk") return desk_model_config();
  throw UsageError("unknown preset '" + name + "' (expected full or desk)");
}

void write_map_outputs(const std::filesystem::path& dir, const std::string& stem,
                       const FixationMap& map) {
  std::filesystem::create_directories(dir);
  export_map(dir / (stem + ".png"), map);
  write_png(dir / (stem + "_heatmap.png"), heatmap_image(map));
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace foa::cli
