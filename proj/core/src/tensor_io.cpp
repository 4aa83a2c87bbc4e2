#include "foa/tensor_io.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <stdexcept>
#include <type_traits>

namespace foa {

static_assert(std::endian::native == std::endian::little,
              "tensor I/O assumes a little-endian host");

namespace {

constexpr std::array<char, 4> kMagic{'F', 'O', 'A', 'T'};

template <typename Scalar>
const char* dtype_name() {
  return std::is_same_v<Scalar, float> ? "f32" : "f64";
}

template <typename Stored, typename Scalar>
void read_values(std::istream& in, Tensor<Scalar>& t) {
  std::vector<Stored> raw(t.size());
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(raw.size() * sizeof(Stored)));
  if (!in) throw std::runtime_error("read_tensor: truncated data");
  for (std::size_t i = 0; i < raw.size(); ++i) {
    t.data()[i] = static_cast<Scalar>(raw[i]);
  }
}

}  // namespace

template <typename Scalar>
void write_tensor(std::ostream& out, const Tensor<Scalar>& t) {
  const Shape4& s = t.shape();
  nlohmann::json header = {{"shape", {s.t, s.h, s.w, s.c}},
                           {"dtype", dtype_name<Scalar>()},
                           {"byte_order", "little"}};
  const std::string h = header.dump();
  const auto len = static_cast<std::uint32_t>(h.size());
  out.write(kMagic.data(), kMagic.size());
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  out.write(reinterpret_cast<const char*>(t.data().data()),
            static_cast<std::streamsize>(t.size() * sizeof(Scalar)));
  if (!out) throw std::runtime_error("write_tensor: stream error");
}

template <typename Scalar>
Tensor<Scalar> read_tensor(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw std::runtime_error("read_tensor: bad magic");
  std::uint32_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in || len > (1u << 20)) throw std::runtime_error("read_tensor: bad header");
  std::string h(len, '\0');
  in.read(h.data(), len);
  if (!in) throw std::runtime_error("read_tensor: truncated header");

  const auto header = nlohmann::json::parse(h);
  if (header.value("byte_order", "") != "little") {
    throw std::runtime_error("read_tensor: unsupported byte order");
  }
  const auto& sh = header.at("shape");
  if (!sh.is_array() || sh.size() != 4) {
    throw std::runtime_error("read_tensor: shape must have 4 entries");
  }
  const Shape4 shape{sh[0].get<int>(), sh[1].get<int>(), sh[2].get<int>(),
                     sh[3].get<int>()};
  Tensor<Scalar> t(shape);
  const std::string dtype = header.at("dtype").get<std::string>();
  if (dtype == "f32") {
    read_values<float>(in, t);
  } else if (dtype == "f64") {
    read_values<double>(in, t);
  } else {
    throw std::runtime_error("read_tensor: unsupported dtype " + dtype);
  }
  return t;
}

template <typename Scalar>
void save_tensor(const std::filesystem::path& path, const Tensor<Scalar>& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_tensor(out, t);
}

template <typename Scalar>
Tensor<Scalar> load_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return read_tensor<Scalar>(in);
}

template void write_tensor(std::ostream&, const Tensor<float>&);
template void write_tensor(std::ostream&, const Tensor<double>&);
template Tensor<float> read_tensor(std::istream&);
template Tensor<double> read_tensor(std::istream&);
template void save_tensor(const std::filesystem::path&, const Tensor<float>&);
template void save_tensor(const std::filesystem::path&, const Tensor<double>&);
template Tensor<float> load_tensor(const std::filesystem::path&);
template Tensor<double> load_tensor(const std::filesystem::path&);

}  // namespace foa
