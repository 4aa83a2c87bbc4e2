#pragma once

#include <filesystem>
#include <iosfwd>

#include "foa/tensor.hpp"

namespace foa {

/// Tensor file layout: 4-byte magic "FOAT", little-endian u32 header length,
/// JSON header {"shape":[T,H,W,C],"dtype":"f32"|"f64","byte_order":"little"},
/// then the raw values in (t,h,w,c) order.
template <typename Scalar>
void write_tensor(std::ostream& out, const Tensor<Scalar>& t);

/// Reads either dtype and converts to Scalar.
template <typename Scalar>
Tensor<Scalar> read_tensor(std::istream& in);

template <typename Scalar>
void save_tensor(const std::filesystem::path& path, const Tensor<Scalar>& t);

template <typename Scalar>
Tensor<Scalar> load_tensor(const std::filesystem::path& path);

}  // namespace foa
