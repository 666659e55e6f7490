#pragma once

// VXT1 tensor container:
//   bytes 0..3   'V' 'X' 'T' '1'
//   u32 LE       version (= 1)
//   u32 LE       dtype (0 = f32, 1 = f64)
//   u32 LE       ndim
//   u32 LE x n   dims
//   payload      row-major, little-endian IEEE-754

#include <cstdint>
#include <filesystem>
#include <string>

#include "voxtherm/tensor.hpp"

namespace voxtherm::vxt {

enum class DType : std::uint32_t { F32 = 0, F64 = 1 };

inline constexpr std::uint32_t kVersion = 1;

std::string encode(const Tensor<double>& t, DType dtype);
std::string encode(const Tensor<float>& t);

struct Decoded {
  DType dtype;
  Tensor<double> values;  // widened to f64 regardless of stored dtype
};

Decoded decode(const std::string& bytes);

void write(const std::filesystem::path& path, const Tensor<double>& t, DType dtype = DType::F64);
void write(const std::filesystem::path& path, const Tensor<float>& t);

Tensor<double> read(const std::filesystem::path& path);
/// Reads an f32 file without widening; rejects f64 files.
Tensor<float> read_f32(const std::filesystem::path& path);

}  // namespace voxtherm::vxt
