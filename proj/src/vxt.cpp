#include "voxtherm/vxt.hpp"

#include <bit>
#include <cstring>

#include "voxtherm/io.hpp"

namespace voxtherm::vxt {
namespace {

static_assert(std::endian::native == std::endian::little,
              "VXT1 I/O assumes a little-endian host");

void put_u32(std::string& out, std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}

std::uint32_t get_u32(const std::string& in, std::size_t& pos) {
  if (pos + 4 > in.size()) throw SchemaError("VXT1: truncated header");
  std::uint32_t v;
  std::memcpy(&v, in.data() + pos, 4);
  pos += 4;
  return v;
}

std::string header(const Shape& shape, DType dtype) {
  std::string out = "VXT1";
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(dtype));
  put_u32(out, static_cast<std::uint32_t>(shape.size()));
  for (auto d : shape) put_u32(out, static_cast<std::uint32_t>(d));
  return out;
}

template <class Stored, class Source>
void append_payload(std::string& out, std::span<const Source> values) {
  const std::size_t offset = out.size();
  out.resize(offset + values.size() * sizeof(Stored));
  char* dst = out.data() + offset;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const Stored v = static_cast<Stored>(values[i]);
    std::memcpy(dst + i * sizeof(Stored), &v, sizeof(Stored));
  }
}

struct Header {
  DType dtype;
  Shape shape;
  std::size_t payload_offset;
};

Header parse_header(const std::string& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "VXT1", 4) != 0) {
    throw SchemaError("VXT1: bad magic");
  }
  std::size_t pos = 4;
  const auto version = get_u32(bytes, pos);
  if (version != kVersion) throw SchemaError("VXT1: unsupported version " + std::to_string(version));
  const auto dtype = get_u32(bytes, pos);
  if (dtype > 1) throw SchemaError("VXT1: unknown dtype " + std::to_string(dtype));
  const auto ndim = get_u32(bytes, pos);
  Shape shape(ndim);
  for (auto& d : shape) d = get_u32(bytes, pos);
  const std::size_t elem = dtype == 0 ? 4 : 8;
  if (bytes.size() != pos + shape_size(shape) * elem) {
    throw SchemaError("VXT1: payload length does not match dims " + shape_string(shape));
  }
  return {static_cast<DType>(dtype), std::move(shape), pos};
}

}  // namespace

std::string encode(const Tensor<double>& t, DType dtype) {
  std::string out = header(t.shape(), dtype);
  if (dtype == DType::F64) {
    append_payload<double, double>(out, t.data());
  } else {
    append_payload<float, double>(out, t.data());
  }
  return out;
}

std::string encode(const Tensor<float>& t) {
  std::string out = header(t.shape(), DType::F32);
  append_payload<float, float>(out, t.data());
  return out;
}

Decoded decode(const std::string& bytes) {
  const Header h = parse_header(bytes);
  Tensor<double> t(h.shape);
  const char* src = bytes.data() + h.payload_offset;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (h.dtype == DType::F64) {
      double v;
      std::memcpy(&v, src + i * 8, 8);
      t[i] = v;
    } else {
      float v;
      std::memcpy(&v, src + i * 4, 4);
      t[i] = v;
    }
  }
  return {h.dtype, std::move(t)};
}

void write(const std::filesystem::path& path, const Tensor<double>& t, DType dtype) {
  io::write_file(path, encode(t, dtype));
}

void write(const std::filesystem::path& path, const Tensor<float>& t) {
  io::write_file(path, encode(t));
}

Tensor<double> read(const std::filesystem::path& path) {
  return decode(io::read_file(path)).values;
}

Tensor<float> read_f32(const std::filesystem::path& path) {
  const std::string bytes = io::read_file(path);
  const Header h = parse_header(bytes);
  if (h.dtype != DType::F32) throw SchemaError(path.string() + ": expected f32 payload");
  Tensor<float> t(h.shape);
  std::memcpy(t.raw(), bytes.data() + h.payload_offset, t.size() * sizeof(float));
  return t;
}

}  // namespace voxtherm::vxt
