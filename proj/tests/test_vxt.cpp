#include <doctest.h>

#include <cstring>
#include <filesystem>

#include "support.hpp"
#include "voxtherm/error.hpp"
#include "voxtherm/vxt.hpp"

using namespace voxtherm;

TEST_SUITE("vxt") {

TEST_CASE("header layout") {
  Tensor<double> t({2, 3}, std::vector<double>{1, 2, 3, 4, 5, 6});
  const std::string bytes = vxt::encode(t, vxt::DType::F64);
  REQUIRE(bytes.size() == 4 + 4 + 4 + 4 + 2 * 4 + 6 * 8);
  CHECK(bytes.substr(0, 4) == "VXT1");
  auto u32 = [&](std::size_t off) {
    std::uint32_t v = 0;
    for (int k = 3; k >= 0; --k) v = (v << 8) | static_cast<unsigned char>(bytes[off + k]);
    return v;
  };
  CHECK(u32(4) == 1);
  CHECK(u32(8) == 1);
  CHECK(u32(12) == 2);
  CHECK(u32(16) == 2);
  CHECK(u32(20) == 3);
  double first;
  std::memcpy(&first, bytes.data() + 24, 8);
  CHECK(first == 1.0);
}

TEST_CASE("round trips in both precisions") {
  Rng rng(5);
  const auto t = vt_test::random_tensor({3, 4, 2, 5}, rng);
  CHECK(vxt::decode(vxt::encode(t, vxt::DType::F64)).values == t);
  const auto f = t.cast<float>();
  const auto back = vxt::decode(vxt::encode(f));
  CHECK(back.dtype == vxt::DType::F32);
  CHECK(back.values == f.cast<double>());

  const auto dir = std::filesystem::temp_directory_path() / "voxtherm_vxt_test";
  std::filesystem::create_directories(dir);
  vxt::write(dir / "a.vxt", t);
  CHECK(vxt::read(dir / "a.vxt") == t);
  vxt::write(dir / "b.vxt", f);
  CHECK(vxt::read_f32(dir / "b.vxt") == f);
  CHECK_THROWS(vxt::read_f32(dir / "a.vxt"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("malformed inputs are rejected") {
  Tensor<double> t({2}, std::vector<double>{1, 2});
  std::string bytes = vxt::encode(t, vxt::DType::F64);
  CHECK_THROWS(vxt::decode(bytes.substr(0, bytes.size() - 1)));
  CHECK_THROWS(vxt::decode("VXT2" + bytes.substr(4)));
  CHECK_THROWS(vxt::decode(""));
  CHECK_THROWS_AS(vxt::read("/nonexistent/file.vxt"), IoError);
}

}  // TEST_SUITE
