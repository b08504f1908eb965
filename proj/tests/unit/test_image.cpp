#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "generators.hpp"
#include "mistnormal/image.hpp"

using namespace mistnormal;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "mistnormal_image_tests";
  fs::create_directories(dir);
  return dir / name;
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream(p, std::ios::binary) << s;
}

ErrorKind load_error(const fs::path& p) {
  try {
    read_pnm(p);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST(Pnm, BinaryRoundTrip) {
  mistnormal::testing::Gen g(31);
  for (int channels : {1, 3}) {
    Image img(17, 9, channels);
    for (auto& v : img.data()) v = static_cast<std::uint8_t>(g.integer(0, 255));
    const auto p = temp_file("rt" + std::to_string(channels) + ".pnm");
    write_pnm(p, img);
    EXPECT_EQ(read_pnm(p), img);
  }
}

TEST(Pnm, AsciiWithCommentsAndMaxval) {
  const auto p = temp_file("ascii.pgm");
  write_text(p, "P2\n# comment\n3 2\n15\n0 15 7\n1 2 3\n");
  const Image img = read_pnm(p);
  ASSERT_EQ(img.width(), 3);
  ASSERT_EQ(img.channels(), 1);
  EXPECT_EQ(img.at(1, 0), 255);
  EXPECT_EQ(img.at(2, 0), 119);
  const auto q = temp_file("ascii.ppm");
  write_text(q, "P3 1 1 255 10 20 30\n");
  const Image c = read_pnm(q);
  EXPECT_EQ(c.channels(), 3);
  EXPECT_EQ(c.at(0, 0, 2), 30);
}

TEST(Pnm, Errors) {
  EXPECT_EQ(load_error(temp_file("missing.pgm")), ErrorKind::ImageLoadError);
  const auto bad = temp_file("bad.pgm");
  write_text(bad, "P7\n1 1\n255\n");
  EXPECT_EQ(load_error(bad), ErrorKind::ImageLoadError);
  write_text(bad, "P5\n4 4\n255\nab");
  EXPECT_EQ(load_error(bad), ErrorKind::ImageLoadError);
  write_text(bad, "P5\n1 1\n65535\n\x01\x02");
  EXPECT_EQ(load_error(bad), ErrorKind::ImageLoadError);
}

TEST(Mask, CountAndOutOfBounds) {
  Mask m(4, 3);
  m.set(1, 1);
  m.set(3, 2);
  EXPECT_EQ(m.count(), 2u);
  EXPECT_FALSE(m.test(-1, 0));
  EXPECT_FALSE(m.test(4, 0));
  EXPECT_TRUE(m.test(3, 2));
  const auto p = temp_file("mask.pgm");
  write_mask_pgm(p, m);
  const Image img = read_pnm(p);
  EXPECT_EQ(img.at(1, 1), 255);
  EXPECT_EQ(img.at(0, 0), 0);
}

TEST(Luma, Weights) {
  Image img(1, 1, 3);
  img.at(0, 0, 0) = 255;
  EXPECT_EQ(luma(img, 0, 0), 76);
  Image gray(1, 1, 1, 99);
  EXPECT_EQ(luma(gray, 0, 0), 99);
}
