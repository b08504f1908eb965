#include "mistnormal/image.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iterator>
#include <string>

namespace mistnormal {

Image::Image(int width, int height, int channels, std::uint8_t fill)
    : width_(width), height_(height), channels_(channels) {
  require(width > 0 && height > 0, "image dimensions must be positive");
  require(channels == 1 || channels == 3, "images have 1 or 3 channels");
  data_.assign(pixel_count() * channels, fill);
}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

namespace {

class PnmReader {
 public:
  PnmReader(std::vector<char> bytes, std::string name) : bytes_(std::move(bytes)), name_(std::move(name)) {}

  int next_int() {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || !std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) fail("bad header");
    long value = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      value = value * 10 + (bytes_[pos_++] - '0');
      if (value > 1'000'000) fail("header value out of range");
    }
    return static_cast<int>(value);
  }

  std::string magic() {
    if (bytes_.size() < 2) fail("file too short");
    pos_ = 2;
    return std::string(bytes_.begin(), bytes_.begin() + 2);
  }

  // Exactly one whitespace byte separates the header from binary raster data.
  void skip_single_space() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) fail("bad header");
    ++pos_;
  }

  std::uint8_t next_byte() {
    if (pos_ >= bytes_.size()) fail("truncated raster");
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }

  [[noreturn]] void fail(const std::string& why) const {
    throw Error(ErrorKind::ImageLoadError, name_ + ": " + why);
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::vector<char> bytes_;
  std::string name_;
  std::size_t pos_ = 0;
};

}  // namespace

Image read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::ImageLoadError, "cannot open " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  PnmReader reader(std::move(bytes), path.string());

  const std::string magic = reader.magic();
  int channels = 0;
  bool binary = false;
  if (magic == "P5") {
    channels = 1, binary = true;
  } else if (magic == "P6") {
    channels = 3, binary = true;
  } else if (magic == "P2") {
    channels = 1;
  } else if (magic == "P3") {
    channels = 3;
  } else {
    reader.fail("unsupported magic " + magic);
  }
  const int width = reader.next_int();
  const int height = reader.next_int();
  const int maxval = reader.next_int();
  if (width <= 0 || height <= 0) reader.fail("empty image");
  if (maxval <= 0 || maxval > 255) reader.fail("only 8-bit maxval is supported");

  Image image(width, height, channels);
  auto& data = image.data();
  if (binary) {
    reader.skip_single_space();
    for (auto& v : data) v = reader.next_byte();
  } else {
    for (auto& v : data) {
      const int value = reader.next_int();
      if (value > maxval) reader.fail("sample exceeds maxval");
      v = static_cast<std::uint8_t>(value);
    }
  }
  if (maxval != 255) {
    for (auto& v : data) v = static_cast<std::uint8_t>((v * 255 + maxval / 2) / maxval);
  }
  return image;
}

void write_pnm(const std::filesystem::path& path, const Image& image) {
  require(!image.empty(), "cannot write an empty image");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write " + path.string());
  out << (image.channels() == 1 ? "P5" : "P6") << '\n'
      << image.width() << ' ' << image.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.data().data()),
            static_cast<std::streamsize>(image.data().size()));
}

void write_mask_pgm(const std::filesystem::path& path, const Mask& mask) {
  Image out(mask.width(), mask.height(), 1);
  for (std::size_t i = 0; i < mask.pixel_count(); ++i) out.data()[i] = mask.bits()[i] ? 255 : 0;
  write_pnm(path, out);
}

std::uint8_t luma(const Image& image, int x, int y) {
  const std::uint8_t* p = image.pixel(x, y);
  if (image.channels() == 1) return p[0];
  return static_cast<std::uint8_t>((299 * p[0] + 587 * p[1] + 114 * p[2] + 500) / 1000);
}

}  // namespace mistnormal
