#include "gsae/idx.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>

#include "gsae/errors.hpp"

namespace gsae {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::uint32_t get_u32_be(std::istream& in, const std::string& path,
                         std::streamoff offset) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) {
    throw IoError(path + ": truncated at offset " + std::to_string(offset));
  }
  return (static_cast<std::uint32_t>(bytes[0]) << 24) |
         (static_cast<std::uint32_t>(bytes[1]) << 16) |
         (static_cast<std::uint32_t>(bytes[2]) << 8) |
         static_cast<std::uint32_t>(bytes[3]);
}

void put_u32_be(std::ostream& out, std::uint32_t v) {
  const unsigned char bytes[4] = {static_cast<unsigned char>(v >> 24),
                                  static_cast<unsigned char>(v >> 16),
                                  static_cast<unsigned char>(v >> 8),
                                  static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(bytes), 4);
}

}  // namespace

IdxImages load_idx_images(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open");
  const std::uint32_t magic = get_u32_be(in, path, 0);
  if (magic != kImageMagic) {
    throw IoError(path + ": bad image magic at offset 0");
  }
  const std::uint32_t count = get_u32_be(in, path, 4);
  const std::uint32_t rows = get_u32_be(in, path, 8);
  const std::uint32_t cols = get_u32_be(in, path, 12);
  if (rows == 0 || cols == 0) throw IoError(path + ": zero image dimensions");

  IdxImages images;
  images.image_rows = static_cast<int>(rows);
  images.image_cols = static_cast<int>(cols);
  const std::size_t pixels_per_image =
      static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  images.pixels.resize(static_cast<Eigen::Index>(pixels_per_image),
                       static_cast<Eigen::Index>(count));
  std::vector<unsigned char> buf(pixels_per_image);
  for (std::uint32_t i = 0; i < count; ++i) {
    if (!in.read(reinterpret_cast<char*>(buf.data()),
                 static_cast<std::streamsize>(buf.size()))) {
      throw IoError(path + ": truncated at offset " +
                    std::to_string(16 + static_cast<std::streamoff>(i) *
                                            static_cast<std::streamoff>(
                                                pixels_per_image)));
    }
    for (std::size_t p = 0; p < pixels_per_image; ++p) {
      images.pixels(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(i)) =
          static_cast<double>(buf[p]) / 255.0;
    }
  }
  return images;
}

std::vector<int> load_idx_labels(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open");
  const std::uint32_t magic = get_u32_be(in, path, 0);
  if (magic != kLabelMagic) {
    throw IoError(path + ": bad label magic at offset 0");
  }
  const std::uint32_t count = get_u32_be(in, path, 4);
  std::vector<unsigned char> buf(count);
  if (count > 0 && !in.read(reinterpret_cast<char*>(buf.data()),
                            static_cast<std::streamsize>(buf.size()))) {
    throw IoError(path + ": truncated at offset 8");
  }
  return std::vector<int>(buf.begin(), buf.end());
}

void save_idx_images(const std::string& path, const IdxImages& images) {
  const auto expected = static_cast<Eigen::Index>(images.image_rows) *
                        static_cast<Eigen::Index>(images.image_cols);
  if (images.image_rows <= 0 || images.image_cols <= 0 ||
      images.pixels.rows() != expected) {
    throw DimensionError("pixel matrix does not match the image shape");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path + ": cannot open for writing");
  put_u32_be(out, kImageMagic);
  put_u32_be(out, static_cast<std::uint32_t>(images.pixels.cols()));
  put_u32_be(out, static_cast<std::uint32_t>(images.image_rows));
  put_u32_be(out, static_cast<std::uint32_t>(images.image_cols));
  std::vector<unsigned char> buf(static_cast<std::size_t>(images.pixels.rows()));
  for (Eigen::Index i = 0; i < images.pixels.cols(); ++i) {
    for (Eigen::Index p = 0; p < images.pixels.rows(); ++p) {
      const double v = std::min(std::max(images.pixels(p, i), 0.0), 1.0);
      buf[static_cast<std::size_t>(p)] =
          static_cast<unsigned char>(std::lround(v * 255.0));
    }
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size()));
  }
  out.flush();
  if (!out) throw IoError(path + ": write failed");
}

void save_idx_labels(const std::string& path, const std::vector<int>& labels) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path + ": cannot open for writing");
  put_u32_be(out, kLabelMagic);
  put_u32_be(out, static_cast<std::uint32_t>(labels.size()));
  for (const int label : labels) {
    if (label < 0 || label > 255) throw ConfigError("labels must fit in a byte");
    const auto byte = static_cast<unsigned char>(label);
    out.write(reinterpret_cast<const char*>(&byte), 1);
  }
  out.flush();
  if (!out) throw IoError(path + ": write failed");
}

}  // namespace gsae
