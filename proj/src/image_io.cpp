#include "dermkit/image_io.hpp"

#include <png.h>
#include <stdio.h>
#include <jpeglib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <csetjmp>
#include <cstring>

#include "dermkit/error.hpp"
#include "dermkit/fileio.hpp"
#include "dermkit/morphology.hpp"

namespace dermkit {

namespace {

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

bool is_png(const std::string& bytes) {
  static const unsigned char sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  return bytes.size() >= 8 && std::memcmp(bytes.data(), sig, 8) == 0;
}

bool is_jpeg(const std::string& bytes) {
  return bytes.size() >= 3 && static_cast<unsigned char>(bytes[0]) == 0xff &&
         static_cast<unsigned char>(bytes[1]) == 0xd8;
}

// Decodes a PNG into 8-bit pixels of the requested simplified-API format.
std::vector<std::uint8_t> decode_png(const std::string& bytes, png_uint_32 format,
                                     int& height, int& width) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw FormatError(std::string("png decode: ") + image.message);
  }
  image.format = format;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&image);
    throw FormatError(std::string("png decode: ") + image.message);
  }
  height = static_cast<int>(image.height);
  width = static_cast<int>(image.width);
  return buf;
}

std::string encode_png_bytes(const std::vector<std::uint8_t>& pixels, int height,
                             int width, png_uint_32 format) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = format;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, pixels.data(), 0, nullptr)) {
    throw FormatError(std::string("png encode: ") + image.message);
  }
  std::string out(size, '\0');
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, pixels.data(), 0,
                                 nullptr)) {
    throw FormatError(std::string("png encode: ") + image.message);
  }
  out.resize(size);
  return out;
}

struct JpegError {
  jpeg_error_mgr mgr;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegError*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

Image decode_jpeg(const std::string& bytes) {
  jpeg_decompress_struct cinfo;
  JpegError err;
  cinfo.err = jpeg_std_error(&err.mgr);
  err.mgr.error_exit = jpeg_error_exit;
  std::vector<std::uint8_t> rgb;
  int h = 0;
  int w = 0;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw FormatError(std::string("jpeg decode: ") + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, reinterpret_cast<const unsigned char*>(bytes.data()),
               static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  h = static_cast<int>(cinfo.output_height);
  w = static_cast<int>(cinfo.output_width);
  rgb.resize(static_cast<std::size_t>(h) * w * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = rgb.data() + static_cast<std::size_t>(cinfo.output_scanline) * w * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  Image img(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        img.at(c, y, x) = rgb[(static_cast<std::size_t>(y) * w + x) * 3 + c] / 255.0;
      }
    }
  }
  return img;
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const std::string& s, std::size_t pos) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[pos + i])) << (8 * i);
  }
  return v;
}

}  // namespace

Image decode_image(const std::string& bytes) {
  if (is_jpeg(bytes)) return decode_jpeg(bytes);
  if (!is_png(bytes)) throw FormatError("unrecognised image format");
  int h = 0;
  int w = 0;
  const auto rgb = decode_png(bytes, PNG_FORMAT_RGB, h, w);
  Image img(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        img.at(c, y, x) = rgb[(static_cast<std::size_t>(y) * w + x) * 3 + c] / 255.0;
      }
    }
  }
  return img;
}

Image read_image(const std::filesystem::path& path) {
  return decode_image(read_file(path));
}

std::string encode_png(const Image& img) {
  std::vector<std::uint8_t> rgb(img.plane_size() * 3);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        rgb[(static_cast<std::size_t>(y) * img.width + x) * 3 + c] = to_byte(img.at(c, y, x));
      }
    }
  }
  return encode_png_bytes(rgb, img.height, img.width, PNG_FORMAT_RGB);
}

void write_png(const std::filesystem::path& path, const Image& img) {
  write_file_atomic(path, encode_png(img));
}

BinaryMask read_mask(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  if (!is_png(bytes)) throw FormatError(path.string() + ": masks must be PNG");
  int h = 0;
  int w = 0;
  const auto gray = decode_png(bytes, PNG_FORMAT_GRAY, h, w);
  BinaryMask m(h, w);
  for (std::size_t i = 0; i < m.size(); ++i) m.data[i] = gray[i] >= 128;
  return m;
}

std::string encode_mask_png(const BinaryMask& mask) {
  return encode_png_bytes(to_mask_bytes(mask), mask.height, mask.width,
                          PNG_FORMAT_GRAY);
}

void write_mask_png(const std::filesystem::path& path, const BinaryMask& mask) {
  write_file_atomic(path, encode_mask_png(mask));
}

LabelMap read_label_png(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  if (!is_png(bytes)) throw FormatError(path.string() + ": label maps must be PNG");
  int h = 0;
  int w = 0;
  const auto rgb = decode_png(bytes, PNG_FORMAT_RGB, h, w);
  LabelMap labels(h, w);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    labels.data[i] = rgb[3 * i] + 256 * rgb[3 * i + 1];
  }
  return labels;
}

std::string encode_label_png(const LabelMap& labels) {
  std::vector<std::uint8_t> rgb(labels.size() * 3, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::int32_t v = labels.data[i];
    if (v < 0 || v >= 65536) throw FormatError("label out of PNG index range");
    rgb[3 * i] = static_cast<std::uint8_t>(v & 0xff);
    rgb[3 * i + 1] = static_cast<std::uint8_t>(v >> 8);
  }
  return encode_png_bytes(rgb, labels.height, labels.width, PNG_FORMAT_RGB);
}

void write_label_png(const std::filesystem::path& path, const LabelMap& labels) {
  write_file_atomic(path, encode_label_png(labels));
}

Image distance_heatmap(const DistanceMap& d) {
  const Grid<double> n = normalized_for_display(d);
  Image img(d.height, d.width);
  for (int y = 0; y < d.height; ++y) {
    for (int x = 0; x < d.width; ++x) {
      const double v = n.at(y, x);
      // jet: blue -> cyan -> yellow -> red
      const double r = std::clamp(1.5 - std::abs(4.0 * v - 3.0), 0.0, 1.0);
      const double g = std::clamp(1.5 - std::abs(4.0 * v - 2.0), 0.0, 1.0);
      const double b = std::clamp(1.5 - std::abs(4.0 * v - 1.0), 0.0, 1.0);
      img.at(0, y, x) = r;
      img.at(1, y, x) = g;
      img.at(2, y, x) = b;
    }
  }
  return img;
}

Image overlay_outline(const Image& img, const BinaryMask& mask,
                      const double (&rgb)[3]) {
  if (!mask.same_size(img.height, img.width)) {
    throw std::invalid_argument("overlay: mask and image sizes differ");
  }
  Image out = img;
  for (const Pixel& p : extract_border(mask)) {
    for (int c = 0; c < 3; ++c) out.at(c, p.y, p.x) = rgb[c];
  }
  return out;
}

void write_raw_grid(const std::filesystem::path& path, const Grid<double>& g) {
  std::string out("DKGRID1", 8);
  put_u32(out, static_cast<std::uint32_t>(g.height));
  put_u32(out, static_cast<std::uint32_t>(g.width));
  for (double v : g.data) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  write_file_atomic(path, out);
}

Grid<double> read_raw_grid(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  if (bytes.size() < 16 || bytes.compare(0, 8, std::string("DKGRID1", 8)) != 0) {
    throw FormatError(path.string() + ": not a raw grid file");
  }
  const int h = static_cast<int>(get_u32(bytes, 8));
  const int w = static_cast<int>(get_u32(bytes, 12));
  if (bytes.size() != 16 + 4 * static_cast<std::size_t>(h) * w) {
    throw FormatError(path.string() + ": raw grid size mismatch");
  }
  Grid<double> g(h, w);
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.data[i] = std::bit_cast<float>(get_u32(bytes, 16 + 4 * i));
  }
  return g;
}

}  // namespace dermkit
