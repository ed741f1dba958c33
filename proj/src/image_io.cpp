#include "tir/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

namespace tir {

namespace {

// Skips whitespace and '#' comment lines between PGM header tokens.
int next_header_int(std::istream& in, const std::string& path) {
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (!std::isspace(c)) {
      break;
    }
    c = in.get();
  }
  if (c == EOF || !std::isdigit(c)) {
    throw io_error("malformed PGM header in " + path);
  }
  int value = 0;
  while (c != EOF && std::isdigit(c)) {
    value = value * 10 + (c - '0');
    c = in.get();
  }
  return value;
}

std::string lower_ext(const std::string& path) {
  const auto dot = path.find_last_of('.');
  if (dot == std::string::npos) return "";
  std::string ext = path.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext;
}

struct PngReadCloser {
  png_structp png = nullptr;
  png_infop info = nullptr;
  std::FILE* fp = nullptr;
  ~PngReadCloser() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    if (fp) std::fclose(fp);
  }
};

struct PngWriteCloser {
  png_structp png = nullptr;
  png_infop info = nullptr;
  std::FILE* fp = nullptr;
  ~PngWriteCloser() {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    if (fp) std::fclose(fp);
  }
};

}  // namespace

int quantize(double v, int maxval) {
  const long q = std::lround(clamp01(v) * double(maxval));
  return int(std::clamp(q, 0L, long(maxval)));
}

Image quantized(const Image& img, int bits) {
  if (bits != 8 && bits != 16) throw io_error("bit depth must be 8 or 16");
  const int maxval = (1 << bits) - 1;
  Image out(img.width, img.height);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    out.data[i] = double(quantize(img.data[i], maxval)) / double(maxval);
  }
  return out;
}

Image load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path);
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (magic[0] != 'P' || magic[1] != '5') {
    throw io_error(path + " is not a binary PGM");
  }
  const int width = next_header_int(in, path);
  const int height = next_header_int(in, path);
  const int maxval = next_header_int(in, path);
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535) {
    throw io_error("unsupported PGM geometry in " + path);
  }
  // next_header_int consumed exactly one byte past the maxval digits; that
  // byte is the single whitespace separator before the raster.
  const std::size_t n = std::size_t(width) * std::size_t(height);
  Image img(width, height);
  if (maxval < 256) {
    std::vector<unsigned char> raw(n);
    in.read(reinterpret_cast<char*>(raw.data()), std::streamsize(n));
    if (std::size_t(in.gcount()) != n) throw io_error("truncated raster in " + path);
    for (std::size_t i = 0; i < n; ++i) img.data[i] = double(raw[i]) / double(maxval);
  } else {
    std::vector<unsigned char> raw(2 * n);
    in.read(reinterpret_cast<char*>(raw.data()), std::streamsize(2 * n));
    if (std::size_t(in.gcount()) != 2 * n) throw io_error("truncated raster in " + path);
    for (std::size_t i = 0; i < n; ++i) {
      const unsigned value = (unsigned(raw[2 * i]) << 8) | unsigned(raw[2 * i + 1]);
      img.data[i] = double(value) / double(maxval);
    }
  }
  return img;
}

void save_pgm(const Image& img, const std::string& path, int bits) {
  if (bits != 8 && bits != 16) throw io_error("bit depth must be 8 or 16");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write " + path);
  const int maxval = (1 << bits) - 1;
  out << "P5\n" << img.width << " " << img.height << "\n" << maxval << "\n";
  const std::size_t n = img.pixel_count();
  if (bits == 8) {
    std::vector<unsigned char> raw(n);
    for (std::size_t i = 0; i < n; ++i) {
      raw[i] = static_cast<unsigned char>(quantize(img.data[i], maxval));
    }
    out.write(reinterpret_cast<const char*>(raw.data()), std::streamsize(n));
  } else {
    std::vector<unsigned char> raw(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
      const unsigned value = unsigned(quantize(img.data[i], maxval));
      raw[2 * i] = static_cast<unsigned char>(value >> 8);
      raw[2 * i + 1] = static_cast<unsigned char>(value & 0xFF);
    }
    out.write(reinterpret_cast<const char*>(raw.data()), std::streamsize(2 * n));
  }
  if (!out) throw io_error("short write to " + path);
}

Image load_png(const std::string& path) {
  PngReadCloser c;
  c.fp = std::fopen(path.c_str(), "rb");
  if (!c.fp) throw io_error("cannot open " + path);
  c.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!c.png) throw io_error("libpng read init failed");
  c.info = png_create_info_struct(c.png);
  if (!c.info) throw io_error("libpng info init failed");
  if (setjmp(png_jmpbuf(c.png))) throw io_error("libpng failed reading " + path);
  png_init_io(c.png, c.fp);
  png_read_info(c.png, c.info);

  png_uint_32 width = png_get_image_width(c.png, c.info);
  png_uint_32 height = png_get_image_height(c.png, c.info);
  int bit_depth = png_get_bit_depth(c.png, c.info);
  int color_type = png_get_color_type(c.png, c.info);

  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(c.png);
  if (color_type & PNG_COLOR_MASK_COLOR) {
    png_set_rgb_to_gray_fixed(c.png, 1, -1, -1);
  }
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(c.png);
  if (bit_depth < 8) png_set_expand_gray_1_2_4_to_8(c.png);
  if (bit_depth == 16) png_set_swap(c.png);  // buffer below is native-endian
  png_read_update_info(c.png, c.info);
  bit_depth = png_get_bit_depth(c.png, c.info);

  const int maxval = bit_depth == 16 ? 65535 : 255;
  Image img(static_cast<int>(width), static_cast<int>(height));
  if (bit_depth == 16) {
    std::vector<std::uint16_t> row(width);
    for (png_uint_32 y = 0; y < height; ++y) {
      png_read_row(c.png, reinterpret_cast<png_bytep>(row.data()), nullptr);
      for (png_uint_32 x = 0; x < width; ++x) {
        img.at(int(x), int(y)) = double(row[x]) / double(maxval);
      }
    }
  } else {
    std::vector<unsigned char> row(width);
    for (png_uint_32 y = 0; y < height; ++y) {
      png_read_row(c.png, row.data(), nullptr);
      for (png_uint_32 x = 0; x < width; ++x) {
        img.at(int(x), int(y)) = double(row[x]) / double(maxval);
      }
    }
  }
  png_read_end(c.png, nullptr);
  return img;
}

void save_png(const Image& img, const std::string& path, int bits) {
  if (bits != 8 && bits != 16) throw io_error("bit depth must be 8 or 16");
  PngWriteCloser c;
  c.fp = std::fopen(path.c_str(), "wb");
  if (!c.fp) throw io_error("cannot write " + path);
  c.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!c.png) throw io_error("libpng write init failed");
  c.info = png_create_info_struct(c.png);
  if (!c.info) throw io_error("libpng info init failed");
  if (setjmp(png_jmpbuf(c.png))) throw io_error("libpng failed writing " + path);
  png_init_io(c.png, c.fp);
  png_set_IHDR(c.png, c.info, png_uint_32(img.width), png_uint_32(img.height),
               bits, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(c.png, c.info);

  const int maxval = (1 << bits) - 1;
  if (bits == 16) {
    std::vector<unsigned char> row(std::size_t(img.width) * 2);
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        const unsigned value = unsigned(quantize(img.at(x, y), maxval));
        row[std::size_t(x) * 2] = static_cast<unsigned char>(value >> 8);
        row[std::size_t(x) * 2 + 1] = static_cast<unsigned char>(value & 0xFF);
      }
      png_write_row(c.png, row.data());
    }
  } else {
    std::vector<unsigned char> row(std::size_t(img.width));
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        row[std::size_t(x)] = static_cast<unsigned char>(quantize(img.at(x, y), maxval));
      }
      png_write_row(c.png, row.data());
    }
  }
  png_write_end(c.png, nullptr);
}

Image load_image(const std::string& path) {
  const std::string ext = lower_ext(path);
  if (ext == "pgm") return load_pgm(path);
  if (ext == "png") return load_png(path);
  throw io_error("unsupported image extension on " + path);
}

void save_image(const Image& img, const std::string& path, int bits) {
  const std::string ext = lower_ext(path);
  if (ext == "pgm") return save_pgm(img, path, bits);
  if (ext == "png") return save_png(img, path, bits);
  throw io_error("unsupported image extension on " + path);
}

}  // namespace tir
