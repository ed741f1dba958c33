#pragma once

#include <stdexcept>
#include <string>

#include "tir/image.hpp"

namespace tir {

struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Binary PGM (P5), 8- or 16-bit (big-endian samples for 16-bit).
Image load_pgm(const std::string& path);
void save_pgm(const Image& img, const std::string& path, int bits = 16);

// Grayscale PNG, 8- or 16-bit.
Image load_png(const std::string& path);
void save_png(const Image& img, const std::string& path, int bits = 16);

// Dispatch on extension (.pgm/.png, case-insensitive).
Image load_image(const std::string& path);
void save_image(const Image& img, const std::string& path, int bits = 16);

// Quantization used by the writers; exposed so callers can reproduce the
// exact value a save/load round trip yields.
int quantize(double v, int maxval);
Image quantized(const Image& img, int bits);

}  // namespace tir
