#pragma once

#include <cstddef>
#include <vector>

namespace tir {

inline constexpr int kMinImageSide = 8;

// Grayscale raster, row-major, intensities in [0,1].
struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  Image() = default;
  Image(int w, int h, double fill = 0.0);

  double& at(int x, int y) { return data[std::size_t(y) * width + x]; }
  double at(int x, int y) const { return data[std::size_t(y) * width + x]; }

  std::size_t pixel_count() const { return data.size(); }
  bool same_shape(const Image& other) const {
    return width == other.width && height == other.height;
  }

  // Throws std::invalid_argument if the shape or sample range is off.
  void validate() const;
};

double clamp01(double v);
Image& clamp01_inplace(Image& img);

// Symmetric boundary index: -1 -> 0, -2 -> 1, n -> n-1, n+1 -> n-2.
int reflect_index(int i, int n);

double mean(const Image& img);
double min_value(const Image& img);
double max_value(const Image& img);

// Linear-interpolated percentile of the sample values, q in [0,1].
double percentile(std::vector<double> values, double q);

// Separable convolution with symmetric boundary handling. Tap vectors must
// have odd length and are applied horizontally (kx) then vertically (ky).
Image convolve_separable(const Image& img, const std::vector<double>& kx,
                         const std::vector<double>& ky);

// Dense 2-D convolution (odd kernel dims), symmetric boundary handling.
Image convolve2d(const Image& img, const std::vector<double>& taps, int kw,
                 int kh);

// Normalized Gaussian taps; length 2*ceil(3*sigma)+1 (at least 3).
std::vector<double> gaussian_taps(double sigma);

// 3x3 box mean and 3x3 Laplacian [0 1 0; 1 -4 1; 0 1 0].
Image box3(const Image& img);
Image laplacian3(const Image& img);

// Exact sample-wise equality (bit pattern of every pixel).
bool bit_equal(const Image& a, const Image& b);

// Block-average downsample of the raster flattened to a vector with at most
// max_dims entries; returns the raster itself when already small enough.
std::vector<double> downsample_features(const Image& img,
                                        std::size_t max_dims = 4096);

}  // namespace tir
