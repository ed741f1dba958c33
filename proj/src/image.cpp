#include "tir/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace tir {

Image::Image(int w, int h, double fill)
    : width(w), height(h), data(std::size_t(w) * std::size_t(h), fill) {}

void Image::validate() const {
  if (width < kMinImageSide || height < kMinImageSide) {
    throw std::invalid_argument("image sides must be at least 8 pixels");
  }
  if (data.size() != std::size_t(width) * std::size_t(height)) {
    throw std::invalid_argument("image buffer does not match its dimensions");
  }
  for (double v : data) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw std::invalid_argument("image samples must be finite and in [0,1]");
    }
  }
}

double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

Image& clamp01_inplace(Image& img) {
  for (double& v : img.data) v = clamp01(v);
  return img;
}

int reflect_index(int i, int n) {
  // Symmetric (edge-duplicating) reflection, folded until in range.
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - 1 - i;
  }
  return i;
}

double mean(const Image& img) {
  double s = 0.0;
  for (double v : img.data) s += v;
  return img.data.empty() ? 0.0 : s / double(img.data.size());
}

double min_value(const Image& img) {
  return *std::min_element(img.data.begin(), img.data.end());
}

double max_value(const Image& img) {
  return *std::max_element(img.data.begin(), img.data.end());
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("percentile of empty set");
  std::sort(values.begin(), values.end());
  const double pos = q * double(values.size() - 1);
  const std::size_t lo = std::size_t(std::floor(pos));
  const std::size_t hi = std::size_t(std::ceil(pos));
  const double frac = pos - double(lo);
  return values[lo] * (1.0 - frac) + values[hi] * frac;
}

Image convolve_separable(const Image& img, const std::vector<double>& kx,
                         const std::vector<double>& ky) {
  if (kx.size() % 2 == 0 || ky.size() % 2 == 0) {
    throw std::invalid_argument("separable taps must have odd length");
  }
  const int rx = int(kx.size()) / 2;
  const int ry = int(ky.size()) / 2;
  Image tmp(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double acc = 0.0;
      for (int t = -rx; t <= rx; ++t) {
        acc += kx[std::size_t(t + rx)] * img.at(reflect_index(x + t, img.width), y);
      }
      tmp.at(x, y) = acc;
    }
  }
  Image out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double acc = 0.0;
      for (int t = -ry; t <= ry; ++t) {
        acc += ky[std::size_t(t + ry)] * tmp.at(x, reflect_index(y + t, img.height));
      }
      out.at(x, y) = acc;
    }
  }
  return out;
}

Image convolve2d(const Image& img, const std::vector<double>& taps, int kw,
                 int kh) {
  if (kw % 2 == 0 || kh % 2 == 0 || taps.size() != std::size_t(kw) * kh) {
    throw std::invalid_argument("convolve2d needs an odd-sized dense kernel");
  }
  const int rx = kw / 2;
  const int ry = kh / 2;
  Image out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double acc = 0.0;
      for (int j = -ry; j <= ry; ++j) {
        const int sy = reflect_index(y + j, img.height);
        for (int i = -rx; i <= rx; ++i) {
          const int sx = reflect_index(x + i, img.width);
          acc += taps[std::size_t(j + ry) * kw + std::size_t(i + rx)] * img.at(sx, sy);
        }
      }
      out.at(x, y) = acc;
    }
  }
  return out;
}

std::vector<double> gaussian_taps(double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  const int radius = std::max(1, int(std::ceil(3.0 * sigma)));
  std::vector<double> taps(std::size_t(2 * radius + 1));
  double sum = 0.0;
  for (int t = -radius; t <= radius; ++t) {
    const double v = std::exp(-0.5 * double(t) * double(t) / (sigma * sigma));
    taps[std::size_t(t + radius)] = v;
    sum += v;
  }
  for (double& v : taps) v /= sum;
  return taps;
}

Image box3(const Image& img) {
  static const std::vector<double> k = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  return convolve_separable(img, k, k);
}

Image laplacian3(const Image& img) {
  static const std::vector<double> k = {0, 1, 0, 1, -4, 1, 0, 1, 0};
  return convolve2d(img, k, 3, 3);
}

bool bit_equal(const Image& a, const Image& b) {
  if (!a.same_shape(b)) return false;
  return std::memcmp(a.data.data(), b.data.data(),
                     a.data.size() * sizeof(double)) == 0;
}

std::vector<double> downsample_features(const Image& img, std::size_t max_dims) {
  if (img.pixel_count() <= max_dims) return img.data;
  // Smallest integer block size whose grid fits in max_dims.
  int block = 2;
  auto cells = [&](int b) {
    return std::size_t((img.width + b - 1) / b) * std::size_t((img.height + b - 1) / b);
  };
  while (cells(block) > max_dims) ++block;
  const int gw = (img.width + block - 1) / block;
  const int gh = (img.height + block - 1) / block;
  std::vector<double> out(std::size_t(gw) * gh, 0.0);
  for (int gy = 0; gy < gh; ++gy) {
    for (int gx = 0; gx < gw; ++gx) {
      double acc = 0.0;
      int count = 0;
      for (int y = gy * block; y < std::min((gy + 1) * block, img.height); ++y) {
        for (int x = gx * block; x < std::min((gx + 1) * block, img.width); ++x) {
          acc += img.at(x, y);
          ++count;
        }
      }
      out[std::size_t(gy) * gw + gx] = acc / double(count);
    }
  }
  return out;
}

}  // namespace tir
