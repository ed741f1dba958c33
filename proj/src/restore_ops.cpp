#include "tir/restore_ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tir {

Image stretch_contrast(const Image& img) {
  const double lo = percentile(img.data, 0.01);
  const double hi = percentile(img.data, 0.99);
  Image out(img.width, img.height);
  if (hi - lo < 1e-9) {
    out.data = img.data;  // flat image; nothing to stretch
    return out;
  }
  const double scale = 1.0 / (hi - lo);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    out.data[i] = clamp01((img.data[i] - lo) * scale);
  }
  return out;
}

Image unsharp_mask(const Image& img) {
  const std::vector<double> taps = gaussian_taps(1.5);
  const Image smooth = convolve_separable(img, taps, taps);
  Image out(img.width, img.height);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    out.data[i] = clamp01(img.data[i] + (img.data[i] - smooth.data[i]));
  }
  return out;
}

Image denoise_median_bilateral(const Image& img) {
  // 3x3 median knocks out impulsive outliers and stripe edges.
  Image med(img.width, img.height);
  double window[9];
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      int k = 0;
      for (int j = -1; j <= 1; ++j) {
        for (int i = -1; i <= 1; ++i) {
          window[k++] = img.at(reflect_index(x + i, img.width),
                               reflect_index(y + j, img.height));
        }
      }
      std::nth_element(window, window + 4, window + 9);
      med.at(x, y) = window[4];
    }
  }

  // 5x5 bilateral pass on the median output: spatial sigma 1.5, range
  // sigma 0.1 so edges wider than the noise floor survive.
  constexpr double kSpatialSigma = 1.5;
  constexpr double kRangeSigma = 0.1;
  double spatial[5][5];
  for (int j = -2; j <= 2; ++j) {
    for (int i = -2; i <= 2; ++i) {
      spatial[j + 2][i + 2] =
          std::exp(-0.5 * double(i * i + j * j) / (kSpatialSigma * kSpatialSigma));
    }
  }
  Image out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double center = med.at(x, y);
      double acc = 0.0;
      double norm = 0.0;
      for (int j = -2; j <= 2; ++j) {
        for (int i = -2; i <= 2; ++i) {
          const double v = med.at(reflect_index(x + i, img.width),
                                  reflect_index(y + j, img.height));
          const double dr = v - center;
          const double w = spatial[j + 2][i + 2] *
                           std::exp(-0.5 * dr * dr / (kRangeSigma * kRangeSigma));
          acc += w * v;
          norm += w;
        }
      }
      out.at(x, y) = acc / norm;
    }
  }
  return out;
}

Image apply_drm(const Image& img, Degradation kind, bool d, double strength) {
  if (!(strength >= 0.0) || strength > 1.0) {
    throw std::invalid_argument("operator strength must lie in [0,1]");
  }
  if (!d || strength == 0.0) return img;

  Image base(0, 0);
  switch (kind) {
    case Degradation::Contrast: base = stretch_contrast(img); break;
    case Degradation::Blur: base = unsharp_mask(img); break;
    case Degradation::Noise: base = denoise_median_bilateral(img); break;
  }
  Image out(img.width, img.height);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    out.data[i] = clamp01(img.data[i] - strength * (img.data[i] - base.data[i]));
  }
  return out;
}

PathResult apply_path(const Image& img, const std::vector<Degradation>& order,
                      const GateDecision& gates,
                      const std::array<double, 3>& strengths) {
  bool seen[3] = {false, false, false};
  for (Degradation kind : order) {
    const int k = kind_index(kind);
    if (seen[k]) throw std::invalid_argument("path repeats a degradation kind");
    seen[k] = true;
  }
  PathResult result{img, {}};
  for (Degradation kind : order) {
    const int k = kind_index(kind);
    result.final = apply_drm(result.final, kind, gates.by_index(k),
                             strengths[std::size_t(k)]);
    result.stages.emplace_back(kind, result.final);
  }
  return result;
}

}  // namespace tir
