#pragma once

#include <array>
#include <utility>
#include <vector>

#include "tir/degrade.hpp"
#include "tir/evidential.hpp"
#include "tir/image.hpp"

namespace tir {

// Fixed classical base operators, one per degradation type.
Image stretch_contrast(const Image& img);          // (p1,p99) stretch to [0,1]
Image unsharp_mask(const Image& img);              // Gaussian sigma 1.5, amount 1.0
Image denoise_median_bilateral(const Image& img);  // 3x3 median + 5x5 bilateral

// Gated residual update:
//   out = img - d * strength * (img - base_op(img)),  clamped to [0,1].
// d = 0 or strength = 0 returns the input bit-identically.
Image apply_drm(const Image& img, Degradation kind, bool d, double strength);

struct PathResult {
  Image final;
  std::vector<std::pair<Degradation, Image>> stages;
};

// Sequential apply_drm along the order. The order may cover any subset of
// the three kinds but must not repeat one. strengths are indexed as
// [noise, blur, contrast] matching GateDecision.
PathResult apply_path(const Image& img, const std::vector<Degradation>& order,
                      const GateDecision& gates,
                      const std::array<double, 3>& strengths);

inline int kind_index(Degradation kind) {
  switch (kind) {
    case Degradation::Noise: return 0;
    case Degradation::Blur: return 1;
    default: return 2;
  }
}

}  // namespace tir
