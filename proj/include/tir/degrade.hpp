#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tir/image.hpp"

namespace tir {

enum class Degradation { Contrast, Blur, Noise };

char degradation_code(Degradation kind);         // 'c' / 'b' / 'n'
const char* degradation_name(Degradation kind);  // "contrast" / ...
Degradation degradation_from_code(char code);    // throws on unknown code
Degradation degradation_from_name(const std::string& name);

struct DegradationStep {
  Degradation kind = Degradation::Noise;
  double severity = 0.5;  // strictly in (0,1]
};

// Ordered compound degradation. At most one step per kind, 1-3 steps.
struct DegradationRecipe {
  std::vector<DegradationStep> steps;
  std::uint64_t seed = 0;
  bool order_randomized = false;

  void validate() const;  // throws std::invalid_argument
};

// Substream tags for deriving per-step seeds from a recipe seed. Replaying a
// stochastic step outside synthesize() requires the matching derived seed.
constexpr std::uint64_t kSubstreamOrder = 0;
constexpr std::uint64_t kSubstreamBlur = 1;
constexpr std::uint64_t kSubstreamNoise = 2;

// Midtone-anchored gamma: fixes 0 / 0.5 / 1, identity at gamma = 1.
double gamma_adjust(double v, double gamma);

// Range compression toward mid-gray composed with the gamma curve:
//   out = 0.5 + (1 - 0.8*severity) * (gamma_adjust(v, 1+severity) - 0.5)
Image apply_contrast(const Image& img, double severity);

// Convolution with a normalized PSF. The seed picks the kernel family:
// isotropic Gaussian with sigma = 0.5 + 2.5*severity, or a linear motion
// kernel of length 3 + round(8*severity) at a seeded angle.
Image apply_blur(const Image& img, double severity, std::uint64_t seed);

// Additive sensor noise: per-column stripe offsets (std 0.05*severity),
// per-pixel readout noise (std 0.1*severity) and a smoothed low-frequency
// optics bias standardized to std 0.03*severity. Clamped to [0,1].
Image apply_noise(const Image& img, double severity, std::uint64_t seed);

struct SynthesisResult {
  Image image;
  std::vector<Degradation> applied_order;
};

// Applies the recipe steps in order (Fisher-Yates shuffled by the recipe
// seed when order_randomized). Each stochastic step draws from its own
// per-kind substream so a kind's realization does not depend on position.
SynthesisResult synthesize(const Image& img, const DegradationRecipe& recipe);

// Dense motion-blur kernel: a line of the given length through the center
// at the given angle, bilinearly rasterized and normalized.
struct Kernel2d {
  int w = 0;
  int h = 0;
  std::vector<double> taps;
};
Kernel2d motion_kernel(int length, double angle_rad);
Image convolve_kernel(const Image& img, const Kernel2d& k);

// Plain-text recipe files: kind/severity lines per step plus seed and
// order_randomized keys.
void save_recipe(const DegradationRecipe& recipe, const std::string& path);
DegradationRecipe load_recipe(const std::string& path);

}  // namespace tir
