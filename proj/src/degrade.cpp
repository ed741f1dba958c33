#include "tir/degrade.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "tir/rng.hpp"

namespace tir {

namespace {

constexpr double kPi = 3.14159265358979323846;

}  // namespace

char degradation_code(Degradation kind) {
  switch (kind) {
    case Degradation::Contrast: return 'c';
    case Degradation::Blur: return 'b';
    case Degradation::Noise: return 'n';
  }
  throw std::invalid_argument("unknown degradation kind");
}

const char* degradation_name(Degradation kind) {
  switch (kind) {
    case Degradation::Contrast: return "contrast";
    case Degradation::Blur: return "blur";
    case Degradation::Noise: return "noise";
  }
  throw std::invalid_argument("unknown degradation kind");
}

Degradation degradation_from_code(char code) {
  switch (code) {
    case 'c': return Degradation::Contrast;
    case 'b': return Degradation::Blur;
    case 'n': return Degradation::Noise;
  }
  throw std::invalid_argument(std::string("unknown degradation code '") + code + "'");
}

Degradation degradation_from_name(const std::string& name) {
  if (name == "contrast") return Degradation::Contrast;
  if (name == "blur") return Degradation::Blur;
  if (name == "noise") return Degradation::Noise;
  throw std::invalid_argument("unknown degradation name '" + name + "'");
}

void DegradationRecipe::validate() const {
  if (steps.empty() || steps.size() > 3) {
    throw std::invalid_argument("recipe needs 1 to 3 steps");
  }
  bool seen[3] = {false, false, false};
  for (const DegradationStep& s : steps) {
    const int k = int(s.kind);
    if (k < 0 || k > 2) throw std::invalid_argument("recipe step kind out of range");
    if (seen[k]) throw std::invalid_argument("recipe repeats a degradation kind");
    seen[k] = true;
    if (!(s.severity > 0.0) || s.severity > 1.0) {
      throw std::invalid_argument("severity must lie in (0,1]");
    }
  }
}

double gamma_adjust(double v, double gamma) {
  v = clamp01(v);
  if (v <= 0.5) return 0.5 * std::pow(2.0 * v, gamma);
  return 1.0 - 0.5 * std::pow(2.0 - 2.0 * v, gamma);
}

Image apply_contrast(const Image& img, double severity) {
  const double gamma = 1.0 + severity;
  const double squeeze = 1.0 - 0.8 * severity;
  Image out(img.width, img.height);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    out.data[i] = clamp01(0.5 + squeeze * (gamma_adjust(img.data[i], gamma) - 0.5));
  }
  return out;
}

Kernel2d motion_kernel(int length, double angle_rad) {
  if (length < 1) throw std::invalid_argument("motion length must be positive");
  const int half = (length - 1) / 2 + 1;
  const int side = 2 * half + 1;
  Kernel2d k;
  k.w = side;
  k.h = side;
  k.taps.assign(std::size_t(side) * side, 0.0);
  const double cx = double(side - 1) / 2.0;
  const double cy = double(side - 1) / 2.0;
  const double dx = std::cos(angle_rad);
  const double dy = std::sin(angle_rad);
  // Bilinear splat of evenly spaced points along the segment.
  const int samples = 8 * length;
  for (int s = 0; s < samples; ++s) {
    const double t = (double(s) / double(samples - 1) - 0.5) * double(length - 1);
    const double px = cx + t * dx;
    const double py = cy + t * dy;
    const int x0 = int(std::floor(px));
    const int y0 = int(std::floor(py));
    const double fx = px - double(x0);
    const double fy = py - double(y0);
    auto splat = [&](int x, int y, double w) {
      if (x >= 0 && x < side && y >= 0 && y < side) {
        k.taps[std::size_t(y) * side + x] += w;
      }
    };
    splat(x0, y0, (1.0 - fx) * (1.0 - fy));
    splat(x0 + 1, y0, fx * (1.0 - fy));
    splat(x0, y0 + 1, (1.0 - fx) * fy);
    splat(x0 + 1, y0 + 1, fx * fy);
  }
  double sum = 0.0;
  for (double v : k.taps) sum += v;
  for (double& v : k.taps) v /= sum;
  return k;
}

Image convolve_kernel(const Image& img, const Kernel2d& k) {
  return convolve2d(img, k.taps, k.w, k.h);
}

Image apply_blur(const Image& img, double severity, std::uint64_t seed) {
  SplitMix64 rng(seed);
  const bool isotropic = (rng.next_u64() & 1ULL) == 0ULL;
  Image out(img.width, img.height);
  if (isotropic) {
    const double sigma = 0.5 + 2.5 * severity;
    const std::vector<double> taps = gaussian_taps(sigma);
    out = convolve_separable(img, taps, taps);
  } else {
    const int length = 3 + int(std::lround(8.0 * severity));
    const double angle = rng.next_unit() * kPi;
    out = convolve_kernel(img, motion_kernel(length, angle));
  }
  return clamp01_inplace(out);
}

Image apply_noise(const Image& img, double severity, std::uint64_t seed) {
  SplitMix64 rng(seed);
  // Column stripes: one offset per column, shared down the column.
  std::vector<double> stripe(std::size_t(img.width));
  for (double& v : stripe) v = 0.05 * severity * rng.next_gaussian();

  Image out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      out.at(x, y) = img.at(x, y) + stripe[std::size_t(x)] +
                     0.1 * severity * rng.next_gaussian();
    }
  }

  // Low-frequency bias: white noise heavily smoothed, then standardized so
  // its amplitude does not depend on the smoothing width.
  Image field(img.width, img.height);
  for (double& v : field.data) v = rng.next_gaussian();
  const std::vector<double> taps = gaussian_taps(double(std::min(img.width, img.height)) / 8.0);
  field = convolve_separable(field, taps, taps);
  const double fm = mean(field);
  double var = 0.0;
  for (double v : field.data) var += (v - fm) * (v - fm);
  var /= double(field.data.size());
  const double scale = var > 0.0 ? 0.03 * severity / std::sqrt(var) : 0.0;
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    out.data[i] = clamp01(out.data[i] + scale * (field.data[i] - fm));
  }
  return out;
}

SynthesisResult synthesize(const Image& img, const DegradationRecipe& recipe) {
  recipe.validate();
  std::vector<DegradationStep> order = recipe.steps;
  if (recipe.order_randomized && order.size() > 1) {
    SplitMix64 rng(derive_seed(recipe.seed, kSubstreamOrder));
    // Fisher-Yates, high index down.
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      const std::size_t j = rng.next_index(i + 1);
      std::swap(order[i], order[j]);
    }
  }
  SynthesisResult result{img, {}};
  for (const DegradationStep& s : order) {
    switch (s.kind) {
      case Degradation::Contrast:
        result.image = apply_contrast(result.image, s.severity);
        break;
      case Degradation::Blur:
        result.image = apply_blur(result.image, s.severity,
                                  derive_seed(recipe.seed, kSubstreamBlur));
        break;
      case Degradation::Noise:
        result.image = apply_noise(result.image, s.severity,
                                   derive_seed(recipe.seed, kSubstreamNoise));
        break;
    }
    result.applied_order.push_back(s.kind);
  }
  return result;
}

void save_recipe(const DegradationRecipe& recipe, const std::string& path) {
  recipe.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "seed=" << recipe.seed << "\n";
  out << "order_randomized=" << (recipe.order_randomized ? 1 : 0) << "\n";
  char buf[64];
  for (const DegradationStep& s : recipe.steps) {
    std::snprintf(buf, sizeof buf, "%.17g", s.severity);
    out << "step=" << degradation_code(s.kind) << " " << buf << "\n";
  }
  if (!out) throw std::runtime_error("short write to " + path);
}

DegradationRecipe load_recipe(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  DegradationRecipe recipe;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("malformed recipe line: " + line);
    }
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "seed") {
      recipe.seed = std::stoull(value);
    } else if (key == "order_randomized") {
      recipe.order_randomized = value != "0";
    } else if (key == "step") {
      std::istringstream ss(value);
      char code = 0;
      double severity = 0.0;
      if (!(ss >> code >> severity)) {
        throw std::runtime_error("malformed recipe step: " + line);
      }
      recipe.steps.push_back({degradation_from_code(code), severity});
    } else {
      throw std::runtime_error("unknown recipe key: " + key);
    }
  }
  recipe.validate();
  return recipe;
}

}  // namespace tir
