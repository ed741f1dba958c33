#pragma once

#include "tir/image.hpp"

namespace tir {

inline constexpr double kPsnrCap = 99.0;

struct MetricReport {
  double psnr = 0.0;  // dB, capped at 99.0
  double ssim = 0.0;
  double rmse = 0.0;
};

// 10*log10(1/MSE) on unit dynamic range, capped at 99.0 dB.
double psnr(const Image& a, const Image& b);

// Mean local SSIM: 11x11 Gaussian window (sigma 1.5), C1 = 0.01^2,
// C2 = 0.03^2, unit dynamic range, symmetric boundary handling.
// Requires min(width, height) >= 11.
double ssim(const Image& a, const Image& b);

double rmse(const Image& a, const Image& b);
double mean_abs_error(const Image& a, const Image& b);

MetricReport compute_metrics(const Image& restored, const Image& reference);

}  // namespace tir
