#include "tir/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace tir {

namespace {

void require_same_shape(const Image& a, const Image& b) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument("metric inputs must share dimensions");
  }
}

double mse(const Image& a, const Image& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    acc += d * d;
  }
  return acc / double(a.data.size());
}

}  // namespace

double psnr(const Image& a, const Image& b) {
  require_same_shape(a, b);
  const double m = mse(a, b);
  if (m <= 0.0) return kPsnrCap;
  const double value = 10.0 * std::log10(1.0 / m);
  return value > kPsnrCap ? kPsnrCap : value;
}

double ssim(const Image& a, const Image& b) {
  require_same_shape(a, b);
  if (a.width < 11 || a.height < 11) {
    throw std::invalid_argument("ssim needs images at least 11x11");
  }
  constexpr double kC1 = 0.01 * 0.01;
  constexpr double kC2 = 0.03 * 0.03;
  // 11-tap Gaussian window, sigma 1.5, normalized.
  double taps[11];
  double sum = 0.0;
  for (int t = -5; t <= 5; ++t) {
    taps[t + 5] = std::exp(-0.5 * double(t) * double(t) / (1.5 * 1.5));
    sum += taps[t + 5];
  }
  for (double& v : taps) v /= sum;

  const std::vector<double> k(taps, taps + 11);
  const Image mu_a = convolve_separable(a, k, k);
  const Image mu_b = convolve_separable(b, k, k);

  Image aa(a.width, a.height), bb(a.width, a.height), ab(a.width, a.height);
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    aa.data[i] = a.data[i] * a.data[i];
    bb.data[i] = b.data[i] * b.data[i];
    ab.data[i] = a.data[i] * b.data[i];
  }
  const Image m_aa = convolve_separable(aa, k, k);
  const Image m_bb = convolve_separable(bb, k, k);
  const Image m_ab = convolve_separable(ab, k, k);

  double acc = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double ma = mu_a.data[i];
    const double mb = mu_b.data[i];
    const double va = m_aa.data[i] - ma * ma;
    const double vb = m_bb.data[i] - mb * mb;
    const double cov = m_ab.data[i] - ma * mb;
    const double num = (2.0 * ma * mb + kC1) * (2.0 * cov + kC2);
    const double den = (ma * ma + mb * mb + kC1) * (va + vb + kC2);
    acc += num / den;
  }
  return acc / double(a.data.size());
}

double rmse(const Image& a, const Image& b) {
  require_same_shape(a, b);
  return std::sqrt(mse(a, b));
}

double mean_abs_error(const Image& a, const Image& b) {
  require_same_shape(a, b);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    acc += std::abs(a.data[i] - b.data[i]);
  }
  return acc / double(a.data.size());
}

MetricReport compute_metrics(const Image& restored, const Image& reference) {
  MetricReport r;
  r.psnr = psnr(restored, reference);
  r.ssim = ssim(restored, reference);
  r.rmse = rmse(restored, reference);
  return r;
}

}  // namespace tir
