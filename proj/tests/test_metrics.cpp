#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "oracles.hpp"
#include "tir/image.hpp"
#include "tir/metrics.hpp"
#include "tir/rng.hpp"

namespace {

tir::Image ramp32() {
  tir::Image img(32, 32);
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) img.at(x, y) = (x + y) / 62.0;
  }
  return img;
}

}  // namespace

TEST_CASE("psnr caps at 99 for identical and near-identical images") {
  const tir::Image img = oracle::random_scene(16, 16, 21);
  CHECK(tir::psnr(img, img) == 99.0);

  tir::Image close = img;
  close.at(0, 0) = tir::clamp01(close.at(0, 0) + 1e-8);
  CHECK(tir::psnr(img, close) == 99.0);
}

TEST_CASE("psnr of constant images differing by 0.1 is exactly 20 dB") {
  const tir::Image a(12, 12, 0.0);
  const tir::Image b(12, 12, 0.1);
  CHECK(std::abs(tir::psnr(a, b) - 20.0) < 1e-9);
}

TEST_CASE("halving the mean squared error adds 10*log10(2) dB") {
  tir::Image a(16, 16, 0.5), b1(16, 16, 0.5), b2(16, 16, 0.5);
  const double kDelta = 0.08;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double s = (i % 2 == 0) ? 1.0 : -1.0;
    b1.data[i] += s * kDelta;
    b2.data[i] += s * kDelta / std::sqrt(2.0);
  }
  const double gain = tir::psnr(a, b2) - tir::psnr(a, b1);
  CHECK(std::abs(gain - 10.0 * std::log10(2.0)) < 1e-9);
}

TEST_CASE("psnr decreases strictly as pixel error grows") {
  const tir::Image a(16, 16, 0.4);
  double prev = 1e9;
  for (double eps = 0.02; eps <= 0.42; eps += 0.05) {
    const tir::Image b(16, 16, 0.4 + eps);
    const double p = tir::psnr(a, b);
    CHECK(p < prev);
    prev = p;
  }
}

TEST_CASE("ssim of an image with itself is 1") {
  const tir::Image img = oracle::random_scene(28, 19, 77, 0.25);
  CHECK(std::abs(tir::ssim(img, img) - 1.0) < 1e-12);
}

TEST_CASE("ssim is symmetric in its arguments") {
  tir::SplitMix64 rng(404);
  for (int i = 0; i < 5; ++i) {
    const tir::Image a = oracle::random_scene(20, 24, rng.next_u64(), 0.15);
    const tir::Image b = oracle::random_scene(20, 24, rng.next_u64(), 0.15);
    CHECK(std::abs(tir::ssim(a, b) - tir::ssim(b, a)) < 1e-12);
  }
}

TEST_CASE("ssim punishes structural inversion on a ramp") {
  const tir::Image a = ramp32();
  tir::Image b = a;
  for (double& v : b.data) v = 1.0 - v;
  CHECK(tir::ssim(a, b) < 0.5);
}

TEST_CASE("ssim matches a direct windowed reference on varied pairs") {
  tir::SplitMix64 rng(9090);
  for (int i = 0; i < 20; ++i) {
    const std::uint64_t s = rng.next_u64();
    const tir::Image a = oracle::random_scene(21, 16, s, 0.1);
    tir::Image b = (i % 2 == 0)
                       ? oracle::random_scene(21, 16, rng.next_u64(), 0.1)
                       : a;
    if (i % 2 != 0) {
      for (double& v : b.data) v = tir::clamp01(v + 0.05 * rng.next_gaussian());
    }
    CHECK(std::abs(tir::ssim(a, b) - oracle::naive_ssim(a, b)) < 1e-9);
  }
}

TEST_CASE("ssim rejects images smaller than its window or mismatched") {
  const tir::Image tiny(10, 10, 0.5);
  CHECK_THROWS_AS(tir::ssim(tiny, tiny), std::invalid_argument);
  const tir::Image a(16, 16, 0.5);
  const tir::Image b(16, 17, 0.5);
  CHECK_THROWS_AS(tir::ssim(a, b), std::invalid_argument);
  CHECK_THROWS_AS(tir::psnr(a, b), std::invalid_argument);
}

TEST_CASE("rmse and mean absolute error have their textbook values") {
  const tir::Image a(12, 12, 0.3);
  const tir::Image b(12, 12, 0.45);
  CHECK(std::abs(tir::rmse(a, b) - 0.15) < 1e-12);
  CHECK(std::abs(tir::mean_abs_error(a, b) - 0.15) < 1e-12);
  CHECK(tir::rmse(a, a) == 0.0);
  CHECK(tir::mean_abs_error(a, a) == 0.0);
}

TEST_CASE("compute_metrics bundles the individual metrics unchanged") {
  const tir::Image a = oracle::random_scene(24, 24, 8, 0.1);
  const tir::Image b = oracle::random_scene(24, 24, 9, 0.1);
  const tir::MetricReport r = tir::compute_metrics(a, b);
  CHECK(r.psnr == tir::psnr(a, b));
  CHECK(r.ssim == tir::ssim(a, b));
  CHECK(r.rmse == tir::rmse(a, b));
}
