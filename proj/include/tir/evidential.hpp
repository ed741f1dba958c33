#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "tir/image.hpp"

namespace tir {

// Handcrafted degradation statistics standing in for a learned extractor.
struct DegradationStats {
  double noise_score = 0.0;     // 1.4826 * MAD of the 3x3 high-pass residual
  double blur_score = 0.0;      // negated Laplacian variance / mean intensity
  double contrast_score = 0.0;  // 1 - (p99 - p1) dynamic range

  std::array<double, 3> as_features() const {
    return {noise_score, blur_score, contrast_score};
  }
};

struct TypeLogits {
  double pi_n = 0.0;
  double pi_b = 0.0;
  double pi_c = 0.0;

  double by_index(int i) const { return i == 0 ? pi_n : (i == 1 ? pi_b : pi_c); }
};

struct GateDecision {
  bool d_n = false;
  bool d_b = false;
  bool d_c = false;
  double zeta = 0.45;

  bool by_index(int i) const { return i == 0 ? d_n : (i == 1 ? d_b : d_c); }
  int active_count() const { return int(d_n) + int(d_b) + int(d_c); }
};

// Beta evidence pair. alpha/beta carry the evidence for presence/absence;
// intensity() is the posterior mean, confidence() the total evidence.
struct BetaEvidence {
  double alpha = 1.0;
  double beta = 1.0;

  double intensity() const { return alpha / (alpha + beta); }
  double confidence() const { return alpha + beta; }
};

// Affine map over the three stats features (weights laid out row-major,
// out_dim x (in_dim + 1), bias last).
struct LinearHead {
  int in_dim = 3;
  int out_dim = 0;
  std::vector<double> weights;

  std::vector<double> forward(const std::array<double, 3>& x) const;
};

double sigmoid(double x);
double softplus(double x);  // max(x,0) + log1p(exp(-|x|))

DegradationStats compute_stats(const Image& img);

// d_l = 1[sigmoid(pi_l) >= zeta]; zeta must lie in (0,1).
GateDecision gate(const TypeLogits& logits, double zeta);

// Mean over the three per-type terms softplus(pi_l) - y_l * pi_l.
double bce_with_logits(const TypeLogits& logits, const std::array<int, 3>& labels);

// y = 1 - SSIM(degraded, clean), clamped to [0,1].
double intensity_label(const Image& degraded, const Image& clean);

struct EdlResult {
  double loss = 0.0;
  double grad_alpha = 0.0;
  double grad_beta = 0.0;
};

// Beta NLL plus tau-weighted KL to the uniform prior, with analytic
// gradients in (alpha, beta). y is clamped to [1e-4, 1-1e-4] first.
EdlResult edl_loss(const BetaEvidence& ev, double y, double tau);

// Evidence link: alpha = softplus(z0) + 1e-6, beta = softplus(z1) + 1e-6.
BetaEvidence evidence_from_head(const LinearHead& head, const DegradationStats& stats);

TypeLogits logits_from_head(const LinearHead& head, const DegradationStats& stats);

// Operator strength multiplier in [0.1, 1.0]:
//   m = clamp(sigmoid(logit(p) + 0.1 * ln S), 0.1, 1.0)
double modulation(const BetaEvidence& ev);

struct TrainSample {
  DegradationStats stats;
  std::array<int, 3> labels = {0, 0, 0};  // noise, blur, contrast presence
  double y = 0.0;                         // intensity label
};

struct TrainOptions {
  int epochs = 4000;
  double learning_rate = 0.5;
  std::uint64_t seed = 1;
  double tau_max = 1.0;  // tau anneals linearly 0 -> tau_max over the epochs
};

struct EpochRecord {
  double tau = 0.0;
  double loss_before = 0.0;  // epoch objective before the update, at this tau
  double loss_after = 0.0;   // after the (possibly step-halved) update
};

struct TrainedHeads {
  LinearHead type_head;                      // 3 logits
  std::array<LinearHead, 3> evidence_heads;  // (alpha, beta) per type
  double final_loss = 0.0;
  std::vector<EpochRecord> trace;
};

// Full-batch gradient descent on L_BCE + sum of per-type EDL losses, with a
// step-halving-on-increase rule so each epoch is non-increasing under its
// own tau. Evidence head l trains on the samples where label l is set.
// Deterministic given options.seed. Requires >= 50 samples.
TrainedHeads train_heads(const std::vector<TrainSample>& corpus,
                         const TrainOptions& options = {});

// F1 per type (noise, blur, contrast) of the gated type head at zeta.
std::array<double, 3> per_type_f1(const LinearHead& type_head,
                                  const std::vector<TrainSample>& samples,
                                  double zeta);

// key=value weights file holding all four heads.
void save_heads(const TrainedHeads& heads, const std::string& path);
TrainedHeads load_heads(const std::string& path);

}  // namespace tir
