#include "tir/evidential.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "tir/metrics.hpp"
#include "tir/rng.hpp"
#include "tir/specialfn.hpp"

namespace tir {

namespace {

constexpr double kEvidenceFloor = 1e-6;
constexpr double kLabelClamp = 1e-4;

double median_of(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double hi = v[mid];
  if (v.size() % 2 == 0) {
    std::nth_element(v.begin(), v.begin() + mid - 1, v.begin() + mid);
    return 0.5 * (v[mid - 1] + hi);
  }
  return hi;
}

}  // namespace

std::vector<double> LinearHead::forward(const std::array<double, 3>& x) const {
  if (int(weights.size()) != out_dim * (in_dim + 1)) {
    throw std::invalid_argument("head weight count does not match its shape");
  }
  std::vector<double> out(std::size_t(out_dim), 0.0);
  for (int o = 0; o < out_dim; ++o) {
    const double* row = weights.data() + std::size_t(o) * (in_dim + 1);
    double acc = row[in_dim];
    for (int j = 0; j < in_dim; ++j) acc += row[j] * x[std::size_t(j)];
    out[std::size_t(o)] = acc;
  }
  return out;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

DegradationStats compute_stats(const Image& img) {
  DegradationStats s;

  // Robust noise level: high-pass residual against a 3x3 box mean, then
  // 1.4826 * MAD (the Gaussian-consistent scale).
  const Image smooth = box3(img);
  std::vector<double> residual(img.data.size());
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    residual[i] = img.data[i] - smooth.data[i];
  }
  const double med = median_of(residual);
  std::vector<double> dev(residual.size());
  for (std::size_t i = 0; i < residual.size(); ++i) {
    dev[i] = std::abs(residual[i] - med);
  }
  s.noise_score = 1.4826 * median_of(dev);

  // Sharpness proxy: Laplacian energy normalized by mean intensity, negated
  // so larger means blurrier.
  const Image lap = laplacian3(img);
  const double lm = mean(lap);
  double lvar = 0.0;
  for (double v : lap.data) lvar += (v - lm) * (v - lm);
  lvar /= double(lap.data.size());
  s.blur_score = -lvar / std::max(mean(img), 1e-3);

  // Dynamic-range loss: robust percentile span.
  s.contrast_score = 1.0 - (percentile(img.data, 0.99) - percentile(img.data, 0.01));
  return s;
}

GateDecision gate(const TypeLogits& logits, double zeta) {
  if (!(zeta > 0.0) || !(zeta < 1.0)) {
    throw std::invalid_argument("gate threshold must lie in (0,1)");
  }
  GateDecision d;
  d.zeta = zeta;
  d.d_n = sigmoid(logits.pi_n) >= zeta;
  d.d_b = sigmoid(logits.pi_b) >= zeta;
  d.d_c = sigmoid(logits.pi_c) >= zeta;
  return d;
}

double bce_with_logits(const TypeLogits& logits, const std::array<int, 3>& labels) {
  double acc = 0.0;
  for (int l = 0; l < 3; ++l) {
    const double pi = logits.by_index(l);
    acc += softplus(pi) - double(labels[std::size_t(l)]) * pi;
  }
  return acc / 3.0;
}

double intensity_label(const Image& degraded, const Image& clean) {
  return clamp01(1.0 - ssim(degraded, clean));
}

EdlResult edl_loss(const BetaEvidence& ev, double y, double tau) {
  if (!(ev.alpha > 0.0) || !(ev.beta > 0.0)) {
    throw std::domain_error("edl_loss requires positive evidence");
  }
  y = std::clamp(y, kLabelClamp, 1.0 - kLabelClamp);
  const double a = ev.alpha;
  const double b = ev.beta;
  const double ln_b = log_beta(a, b);
  const double psi_a = digamma(a);
  const double psi_b = digamma(b);
  const double psi_ab = digamma(a + b);

  const double nll = -((a - 1.0) * std::log(y) + (b - 1.0) * std::log1p(-y) - ln_b);
  const double kl =
      -ln_b + (a - 1.0) * psi_a + (b - 1.0) * psi_b + (2.0 - a - b) * psi_ab;

  EdlResult r;
  r.loss = nll + tau * kl;
  const double tri_ab = trigamma(a + b);
  r.grad_alpha = -std::log(y) + psi_a - psi_ab +
                 tau * ((a - 1.0) * trigamma(a) + (2.0 - a - b) * tri_ab);
  r.grad_beta = -std::log1p(-y) + psi_b - psi_ab +
                tau * ((b - 1.0) * trigamma(b) + (2.0 - a - b) * tri_ab);
  return r;
}

BetaEvidence evidence_from_head(const LinearHead& head, const DegradationStats& stats) {
  const std::vector<double> z = head.forward(stats.as_features());
  if (z.size() != 2) throw std::invalid_argument("evidence head must emit 2 values");
  return {softplus(z[0]) + kEvidenceFloor, softplus(z[1]) + kEvidenceFloor};
}

TypeLogits logits_from_head(const LinearHead& head, const DegradationStats& stats) {
  const std::vector<double> z = head.forward(stats.as_features());
  if (z.size() != 3) throw std::invalid_argument("type head must emit 3 logits");
  return {z[0], z[1], z[2]};
}

double modulation(const BetaEvidence& ev) {
  const double p = ev.intensity();
  const double s = ev.confidence();
  const double m = sigmoid(std::log(p / (1.0 - p)) + 0.1 * std::log(s));
  return std::clamp(m, 0.1, 1.0);
}

namespace {

struct Params {
  std::vector<double> type;             // 3 x 4
  std::array<std::vector<double>, 3> evid;  // each 2 x 4
};

struct Standardizer {
  std::array<double, 3> mu{};
  std::array<double, 3> sd{};
};

std::array<double, 3> standardized(const Standardizer& st,
                                   const DegradationStats& s) {
  const std::array<double, 3> raw = s.as_features();
  std::array<double, 3> x;
  for (int j = 0; j < 3; ++j) x[std::size_t(j)] = (raw[std::size_t(j)] - st.mu[std::size_t(j)]) / st.sd[std::size_t(j)];
  return x;
}

double head_out(const std::vector<double>& w, int row, const std::array<double, 3>& x) {
  const double* r = w.data() + std::size_t(row) * 4;
  return r[0] * x[0] + r[1] * x[1] + r[2] * x[2] + r[3];
}

// Objective: mean BCE over the corpus plus, per type, the mean EDL loss over
// the samples where that type is present.
double objective(const Params& p, const std::vector<std::array<double, 3>>& xs,
                 const std::vector<TrainSample>& corpus,
                 const std::array<std::vector<std::size_t>, 3>& masks, double tau) {
  double total = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    TypeLogits logits{head_out(p.type, 0, xs[i]), head_out(p.type, 1, xs[i]),
                      head_out(p.type, 2, xs[i])};
    total += bce_with_logits(logits, corpus[i].labels);
  }
  total /= double(xs.size());
  for (int l = 0; l < 3; ++l) {
    const auto& mask = masks[std::size_t(l)];
    if (mask.empty()) continue;
    double acc = 0.0;
    for (std::size_t i : mask) {
      const double z0 = head_out(p.evid[std::size_t(l)], 0, xs[i]);
      const double z1 = head_out(p.evid[std::size_t(l)], 1, xs[i]);
      BetaEvidence ev{softplus(z0) + kEvidenceFloor, softplus(z1) + kEvidenceFloor};
      acc += edl_loss(ev, corpus[i].y, tau).loss;
    }
    total += acc / double(mask.size());
  }
  return total;
}

Params gradient(const Params& p, const std::vector<std::array<double, 3>>& xs,
                const std::vector<TrainSample>& corpus,
                const std::array<std::vector<std::size_t>, 3>& masks, double tau) {
  Params g;
  g.type.assign(12, 0.0);
  for (auto& e : g.evid) e.assign(8, 0.0);

  const double inv_n = 1.0 / double(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (int l = 0; l < 3; ++l) {
      const double pi = head_out(p.type, l, xs[i]);
      const double coeff =
          (sigmoid(pi) - double(corpus[i].labels[std::size_t(l)])) / 3.0 * inv_n;
      double* row = g.type.data() + std::size_t(l) * 4;
      row[0] += coeff * xs[i][0];
      row[1] += coeff * xs[i][1];
      row[2] += coeff * xs[i][2];
      row[3] += coeff;
    }
  }
  for (int l = 0; l < 3; ++l) {
    const auto& mask = masks[std::size_t(l)];
    if (mask.empty()) continue;
    const double inv_m = 1.0 / double(mask.size());
    for (std::size_t i : mask) {
      const double z0 = head_out(p.evid[std::size_t(l)], 0, xs[i]);
      const double z1 = head_out(p.evid[std::size_t(l)], 1, xs[i]);
      BetaEvidence ev{softplus(z0) + kEvidenceFloor, softplus(z1) + kEvidenceFloor};
      const EdlResult r = edl_loss(ev, corpus[i].y, tau);
      const double gz0 = r.grad_alpha * sigmoid(z0) * inv_m;
      const double gz1 = r.grad_beta * sigmoid(z1) * inv_m;
      double* w = g.evid[std::size_t(l)].data();
      w[0] += gz0 * xs[i][0];
      w[1] += gz0 * xs[i][1];
      w[2] += gz0 * xs[i][2];
      w[3] += gz0;
      w[4] += gz1 * xs[i][0];
      w[5] += gz1 * xs[i][1];
      w[6] += gz1 * xs[i][2];
      w[7] += gz1;
    }
  }
  return g;
}

Params stepped(const Params& p, const Params& g, double lr) {
  Params q = p;
  for (std::size_t k = 0; k < q.type.size(); ++k) q.type[k] -= lr * g.type[k];
  for (int l = 0; l < 3; ++l) {
    for (std::size_t k = 0; k < q.evid[std::size_t(l)].size(); ++k) {
      q.evid[std::size_t(l)][k] -= lr * g.evid[std::size_t(l)][k];
    }
  }
  return q;
}

// Undoes feature standardization so the stored head consumes raw stats.
LinearHead folded(const std::vector<double>& w, int out_dim, const Standardizer& st) {
  LinearHead h;
  h.out_dim = out_dim;
  h.weights.assign(std::size_t(out_dim) * 4, 0.0);
  for (int o = 0; o < out_dim; ++o) {
    const double* src = w.data() + std::size_t(o) * 4;
    double* dst = h.weights.data() + std::size_t(o) * 4;
    double bias = src[3];
    for (int j = 0; j < 3; ++j) {
      dst[j] = src[j] / st.sd[std::size_t(j)];
      bias -= src[j] * st.mu[std::size_t(j)] / st.sd[std::size_t(j)];
    }
    dst[3] = bias;
  }
  return h;
}

}  // namespace

TrainedHeads train_heads(const std::vector<TrainSample>& corpus,
                         const TrainOptions& options) {
  if (corpus.size() < 50) {
    throw std::invalid_argument("training corpus needs at least 50 samples");
  }
  for (const TrainSample& s : corpus) {
    const auto f = s.stats.as_features();
    if (!std::isfinite(f[0]) || !std::isfinite(f[1]) || !std::isfinite(f[2]) ||
        !std::isfinite(s.y)) {
      throw std::invalid_argument("training corpus contains non-finite values");
    }
  }

  Standardizer st;
  for (int j = 0; j < 3; ++j) {
    double mu = 0.0;
    for (const TrainSample& s : corpus) mu += s.stats.as_features()[std::size_t(j)];
    mu /= double(corpus.size());
    double var = 0.0;
    for (const TrainSample& s : corpus) {
      const double d = s.stats.as_features()[std::size_t(j)] - mu;
      var += d * d;
    }
    var /= double(corpus.size());
    st.mu[std::size_t(j)] = mu;
    st.sd[std::size_t(j)] = var > 1e-24 ? std::sqrt(var) : 1.0;
  }

  std::vector<std::array<double, 3>> xs(corpus.size());
  std::array<std::vector<std::size_t>, 3> masks;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    xs[i] = standardized(st, corpus[i].stats);
    for (int l = 0; l < 3; ++l) {
      if (corpus[i].labels[std::size_t(l)]) masks[std::size_t(l)].push_back(i);
    }
  }

  SplitMix64 rng(options.seed);
  Params p;
  p.type.resize(12);
  for (double& w : p.type) w = 0.01 * rng.next_gaussian();
  for (auto& e : p.evid) {
    e.resize(8);
    for (double& w : e) w = 0.01 * rng.next_gaussian();
  }

  TrainedHeads out;
  out.trace.reserve(std::size_t(options.epochs));
  double carry_lr = options.learning_rate;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    const double tau = options.epochs > 1
                           ? options.tau_max * double(epoch) / double(options.epochs - 1)
                           : options.tau_max;
    const double before = objective(p, xs, corpus, masks, tau);
    const Params g = gradient(p, xs, corpus, masks, tau);

    double lr = std::min(options.learning_rate, 2.0 * carry_lr);
    double after = before;
    bool accepted = false;
    for (int tries = 0; tries < 60; ++tries) {
      const Params q = stepped(p, g, lr);
      const double candidate = objective(q, xs, corpus, masks, tau);
      if (std::isfinite(candidate) && candidate <= before + 1e-12) {
        p = q;
        after = candidate;
        carry_lr = lr;
        accepted = true;
        break;
      }
      lr *= 0.5;
    }
    if (!accepted) after = before;  // gradient too steep everywhere; hold
    out.trace.push_back({tau, before, after});
  }

  out.type_head = folded(p.type, 3, st);
  for (int l = 0; l < 3; ++l) {
    out.evidence_heads[std::size_t(l)] = folded(p.evid[std::size_t(l)], 2, st);
  }
  out.final_loss = out.trace.empty() ? 0.0 : out.trace.back().loss_after;
  return out;
}

std::array<double, 3> per_type_f1(const LinearHead& type_head,
                                  const std::vector<TrainSample>& samples,
                                  double zeta) {
  std::array<double, 3> f1{};
  std::array<int, 3> tp{}, fp{}, fn{};
  for (const TrainSample& s : samples) {
    const GateDecision d = gate(logits_from_head(type_head, s.stats), zeta);
    for (int l = 0; l < 3; ++l) {
      const bool pred = d.by_index(l);
      const bool truth = s.labels[std::size_t(l)] != 0;
      if (pred && truth) ++tp[std::size_t(l)];
      if (pred && !truth) ++fp[std::size_t(l)];
      if (!pred && truth) ++fn[std::size_t(l)];
    }
  }
  for (int l = 0; l < 3; ++l) {
    const int denom = 2 * tp[std::size_t(l)] + fp[std::size_t(l)] + fn[std::size_t(l)];
    f1[std::size_t(l)] = denom == 0 ? 1.0 : 2.0 * double(tp[std::size_t(l)]) / double(denom);
  }
  return f1;
}

namespace {

void write_head(std::ostream& out, const std::string& key, const LinearHead& h) {
  out << key << "=" << h.out_dim;
  char buf[64];
  for (double w : h.weights) {
    std::snprintf(buf, sizeof buf, "%.17g", w);
    out << " " << buf;
  }
  out << "\n";
}

LinearHead parse_head(const std::string& value) {
  std::istringstream ss(value);
  LinearHead h;
  if (!(ss >> h.out_dim) || h.out_dim <= 0) {
    throw std::runtime_error("malformed head line");
  }
  double w = 0.0;
  while (ss >> w) h.weights.push_back(w);
  if (int(h.weights.size()) != h.out_dim * (h.in_dim + 1)) {
    throw std::runtime_error("head weight count does not match its shape");
  }
  return h;
}

}  // namespace

void save_heads(const TrainedHeads& heads, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "format=tir-heads-1\n";
  write_head(out, "type_head", heads.type_head);
  write_head(out, "evidence_head_n", heads.evidence_heads[0]);
  write_head(out, "evidence_head_b", heads.evidence_heads[1]);
  write_head(out, "evidence_head_c", heads.evidence_heads[2]);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", heads.final_loss);
  out << "final_loss=" << buf << "\n";
  if (!out) throw std::runtime_error("short write to " + path);
}

TrainedHeads load_heads(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  TrainedHeads heads;
  bool saw_format = false;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error("malformed heads line: " + line);
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "format") {
      if (value != "tir-heads-1") throw std::runtime_error("unknown heads format " + value);
      saw_format = true;
    } else if (key == "type_head") {
      heads.type_head = parse_head(value);
    } else if (key == "evidence_head_n") {
      heads.evidence_heads[0] = parse_head(value);
    } else if (key == "evidence_head_b") {
      heads.evidence_heads[1] = parse_head(value);
    } else if (key == "evidence_head_c") {
      heads.evidence_heads[2] = parse_head(value);
    } else if (key == "final_loss") {
      heads.final_loss = std::stod(value);
    } else {
      throw std::runtime_error("unknown heads key: " + key);
    }
  }
  if (!saw_format || heads.type_head.out_dim != 3) {
    throw std::runtime_error("incomplete heads file " + path);
  }
  for (const LinearHead& h : heads.evidence_heads) {
    if (h.out_dim != 2) throw std::runtime_error("incomplete heads file " + path);
  }
  return heads;
}

}  // namespace tir
