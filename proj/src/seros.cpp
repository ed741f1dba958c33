#include "tir/seros.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace tir {

namespace {

constexpr double kMergeSlack = 1e-12;

// a * log2(r) with the 0*log0 (and 0*log inf) convention.
double xlog2(double a, double r) {
  if (a == 0.0) return 0.0;
  return a * std::log2(r);
}

double cut_weight(const SimilarityGraph& g, const std::vector<int>& part) {
  double inside = 0.0;
  double total = 0.0;
  for (int x : part) {
    total += g.degree(x);
    for (int y : part) inside += g.weight(x, y);
  }
  return total - inside;
}

double part_volume(const SimilarityGraph& g, const std::vector<int>& part) {
  double v = 0.0;
  for (int x : part) v += g.degree(x);
  return v;
}

// The part's share of H2: cut term plus intra-part vertex entropy.
double part_entropy(const SimilarityGraph& g, const std::vector<int>& part,
                    double v_g) {
  const double v_c = part_volume(g, part);
  if (v_c == 0.0) return 0.0;
  const double g_c = cut_weight(g, part);
  double h = -xlog2(g_c / v_g, v_c / v_g);
  for (int x : part) {
    const double o = g.degree(x);
    h -= xlog2(o / v_g, o / v_c);
  }
  return h;
}

}  // namespace

void SimilarityGraph::set_weight(int i, int j, double value) {
  if (i == j) throw std::invalid_argument("similarity graphs have a zero diagonal");
  if (!(value >= 0.0) || !(value <= 1.0)) {
    throw std::invalid_argument("similarity weights must lie in [0,1]");
  }
  w[std::size_t(i) * n + j] = value;
  w[std::size_t(j) * n + i] = value;
}

double SimilarityGraph::degree(int x) const {
  double d = 0.0;
  for (int j = 0; j < n; ++j) d += weight(x, j);
  return d;
}

double SimilarityGraph::volume() const {
  double v = 0.0;
  for (int x = 0; x < n; ++x) v += degree(x);
  return v;
}

Partition Partition::singletons(int n) {
  Partition p;
  p.assignment.resize(std::size_t(n));
  p.parts.resize(std::size_t(n));
  for (int v = 0; v < n; ++v) {
    p.assignment[std::size_t(v)] = v;
    p.parts[std::size_t(v)] = {v};
  }
  return p;
}

Partition Partition::from_assignment(std::vector<int> assignment) {
  Partition p;
  std::map<int, int> renumber;
  p.assignment.resize(assignment.size());
  for (std::size_t v = 0; v < assignment.size(); ++v) {
    const auto [it, inserted] =
        renumber.try_emplace(assignment[v], int(p.parts.size()));
    if (inserted) p.parts.emplace_back();
    p.assignment[v] = it->second;
    p.parts[std::size_t(it->second)].push_back(int(v));
  }
  return p;
}

void Partition::validate(int n) const {
  if (int(assignment.size()) != n) {
    throw std::invalid_argument("partition does not cover the vertex set");
  }
  std::vector<int> seen(std::size_t(n), 0);
  for (std::size_t id = 0; id < parts.size(); ++id) {
    if (parts[id].empty()) throw std::invalid_argument("partition has an empty part");
    for (int v : parts[id]) {
      if (v < 0 || v >= n) throw std::invalid_argument("partition vertex out of range");
      if (seen[std::size_t(v)]++) {
        throw std::invalid_argument("partition parts overlap");
      }
      if (assignment[std::size_t(v)] != int(id)) {
        throw std::invalid_argument("partition assignment disagrees with parts");
      }
    }
  }
  for (int v = 0; v < n; ++v) {
    if (!seen[std::size_t(v)]) throw std::invalid_argument("partition misses a vertex");
  }
}

CandidateSet make_candidate_set(const std::vector<std::string>& labels,
                                const std::vector<Image>& images,
                                std::size_t max_dims) {
  if (labels.size() != images.size()) {
    throw std::invalid_argument("candidate labels and images must align");
  }
  CandidateSet set;
  set.entries.reserve(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (!images[i].same_shape(images[0])) {
      throw std::invalid_argument("candidate images must share dimensions");
    }
    Candidate c;
    c.label = labels[i];
    c.image = images[i];
    c.features = downsample_features(images[i], max_dims);
    set.entries.push_back(std::move(c));
  }
  return set;
}

CandidateSet dedupe_candidates(const CandidateSet& cands) {
  CandidateSet out;
  for (const Candidate& c : cands.entries) {
    bool folded = false;
    for (Candidate& kept : out.entries) {
      if (bit_equal(kept.image, c.image)) {
        kept.multiplicity += c.multiplicity;
        folded = true;
        break;
      }
    }
    if (!folded) out.entries.push_back(c);
  }
  return out;
}

SimilarityGraph build_graph(const CandidateSet& cands) {
  const int n = int(cands.entries.size());
  if (n < 2) throw std::invalid_argument("similarity graph needs >= 2 candidates");
  const std::size_t dims = cands.entries[0].features.size();
  std::vector<std::vector<double>> centered(static_cast<std::size_t>(n));
  std::vector<double> norms(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    const std::vector<double>& f = cands.entries[std::size_t(i)].features;
    if (f.size() != dims) {
      throw std::invalid_argument("candidate feature lengths differ");
    }
    double mu = 0.0;
    for (double v : f) mu += v;
    mu /= double(dims);
    centered[std::size_t(i)].resize(dims);
    double norm2 = 0.0;
    for (std::size_t k = 0; k < dims; ++k) {
      const double v = f[k] - mu;
      centered[std::size_t(i)][k] = v;
      norm2 += v * v;
    }
    norms[std::size_t(i)] = std::sqrt(norm2);
  }
  SimilarityGraph g(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double w = 0.0;
      if (norms[std::size_t(i)] > 1e-12 && norms[std::size_t(j)] > 1e-12) {
        double dot = 0.0;
        for (std::size_t k = 0; k < dims; ++k) {
          dot += centered[std::size_t(i)][k] * centered[std::size_t(j)][k];
        }
        w = std::clamp(dot / (norms[std::size_t(i)] * norms[std::size_t(j)]), 0.0, 1.0);
      }
      g.set_weight(i, j, w);
    }
  }
  return g;
}

double two_d_se(const SimilarityGraph& g, const Partition& p, bool* zero_volume) {
  p.validate(g.n);
  if (zero_volume) *zero_volume = false;
  const double v_g = g.volume();
  if (v_g <= 0.0) {
    if (zero_volume) *zero_volume = true;
    return 0.0;
  }
  double h = 0.0;
  for (const std::vector<int>& part : p.parts) h += part_entropy(g, part, v_g);
  return h;
}

namespace {

// Bell(10) = 115975 partitions; beyond that enumeration stops paying for
// itself and the greedy takes over.
constexpr int kExactSearchLimit = 10;

// Exhaustive minimum over all partitions, enumerated as restricted growth
// strings. Entropy ties prefer higher total intra-part weight (so exact
// duplicates share a part), then more parts (so zero-similarity vertices
// stay alone); remaining ties keep the earliest enumerated assignment.
Partition exact_minimize(const SimilarityGraph& g, double v_g) {
  const int n = g.n;
  std::vector<double> deg(std::size_t(n), 0.0);
  for (int x = 0; x < n; ++x) deg[std::size_t(x)] = g.degree(x);

  std::vector<int> a(std::size_t(n), 0);
  std::vector<int> best_a = a;
  double best_h = std::numeric_limits<double>::infinity();
  double best_intra = -1.0;
  int best_parts = 0;

  std::vector<double> vol(std::size_t(n), 0.0);
  std::vector<double> intra(std::size_t(n), 0.0);
  while (true) {
    int m = 0;
    for (int x = 0; x < n; ++x) m = std::max(m, a[std::size_t(x)] + 1);
    std::fill(vol.begin(), vol.begin() + m, 0.0);
    std::fill(intra.begin(), intra.begin() + m, 0.0);
    for (int x = 0; x < n; ++x) vol[std::size_t(a[std::size_t(x)])] += deg[std::size_t(x)];
    double intra_total = 0.0;
    for (int x = 0; x < n; ++x) {
      for (int y = x + 1; y < n; ++y) {
        if (a[std::size_t(x)] == a[std::size_t(y)]) {
          intra[std::size_t(a[std::size_t(x)])] += 2.0 * g.weight(x, y);
          intra_total += 2.0 * g.weight(x, y);
        }
      }
    }
    double h = 0.0;
    for (int c = 0; c < m; ++c) {
      if (vol[std::size_t(c)] > 0.0) {
        h -= xlog2((vol[std::size_t(c)] - intra[std::size_t(c)]) / v_g,
                   vol[std::size_t(c)] / v_g);
      }
    }
    for (int x = 0; x < n; ++x) {
      const double v_c = vol[std::size_t(a[std::size_t(x)])];
      if (v_c > 0.0) h -= xlog2(deg[std::size_t(x)] / v_g, deg[std::size_t(x)] / v_c);
    }

    bool take = h < best_h - kMergeSlack;
    if (!take && h <= best_h + kMergeSlack) {
      if (intra_total > best_intra + kMergeSlack) {
        take = true;
      } else if (intra_total >= best_intra - kMergeSlack && m > best_parts) {
        take = true;
      }
    }
    if (take) {
      best_h = h;
      best_intra = intra_total;
      best_parts = m;
      best_a = a;
    }

    // Next restricted growth string: bump the rightmost position that may
    // still grow (a[i] <= max of its prefix), reset the tail to 0.
    int i = n - 1;
    for (; i > 0; --i) {
      int prefix_max = 0;
      for (int k = 0; k < i; ++k) prefix_max = std::max(prefix_max, a[std::size_t(k)]);
      if (a[std::size_t(i)] <= prefix_max) {
        ++a[std::size_t(i)];
        std::fill(a.begin() + i + 1, a.end(), 0);
        break;
      }
    }
    if (i == 0) break;
  }
  return Partition::from_assignment(std::move(best_a));
}

// Greedy agglomerative fallback for graphs too large to enumerate. Parts
// stay sorted by their smallest vertex, so scanning pairs (a<b) visits
// candidate merges in tie-break order. Zero-delta merges are accepted only
// between connected parts; gluing a zero-similarity vertex to a part is a
// no-op for the entropy but would corrupt the part's representative pick.
Partition greedy_minimize(const SimilarityGraph& g, double v_g) {
  std::vector<std::vector<int>> parts(std::size_t(g.n));
  for (int v = 0; v < g.n; ++v) parts[std::size_t(v)] = {v};

  while (parts.size() > 1) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_a = 0, best_b = 0;
    for (std::size_t a = 0; a < parts.size(); ++a) {
      for (std::size_t b = a + 1; b < parts.size(); ++b) {
        std::vector<int> merged = parts[a];
        merged.insert(merged.end(), parts[b].begin(), parts[b].end());
        const double delta = part_entropy(g, merged, v_g) -
                             part_entropy(g, parts[a], v_g) -
                             part_entropy(g, parts[b], v_g);
        if (delta >= -kMergeSlack) {
          double cross = 0.0;
          for (int x : parts[a]) {
            for (int y : parts[b]) cross += g.weight(x, y);
          }
          if (cross <= 0.0) continue;
        }
        if (delta < best - kMergeSlack) {
          best = delta;
          best_a = a;
          best_b = b;
        }
      }
    }
    if (!(best <= kMergeSlack)) break;
    parts[best_a].insert(parts[best_a].end(), parts[best_b].begin(),
                         parts[best_b].end());
    std::sort(parts[best_a].begin(), parts[best_a].end());
    parts.erase(parts.begin() + long(best_b));
  }

  std::vector<int> assignment(std::size_t(g.n), 0);
  for (std::size_t id = 0; id < parts.size(); ++id) {
    for (int v : parts[id]) assignment[std::size_t(v)] = int(id);
  }
  return Partition::from_assignment(std::move(assignment));
}

}  // namespace

Partition minimize_partition(const SimilarityGraph& g) {
  if (g.n <= 0) throw std::invalid_argument("graph has no vertices");
  const double v_g = g.volume();
  if (v_g <= 0.0) return Partition::singletons(g.n);
  if (g.n <= kExactSearchLimit) return exact_minimize(g, v_g);
  return greedy_minimize(g, v_g);
}

double node_contribution(const SimilarityGraph& g, const Partition& p, int x) {
  p.validate(g.n);
  if (x < 0 || x >= g.n) throw std::invalid_argument("vertex not in partition");
  const std::vector<int>& part = p.parts[std::size_t(p.assignment[std::size_t(x)])];
  if (part.size() <= 1) return 0.0;
  const double v_g = g.volume();
  if (v_g <= 0.0) return 0.0;

  std::vector<int> rest;
  rest.reserve(part.size() - 1);
  for (int v : part) {
    if (v != x) rest.push_back(v);
  }
  const double g_c = cut_weight(g, part);
  const double v_c = part_volume(g, part);
  const double g_r = cut_weight(g, rest);
  const double v_r = part_volume(g, rest);
  const double o_x = g.degree(x);
  if (v_c == 0.0) return 0.0;

  double delta = -xlog2(g_r / v_g, v_r / v_g) + xlog2(g_c / v_g, v_c / v_g) -
                 xlog2(o_x / v_g, v_c / v_g);
  if (v_r > 0.0) delta -= xlog2(v_r / v_g, v_c / v_r);
  return delta;
}

Aggregation select_and_aggregate(const CandidateSet& cands,
                                 const SimilarityGraph& g, const Partition& p) {
  p.validate(g.n);
  if (int(cands.entries.size()) != g.n) {
    throw std::invalid_argument("candidate count does not match the graph");
  }
  Aggregation agg;
  for (const std::vector<int>& part : p.parts) {
    int pick = part[0];
    double pick_delta = node_contribution(g, p, pick);
    for (std::size_t k = 1; k < part.size(); ++k) {
      const double d = node_contribution(g, p, part[k]);
      if (d > pick_delta) {
        pick = part[k];
        pick_delta = d;
      }
    }
    agg.selected.push_back(pick);
    agg.weights.push_back(pick_delta);
  }

  // Softmax over the selected contributions, shifted for stability.
  const double peak = *std::max_element(agg.weights.begin(), agg.weights.end());
  double norm = 0.0;
  for (double& w : agg.weights) {
    w = std::exp(w - peak);
    norm += w;
  }
  for (double& w : agg.weights) w /= norm;

  const Image& first = cands.entries[0].image;
  agg.aggregate = Image(first.width, first.height);
  for (std::size_t k = 0; k < agg.selected.size(); ++k) {
    const Image& img = cands.entries[std::size_t(agg.selected[k])].image;
    for (std::size_t i = 0; i < img.data.size(); ++i) {
      agg.aggregate.data[i] += agg.weights[k] * img.data[i];
    }
  }
  clamp01_inplace(agg.aggregate);
  return agg;
}

Image seros_pipeline(const CandidateSet& cands, SerosDiagnostics* diag) {
  if (cands.entries.empty()) throw std::invalid_argument("no candidates");
  const CandidateSet unique = dedupe_candidates(cands);
  if (unique.entries.size() == 1) {
    if (diag) {
      diag->candidates = unique;
      diag->graph = SimilarityGraph(1);
      diag->partition = Partition::singletons(1);
      diag->contributions = {0.0};
      diag->selected = {0};
      diag->weights = {1.0};
      diag->zero_volume_graph = false;
    }
    return unique.entries[0].image;
  }

  const SimilarityGraph g = build_graph(unique);
  const Partition p = minimize_partition(g);
  const Aggregation agg = select_and_aggregate(unique, g, p);
  if (diag) {
    diag->candidates = unique;
    diag->graph = g;
    diag->partition = p;
    diag->contributions.clear();
    for (int v = 0; v < g.n; ++v) {
      diag->contributions.push_back(node_contribution(g, p, v));
    }
    diag->selected = agg.selected;
    diag->weights = agg.weights;
    bool zero = false;
    two_d_se(g, p, &zero);
    diag->zero_volume_graph = zero;
  }
  return agg.aggregate;
}

void save_graph(const SimilarityGraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "n " << g.n << " base 2\n";
  char buf[64];
  for (int i = 0; i < g.n; ++i) {
    for (int j = i + 1; j < g.n; ++j) {
      const double w = g.weight(i, j);
      if (w == 0.0) continue;
      std::snprintf(buf, sizeof buf, "%.17g", w);
      out << i << " " << j << " " << buf << "\n";
    }
  }
  if (!out) throw std::runtime_error("short write to " + path);
}

SimilarityGraph load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty graph file " + path);
  std::istringstream header(line);
  std::string tag, base_word;
  int n = 0, base = 0;
  if (!(header >> tag >> n >> base_word >> base) || tag != "n" ||
      base_word != "base" || base != 2 || n <= 0) {
    throw std::runtime_error("malformed graph header in " + path);
  }
  SimilarityGraph g(n);
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    int i = 0, j = 0;
    double w = 0.0;
    if (!(ss >> i >> j >> w) || i < 0 || j < 0 || i >= n || j >= n) {
      throw std::runtime_error("malformed graph edge in " + path);
    }
    g.set_weight(i, j, w);
  }
  return g;
}

void save_partition(const Partition& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (std::size_t v = 0; v < p.assignment.size(); ++v) {
    out << v << " " << p.assignment[v] << "\n";
  }
  if (!out) throw std::runtime_error("short write to " + path);
}

Partition load_partition(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::map<int, int> raw;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    int v = 0, part = 0;
    if (!(ss >> v >> part) || v < 0) {
      throw std::runtime_error("malformed partition line in " + path);
    }
    raw[v] = part;
  }
  if (raw.empty()) throw std::runtime_error("empty partition file " + path);
  if (raw.rbegin()->first != int(raw.size()) - 1) {
    throw std::runtime_error("partition file misses a vertex in " + path);
  }
  std::vector<int> assignment(raw.size());
  for (const auto& [v, part] : raw) assignment[std::size_t(v)] = part;
  return Partition::from_assignment(std::move(assignment));
}

}  // namespace tir
