#pragma once

#include <string>
#include <vector>

#include "tir/image.hpp"

namespace tir {

// Complete weighted similarity graph: symmetric, zero diagonal, w >= 0.
struct SimilarityGraph {
  int n = 0;
  std::vector<double> w;  // n*n row-major

  explicit SimilarityGraph(int count = 0) : n(count), w(std::size_t(count) * count, 0.0) {}

  double weight(int i, int j) const { return w[std::size_t(i) * n + j]; }
  void set_weight(int i, int j, double value);

  double degree(int x) const;
  double volume() const;  // sum of all vertex degrees
};

// Flat partition of the vertex set: parts are disjoint, nonempty and cover
// every vertex. assignment[v] indexes into parts.
struct Partition {
  std::vector<int> assignment;
  std::vector<std::vector<int>> parts;

  static Partition singletons(int n);
  static Partition from_assignment(std::vector<int> assignment);

  int part_count() const { return int(parts.size()); }
  void validate(int n) const;  // throws std::invalid_argument
};

struct Candidate {
  std::string label;             // restoration path, e.g. "cbn"
  Image image;                   // candidate restoration
  std::vector<double> features;  // flattened (block-averaged) raster
  int multiplicity = 1;          // duplicates folded into this entry
};

struct CandidateSet {
  std::vector<Candidate> entries;
};

// Builds candidate entries from images; features are block-averaged to at
// most max_dims values.
CandidateSet make_candidate_set(const std::vector<std::string>& labels,
                                const std::vector<Image>& images,
                                std::size_t max_dims = 4096);

// Folds byte-identical candidate images into their first occurrence,
// accumulating multiplicity.
CandidateSet dedupe_candidates(const CandidateSet& cands);

// Clipped cosine similarity on mean-centered feature vectors:
//   w_ij = max(cos(F_i - mean, F_j - mean), 0)
// Zero (fully flat) vectors get similarity 0 to everything.
SimilarityGraph build_graph(const CandidateSet& cands);

// Two-dimensional structural entropy of the partition, log base 2:
//   H2(P) = -sum_C [ (g_C/v_G) log2(v_C/v_G) + sum_{x in C} (o_x/v_G) log2(o_x/v_C) ]
// with 0*log 0 := 0. An all-zero graph yields 0 and sets *zero_volume.
double two_d_se(const SimilarityGraph& g, const Partition& p,
                bool* zero_volume = nullptr);

// 2D-SE minimization. Graphs with n <= 10 are solved exactly by enumerating
// every partition; entropy ties prefer higher total intra-part weight (so
// exact duplicates share a part), then more parts (so zero-similarity
// vertices stay alone). Larger graphs fall back to greedy agglomeration:
// start from singletons and repeatedly apply the pair merge with the
// largest entropy decrease, accepting ties only between connected parts;
// stop once every merge increases H2 by more than 1e-12; merge ties break
// on the smallest (part-id, part-id) pair, where a part's id is its
// smallest vertex. All-zero graphs return the all-singleton partition.
Partition minimize_partition(const SimilarityGraph& g);

// Closed-form per-vertex contribution: the increase in H2 when x is split
// out of its part into a fresh singleton. Zero for vertices already alone.
double node_contribution(const SimilarityGraph& g, const Partition& p, int x);

struct Aggregation {
  std::vector<int> selected;    // one vertex per part (argmax contribution)
  std::vector<double> weights;  // softmax over the selected contributions
  Image aggregate;
};

// Per part, pick the vertex with the largest contribution (ties -> lowest
// index), softmax-weight the winners and blend their candidate images.
Aggregation select_and_aggregate(const CandidateSet& cands,
                                 const SimilarityGraph& g, const Partition& p);

struct SerosDiagnostics {
  CandidateSet candidates;  // after dedup
  SimilarityGraph graph{0};
  Partition partition;
  std::vector<double> contributions;
  std::vector<int> selected;
  std::vector<double> weights;
  bool zero_volume_graph = false;
};

// build_graph -> minimize_partition -> contributions -> select_and_aggregate.
// A single (deduped) candidate is returned unchanged.
Image seros_pipeline(const CandidateSet& cands, SerosDiagnostics* diag = nullptr);

// Plain-text graph file: header "n <count> base 2", then "i j w" lines for
// the upper triangle (nonzero weights), 17 significant digits.
void save_graph(const SimilarityGraph& g, const std::string& path);
SimilarityGraph load_graph(const std::string& path);

// Partition file: one "vertex part" line per vertex.
void save_partition(const Partition& p, const std::string& path);
Partition load_partition(const std::string& path);

}  // namespace tir
