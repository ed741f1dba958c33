#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "tir/degrade.hpp"
#include "tir/evidential.hpp"
#include "tir/image.hpp"
#include "tir/metrics.hpp"
#include "tir/restore_ops.hpp"
#include "tir/seros.hpp"

namespace tir {

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Restoration order strategy.
struct Strategy {
  enum class Kind { Seros, Fixed, Rps, Pea };
  Kind kind = Kind::Seros;
  std::vector<Degradation> fixed_order;  // full permutation for Kind::Fixed

  std::string name() const;
};

// Accepts "seros", "rps", "pea" and "fixed:<order>" where <order> is a
// permutation of the codes c/b/n. Throws config_error otherwise.
Strategy parse_strategy(const std::string& text);

// All nine strategies benchmarked by default: seros, rps, pea and the six
// fixed orders.
std::vector<Strategy> default_strategies();

struct RunConfig {
  std::string corpus_dir;
  std::string output_dir;
  std::string heads_path;
  std::string report_path;

  double zeta = 0.45;
  std::vector<std::string> strategies;  // bench; empty -> rejected
  std::string strategy = "seros";       // single-image restore
  std::uint64_t seed = 0;
  int corpus_size = 50;
  int image_width = 128;
  int image_height = 128;
  double severity_min = 0.3;
  double severity_max = 1.0;
  // single/double/triple class fractions; renormalized, counts rounded.
  std::array<double, 3> class_mix = {0.2, 0.3, 0.5};

  void validate() const;  // throws config_error
};

enum class DegradationClass { Single, Double, Triple };
const char* class_name(DegradationClass c);

struct ManifestEntry {
  int index = 0;
  DegradationClass cls = DegradationClass::Single;
  std::string clean_path;     // relative to the corpus dir
  std::string degraded_path;
  std::string recipe_path;
};

struct CorpusManifest {
  std::string root;
  std::vector<ManifestEntry> entries;
};

// Procedural clean scenes. All span close to the full unit range so the
// percentile-stretch operator has a meaningful target.
Image generate_ramp(int w, int h, std::uint64_t seed);
Image generate_checkerboard(int w, int h, std::uint64_t seed);
Image generate_blob_scene(int w, int h, std::uint64_t seed);
Image generate_scene(int w, int h, std::uint64_t seed, int variant);

// Writes clean/degraded pairs, recipe sidecars and manifest.txt under
// cfg.output_dir. Class counts follow cfg.class_mix; severities draw from
// U(severity_min, severity_max). Deterministic given cfg.seed.
CorpusManifest make_corpus(const RunConfig& cfg);

CorpusManifest load_manifest(const std::string& corpus_dir);

// Stats/labels/intensity targets for every manifest entry.
std::vector<TrainSample> corpus_samples(const CorpusManifest& manifest);

struct RestoreDiagnostics {
  DegradationStats stats;
  TypeLogits logits;
  GateDecision gates;
  std::array<BetaEvidence, 3> evidence;
  std::array<double, 3> strengths = {1.0, 1.0, 1.0};
  std::vector<std::string> path_labels;  // enumerated candidate paths
  SerosDiagnostics seros;
  std::string strategy;
  int rps_pick = -1;
};

// Degradation-aware restoration of one image: stats -> logits -> gates ->
// evidence -> strengths -> candidate paths -> strategy aggregation.
// rps_seed feeds the random-path pick for Strategy::Kind::Rps.
Image restore_one(const Image& img, const TrainedHeads& heads,
                  const Strategy& strategy, double zeta,
                  std::uint64_t rps_seed = 0,
                  RestoreDiagnostics* diag = nullptr);

struct BenchRow {
  DegradationClass cls = DegradationClass::Single;
  std::string strategy;
  int count = 0;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  double mean_mae = 0.0;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  std::string csv_path;
  std::string table_path;
  std::string diagnostics_path;
};

// Runs every configured strategy over the corpus and writes the CSV table,
// an aligned plain-text table and per-image JSON-lines diagnostics under
// cfg.report_path. Byte-deterministic given config + seed.
BenchReport bench(const RunConfig& cfg);

}  // namespace tir
