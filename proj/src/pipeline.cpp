#include "tir/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "tir/image_io.hpp"
#include "tir/rng.hpp"

namespace fs = std::filesystem;

namespace tir {

namespace {

// Kind ranks follow the candidate enumeration order c < b < n.
int path_rank(Degradation kind) {
  switch (kind) {
    case Degradation::Contrast: return 0;
    case Degradation::Blur: return 1;
    default: return 2;
  }
}

std::string order_label(const std::vector<Degradation>& order) {
  std::string label;
  for (Degradation k : order) label.push_back(degradation_code(k));
  return label;
}

std::string entry_stem(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d", index);
  return buf;
}

// Sparse bright/dark specks shared by all scene generators. They give every
// scene the same fine-detail budget: enough Laplacian energy that blur is
// detectable even after heavy contrast compression, yet sparse enough that
// the median-based noise statistic ignores them.
void add_specks(Image& img, SplitMix64& rng) {
  // Density is kept below 2% so bright specks stay under the 1% percentile
  // mass (extreme percentiles then sit on blur-stable wide structures) and
  // blurred speck residue covers well under half the image, leaving the
  // median-based noise statistic on clean pixels.
  const int specks = int(img.pixel_count()) / 56;
  for (int s = 0; s < specks; ++s) {
    const int x = int(rng.next_index(std::size_t(img.width)));
    const int y = int(rng.next_index(std::size_t(img.height)));
    const double amp =
        rng.next_uniform(0.6, 0.9) * (rng.next_unit() < 0.5 ? -1.0 : 1.0);
    img.at(x, y) = clamp01(img.at(x, y) + amp);
  }
}

}  // namespace

std::string Strategy::name() const {
  switch (kind) {
    case Kind::Seros: return "seros";
    case Kind::Rps: return "rps";
    case Kind::Pea: return "pea";
    case Kind::Fixed: return "fixed:" + order_label(fixed_order);
  }
  throw config_error("unknown strategy kind");
}

Strategy parse_strategy(const std::string& text) {
  Strategy s;
  if (text == "seros") {
    s.kind = Strategy::Kind::Seros;
    return s;
  }
  if (text == "rps") {
    s.kind = Strategy::Kind::Rps;
    return s;
  }
  if (text == "pea") {
    s.kind = Strategy::Kind::Pea;
    return s;
  }
  if (text.rfind("fixed:", 0) == 0) {
    const std::string order = text.substr(6);
    if (order.size() != 3) {
      throw config_error("fixed order must list all three kinds: " + text);
    }
    s.kind = Strategy::Kind::Fixed;
    bool seen[3] = {false, false, false};
    for (char code : order) {
      Degradation kind = Degradation::Noise;
      try {
        kind = degradation_from_code(code);
      } catch (const std::invalid_argument& e) {
        throw config_error(e.what());
      }
      if (seen[kind_index(kind)]) {
        throw config_error("fixed order repeats a kind: " + text);
      }
      seen[kind_index(kind)] = true;
      s.fixed_order.push_back(kind);
    }
    return s;
  }
  throw config_error("unknown strategy: " + text);
}

std::vector<Strategy> default_strategies() {
  std::vector<Strategy> out;
  for (const char* name : {"seros", "rps", "pea", "fixed:cbn", "fixed:cnb",
                           "fixed:bcn", "fixed:bnc", "fixed:ncb", "fixed:nbc"}) {
    out.push_back(parse_strategy(name));
  }
  return out;
}

void RunConfig::validate() const {
  if (!(zeta > 0.0) || !(zeta < 1.0)) throw config_error("zeta must lie in (0,1)");
  if (corpus_size <= 0) throw config_error("corpus size must be positive");
  if (image_width < 11 || image_height < 11) {
    throw config_error("corpus images must be at least 11x11 for SSIM labels");
  }
  if (!(severity_min > 0.0) || severity_min > severity_max || severity_max > 1.0) {
    throw config_error("severity range must satisfy 0 < min <= max <= 1");
  }
  double mix_total = 0.0;
  for (double f : class_mix) {
    if (f < 0.0) throw config_error("class mix fractions must be >= 0");
    mix_total += f;
  }
  if (mix_total <= 0.0) throw config_error("class mix must not be all zero");
  parse_strategy(strategy);
  for (const std::string& s : strategies) parse_strategy(s);
}

const char* class_name(DegradationClass c) {
  switch (c) {
    case DegradationClass::Single: return "single";
    case DegradationClass::Double: return "double";
    case DegradationClass::Triple: return "triple";
  }
  throw config_error("unknown degradation class");
}

Image generate_ramp(int w, int h, std::uint64_t seed) {
  // Linear shading only: a 3x3 box average of a plane is the plane, so ramps
  // contribute nothing to the robust noise statistic even after blur.
  SplitMix64 rng(seed);
  const double angle = rng.next_uniform(0.0, 2.0 * 3.14159265358979323846);
  const double dx = std::cos(angle);
  const double dy = std::sin(angle);
  Image img(w, h);
  double lo = 1e9, hi = -1e9;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double u = double(x) / double(w - 1);
      const double v = double(y) / double(h - 1);
      const double t = u * dx + v * dy;
      img.at(x, y) = t;
      lo = std::min(lo, t);
      hi = std::max(hi, t);
    }
  }
  for (double& p : img.data) p = 0.03 + 0.94 * (p - lo) / (hi - lo);
  add_specks(img, rng);
  return img;
}

Image generate_checkerboard(int w, int h, std::uint64_t seed) {
  SplitMix64 rng(seed);
  // Cells wide enough that a blurred board is smooth at the median pixel,
  // keeping the robust noise statistic quiet on blur-only images.
  const int cell = 52 + int(rng.next_index(17));  // 52..68 px
  const double dark = rng.next_uniform(0.04, 0.12);
  const double bright = rng.next_uniform(0.88, 0.96);
  const double tilt = rng.next_uniform(-0.08, 0.08);
  Image img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const bool on = ((x / cell) + (y / cell)) % 2 == 0;
      const double shade = tilt * (double(x) / double(w - 1) - 0.5);
      img.at(x, y) = clamp01((on ? bright : dark) + shade);
    }
  }
  add_specks(img, rng);
  return img;
}

Image generate_blob_scene(int w, int h, std::uint64_t seed) {
  SplitMix64 rng(seed);
  const int blobs = 4 + int(rng.next_index(5));  // 4..8
  const std::size_t nb = std::size_t(blobs);
  std::vector<double> cx(nb), cy(nb), sig(nb), amp(nb);
  for (int b = 0; b < blobs; ++b) {
    cx[std::size_t(b)] = rng.next_uniform(0.1, 0.9) * double(w - 1);
    cy[std::size_t(b)] = rng.next_uniform(0.1, 0.9) * double(h - 1);
    sig[std::size_t(b)] = rng.next_uniform(12.0, 20.0);
    amp[std::size_t(b)] = rng.next_uniform(0.35, 0.8) * (b % 2 == 0 ? 1.0 : -1.0);
  }
  Image img(w, h);
  double lo = 1e9, hi = -1e9;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double v = 0.0;
      for (int b = 0; b < blobs; ++b) {
        const double ddx = double(x) - cx[std::size_t(b)];
        const double ddy = double(y) - cy[std::size_t(b)];
        const double s2 = sig[std::size_t(b)] * sig[std::size_t(b)];
        v += amp[std::size_t(b)] * std::exp(-0.5 * (ddx * ddx + ddy * ddy) / s2);
      }
      img.at(x, y) = v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  for (double& p : img.data) p = 0.03 + 0.94 * (p - lo) / (hi - lo);
  add_specks(img, rng);
  return img;
}

Image generate_scene(int w, int h, std::uint64_t seed, int variant) {
  switch (((variant % 3) + 3) % 3) {
    case 0: return generate_ramp(w, h, seed);
    case 1: return generate_checkerboard(w, h, seed);
    default: return generate_blob_scene(w, h, seed);
  }
}

CorpusManifest make_corpus(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.output_dir.empty()) throw config_error("make_corpus needs an output dir");

  std::error_code ec;
  fs::create_directories(fs::path(cfg.output_dir) / "clean", ec);
  fs::create_directories(fs::path(cfg.output_dir) / "degraded", ec);
  fs::create_directories(fs::path(cfg.output_dir) / "recipes", ec);
  if (ec) throw io_error("cannot create corpus directories under " + cfg.output_dir);

  const double mix_total = cfg.class_mix[0] + cfg.class_mix[1] + cfg.class_mix[2];
  const int n_single = int(std::lround(double(cfg.corpus_size) * cfg.class_mix[0] / mix_total));
  const int n_double = int(std::lround(double(cfg.corpus_size) * cfg.class_mix[1] / mix_total));
  const int n_triple = cfg.corpus_size - n_single - n_double;
  if (n_triple < 0) throw config_error("class mix rounding exceeded the corpus size");

  CorpusManifest manifest;
  manifest.root = cfg.output_dir;
  for (int index = 0; index < cfg.corpus_size; ++index) {
    const DegradationClass cls = index < n_single ? DegradationClass::Single
                                 : index < n_single + n_double
                                     ? DegradationClass::Double
                                     : DegradationClass::Triple;
    SplitMix64 rng(derive_seed(cfg.seed, std::uint64_t(index)));

    const Image clean =
        quantized(generate_scene(cfg.image_width, cfg.image_height, rng.next_u64(), index), 16);

    int kinds[3] = {0, 1, 2};
    for (int i = 2; i > 0; --i) {
      const int j = int(rng.next_index(std::size_t(i) + 1));
      std::swap(kinds[i], kinds[j]);
    }
    const int step_count = cls == DegradationClass::Single ? 1
                           : cls == DegradationClass::Double ? 2
                                                             : 3;
    static const Degradation kKinds[3] = {Degradation::Noise, Degradation::Blur,
                                          Degradation::Contrast};
    DegradationRecipe recipe;
    recipe.order_randomized = true;
    for (int k = 0; k < step_count; ++k) {
      recipe.steps.push_back(
          {kKinds[kinds[k]], rng.next_uniform(cfg.severity_min, cfg.severity_max)});
    }
    // Canonical step listing keeps recipe files order-independent; the
    // synthesis seed decides the actual application order.
    std::sort(recipe.steps.begin(), recipe.steps.end(),
              [](const DegradationStep& a, const DegradationStep& b) {
                return kind_index(a.kind) < kind_index(b.kind);
              });
    recipe.seed = rng.next_u64();

    const Image degraded = synthesize(clean, recipe).image;

    ManifestEntry entry;
    entry.index = index;
    entry.cls = cls;
    entry.clean_path = "clean/" + entry_stem(index) + ".pgm";
    entry.degraded_path = "degraded/" + entry_stem(index) + ".pgm";
    entry.recipe_path = "recipes/" + entry_stem(index) + ".txt";
    save_pgm(clean, (fs::path(cfg.output_dir) / entry.clean_path).string(), 16);
    save_pgm(degraded, (fs::path(cfg.output_dir) / entry.degraded_path).string(), 16);
    save_recipe(recipe, (fs::path(cfg.output_dir) / entry.recipe_path).string());
    manifest.entries.push_back(entry);
  }

  std::ofstream out(fs::path(cfg.output_dir) / "manifest.txt");
  if (!out) throw io_error("cannot write corpus manifest under " + cfg.output_dir);
  for (const ManifestEntry& e : manifest.entries) {
    out << e.index << " " << class_name(e.cls) << " " << e.clean_path << " "
        << e.degraded_path << " " << e.recipe_path << "\n";
  }
  if (!out) throw io_error("short write to corpus manifest");
  return manifest;
}

CorpusManifest load_manifest(const std::string& corpus_dir) {
  std::ifstream in(fs::path(corpus_dir) / "manifest.txt");
  if (!in) throw io_error("cannot open manifest under " + corpus_dir);
  CorpusManifest manifest;
  manifest.root = corpus_dir;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    ManifestEntry e;
    std::string cls;
    if (!(ss >> e.index >> cls >> e.clean_path >> e.degraded_path >> e.recipe_path)) {
      throw io_error("malformed manifest line: " + line);
    }
    if (cls == "single") e.cls = DegradationClass::Single;
    else if (cls == "double") e.cls = DegradationClass::Double;
    else if (cls == "triple") e.cls = DegradationClass::Triple;
    else throw io_error("unknown class in manifest: " + cls);
    manifest.entries.push_back(e);
  }
  if (manifest.entries.empty()) throw io_error("empty manifest under " + corpus_dir);
  return manifest;
}

std::vector<TrainSample> corpus_samples(const CorpusManifest& manifest) {
  std::vector<TrainSample> samples;
  samples.reserve(manifest.entries.size());
  for (const ManifestEntry& e : manifest.entries) {
    const Image clean = load_image((fs::path(manifest.root) / e.clean_path).string());
    const Image degraded = load_image((fs::path(manifest.root) / e.degraded_path).string());
    const DegradationRecipe recipe =
        load_recipe((fs::path(manifest.root) / e.recipe_path).string());
    TrainSample s;
    s.stats = compute_stats(degraded);
    for (const DegradationStep& step : recipe.steps) {
      s.labels[std::size_t(kind_index(step.kind))] = 1;
    }
    s.y = intensity_label(degraded, clean);
    samples.push_back(s);
  }
  return samples;
}

Image restore_one(const Image& img, const TrainedHeads& heads,
                  const Strategy& strategy, double zeta, std::uint64_t rps_seed,
                  RestoreDiagnostics* diag) {
  const DegradationStats stats = compute_stats(img);
  const TypeLogits logits = logits_from_head(heads.type_head, stats);
  const GateDecision gates = gate(logits, zeta);

  std::array<BetaEvidence, 3> evidence;
  std::array<double, 3> strengths = {1.0, 1.0, 1.0};
  for (int l = 0; l < 3; ++l) {
    evidence[std::size_t(l)] =
        evidence_from_head(heads.evidence_heads[std::size_t(l)], stats);
    strengths[std::size_t(l)] = modulation(evidence[std::size_t(l)]);
  }

  if (diag) {
    diag->stats = stats;
    diag->logits = logits;
    diag->gates = gates;
    diag->evidence = evidence;
    diag->strengths = strengths;
    diag->strategy = strategy.name();
    diag->rps_pick = -1;
    diag->path_labels.clear();
    diag->seros = SerosDiagnostics{};
  }

  std::vector<Degradation> active;
  for (Degradation kind : {Degradation::Contrast, Degradation::Blur, Degradation::Noise}) {
    if (gates.by_index(kind_index(kind))) active.push_back(kind);
  }
  if (active.empty()) return img;

  if (strategy.kind == Strategy::Kind::Fixed) {
    return apply_path(img, strategy.fixed_order, gates, strengths).final;
  }

  // Candidate paths: permutations of the active kinds in c < b < n rank order.
  std::sort(active.begin(), active.end(),
            [](Degradation a, Degradation b) { return path_rank(a) < path_rank(b); });
  std::vector<std::string> labels;
  std::vector<Image> candidates;
  do {
    labels.push_back(order_label(active));
    candidates.push_back(apply_path(img, active, gates, strengths).final);
  } while (std::next_permutation(active.begin(), active.end(),
                                 [](Degradation a, Degradation b) {
                                   return path_rank(a) < path_rank(b);
                                 }));
  if (diag) diag->path_labels = labels;

  switch (strategy.kind) {
    case Strategy::Kind::Rps: {
      SplitMix64 rng(rps_seed);
      const int pick = int(rng.next_index(candidates.size()));
      if (diag) diag->rps_pick = pick;
      return candidates[std::size_t(pick)];
    }
    case Strategy::Kind::Pea: {
      Image out(img.width, img.height);
      const double w = 1.0 / double(candidates.size());
      for (const Image& c : candidates) {
        for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += w * c.data[i];
      }
      return clamp01_inplace(out);
    }
    case Strategy::Kind::Seros: {
      const CandidateSet set = make_candidate_set(labels, candidates);
      return seros_pipeline(set, diag ? &diag->seros : nullptr);
    }
    default:
      throw config_error("unreachable strategy kind");
  }
}

namespace {

struct Accumulator {
  int count = 0;
  double psnr_sum = 0.0;
  double ssim_sum = 0.0;
  double mae_sum = 0.0;
};

nlohmann::json diag_json(int index, DegradationClass cls, const std::string& strategy,
                         const RestoreDiagnostics& d, const MetricReport& m,
                         double mae) {
  nlohmann::json j;
  j["index"] = index;
  j["class"] = class_name(cls);
  j["strategy"] = strategy;
  j["psnr"] = m.psnr;
  j["ssim"] = m.ssim;
  j["mae"] = mae;
  j["stats"] = {d.stats.noise_score, d.stats.blur_score, d.stats.contrast_score};
  j["logits"] = {d.logits.pi_n, d.logits.pi_b, d.logits.pi_c};
  j["gates"] = {int(d.gates.d_n), int(d.gates.d_b), int(d.gates.d_c)};
  j["p"] = {d.evidence[0].intensity(), d.evidence[1].intensity(), d.evidence[2].intensity()};
  j["S"] = {d.evidence[0].confidence(), d.evidence[1].confidence(), d.evidence[2].confidence()};
  j["strengths"] = {d.strengths[0], d.strengths[1], d.strengths[2]};
  j["paths"] = d.path_labels;
  if (d.strategy == "rps") j["rps_pick"] = d.rps_pick;
  if (d.strategy == "seros" && !d.seros.candidates.entries.empty()) {
    j["partition"] = d.seros.partition.assignment;
    j["contributions"] = d.seros.contributions;
    j["selected"] = d.seros.selected;
    j["weights"] = d.seros.weights;
  }
  return j;
}

}  // namespace

BenchReport bench(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.strategies.empty()) throw config_error("bench needs at least one strategy");
  if (cfg.report_path.empty()) throw config_error("bench needs a report path");

  std::vector<Strategy> strategies;
  for (const std::string& s : cfg.strategies) strategies.push_back(parse_strategy(s));

  const CorpusManifest manifest = load_manifest(cfg.corpus_dir);
  const TrainedHeads heads = load_heads(cfg.heads_path);

  std::error_code ec;
  fs::create_directories(cfg.report_path, ec);
  if (ec) throw io_error("cannot create report dir " + cfg.report_path);

  std::ofstream diag_out(fs::path(cfg.report_path) / "diagnostics.jsonl");
  if (!diag_out) throw io_error("cannot write diagnostics under " + cfg.report_path);

  // (class, strategy index) accumulators plus per-strategy overall means.
  std::map<std::pair<int, std::size_t>, Accumulator> cells;
  std::vector<Accumulator> overall(strategies.size());

  for (const ManifestEntry& e : manifest.entries) {
    const Image clean = load_image((fs::path(manifest.root) / e.clean_path).string());
    const Image degraded = load_image((fs::path(manifest.root) / e.degraded_path).string());
    for (std::size_t si = 0; si < strategies.size(); ++si) {
      RestoreDiagnostics diag;
      const std::uint64_t rps_seed =
          derive_seed(cfg.seed, std::uint64_t(e.index) * 64 + si);
      const Image restored =
          restore_one(degraded, heads, strategies[si], cfg.zeta, rps_seed, &diag);
      const MetricReport m = compute_metrics(restored, clean);
      const double mae = mean_abs_error(restored, clean);

      Accumulator& acc = cells[{int(e.cls), si}];
      ++acc.count;
      acc.psnr_sum += m.psnr;
      acc.ssim_sum += m.ssim;
      acc.mae_sum += mae;
      ++overall[si].count;
      overall[si].psnr_sum += m.psnr;
      overall[si].ssim_sum += m.ssim;
      overall[si].mae_sum += mae;

      diag_out << diag_json(e.index, e.cls, strategies[si].name(), diag, m, mae)
               << "\n";
    }
  }
  if (!diag_out) throw io_error("short write to diagnostics");

  BenchReport report;
  report.csv_path = (fs::path(cfg.report_path) / "report.csv").string();
  report.table_path = (fs::path(cfg.report_path) / "report.txt").string();
  report.diagnostics_path = (fs::path(cfg.report_path) / "diagnostics.jsonl").string();

  std::ofstream csv(report.csv_path);
  std::ofstream table(report.table_path);
  if (!csv || !table) throw io_error("cannot write reports under " + cfg.report_path);
  csv << "class,strategy,count,psnr,ssim,mae\n";
  char line[256];
  std::snprintf(line, sizeof line, "%-9s %-10s %5s %10s %8s %8s\n", "class",
                "strategy", "count", "psnr", "ssim", "mae");
  table << line;

  auto emit = [&](const std::string& cls, const std::string& strat,
                  const Accumulator& acc) {
    const double psnr_mean = acc.psnr_sum / double(acc.count);
    const double ssim_mean = acc.ssim_sum / double(acc.count);
    const double mae_mean = acc.mae_sum / double(acc.count);
    std::snprintf(line, sizeof line, "%s,%s,%d,%.6f,%.6f,%.6f\n", cls.c_str(),
                  strat.c_str(), acc.count, psnr_mean, ssim_mean, mae_mean);
    csv << line;
    std::snprintf(line, sizeof line, "%-9s %-10s %5d %10.6f %8.6f %8.6f\n",
                  cls.c_str(), strat.c_str(), acc.count, psnr_mean, ssim_mean,
                  mae_mean);
    table << line;
  };

  for (int cls = 0; cls < 3; ++cls) {
    for (std::size_t si = 0; si < strategies.size(); ++si) {
      const auto it = cells.find({cls, si});
      if (it == cells.end()) continue;
      const Accumulator& acc = it->second;
      BenchRow row;
      row.cls = DegradationClass(cls);
      row.strategy = strategies[si].name();
      row.count = acc.count;
      row.mean_psnr = acc.psnr_sum / double(acc.count);
      row.mean_ssim = acc.ssim_sum / double(acc.count);
      row.mean_mae = acc.mae_sum / double(acc.count);
      report.rows.push_back(row);
      emit(class_name(row.cls), row.strategy, acc);
    }
  }

  // Two "average" readings per strategy: the unweighted mean of the class
  // means and the plain per-image mean; they differ when classes are
  // unbalanced, so both are emitted under distinct labels.
  for (std::size_t si = 0; si < strategies.size(); ++si) {
    Accumulator class_mean;
    for (int cls = 0; cls < 3; ++cls) {
      const auto it = cells.find({cls, si});
      if (it == cells.end()) continue;
      ++class_mean.count;
      class_mean.psnr_sum += it->second.psnr_sum / double(it->second.count);
      class_mean.ssim_sum += it->second.ssim_sum / double(it->second.count);
      class_mean.mae_sum += it->second.mae_sum / double(it->second.count);
    }
    if (class_mean.count > 0) {
      emit("classmean", strategies[si].name(), class_mean);
    }
    if (overall[si].count > 0) {
      emit("overall", strategies[si].name(), overall[si]);
    }
  }
  if (!csv || !table) throw io_error("short write to reports");
  return report;
}

}  // namespace tir
