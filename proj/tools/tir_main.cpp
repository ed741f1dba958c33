#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tir/image_io.hpp"
#include "tir/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

void add_corpus_options(CLI::App* cmd, tir::RunConfig& cfg) {
  cmd->add_option("--size", cfg.corpus_size, "number of images");
  cmd->add_option("--seed", cfg.seed, "corpus seed");
  cmd->add_option("--width", cfg.image_width, "image width");
  cmd->add_option("--height", cfg.image_height, "image height");
  cmd->add_option("--severity-min", cfg.severity_min, "lower severity bound");
  cmd->add_option("--severity-max", cfg.severity_max, "upper severity bound");
  cmd->add_option("--mix-single", cfg.class_mix[0], "single-degradation fraction");
  cmd->add_option("--mix-double", cfg.class_mix[1], "double-degradation fraction");
  cmd->add_option("--mix-triple", cfg.class_mix[2], "triple-degradation fraction");
}

int run(int argc, char** argv) {
  CLI::App app{"degradation-aware thermal image restoration toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read options from an INI file");
  app.allow_config_extras(CLI::config_extras_mode::ignore_all);

  tir::RunConfig cfg;

  auto* make_cmd = app.add_subcommand("make-corpus", "synthesize a degraded corpus");
  make_cmd->add_option("--out", cfg.output_dir, "corpus output dir")->required();
  add_corpus_options(make_cmd, cfg);

  auto* train_cmd = app.add_subcommand("train-heads", "fit the estimation heads");
  std::string heads_out;
  tir::TrainOptions train_opts;
  train_cmd->add_option("--corpus", cfg.corpus_dir, "training corpus dir")->required();
  train_cmd->add_option("--out", heads_out, "weights file to write")->required();
  train_cmd->add_option("--epochs", train_opts.epochs, "training epochs");
  train_cmd->add_option("--lr", train_opts.learning_rate, "initial step size");
  train_cmd->add_option("--train-seed", train_opts.seed, "weight init seed");
  train_cmd->add_option("--zeta", cfg.zeta, "gate threshold for the F1 report");

  auto* restore_cmd = app.add_subcommand("restore", "restore a single image");
  std::string in_path, out_path, reference_path, diag_path;
  restore_cmd->add_option("--in", in_path, "degraded image")->required();
  restore_cmd->add_option("--out", out_path, "restored image path")->required();
  restore_cmd->add_option("--heads", cfg.heads_path, "trained weights file")->required();
  restore_cmd->add_option("--strategy", cfg.strategy, "seros|rps|pea|fixed:<order>");
  restore_cmd->add_option("--zeta", cfg.zeta, "gate threshold");
  restore_cmd->add_option("--seed", cfg.seed, "random-path seed");
  restore_cmd->add_option("--reference", reference_path, "clean image for metrics");
  restore_cmd->add_option("--diag", diag_path, "write JSON diagnostics here");

  auto* bench_cmd = app.add_subcommand("bench", "benchmark strategies over a corpus");
  std::vector<std::string> strategy_args;
  bench_cmd->add_option("--corpus", cfg.corpus_dir, "corpus dir")->required();
  bench_cmd->add_option("--heads", cfg.heads_path, "trained weights file")->required();
  bench_cmd->add_option("--report", cfg.report_path, "report output dir")->required();
  bench_cmd->add_option("--zeta", cfg.zeta, "gate threshold");
  bench_cmd->add_option("--seed", cfg.seed, "bench seed (random paths)");
  bench_cmd->add_option("--strategy", strategy_args,
                        "strategy to run (repeatable; default: all nine)");

  auto* se_cmd = app.add_subcommand("se", "structural entropy of a graph file");
  std::string graph_path, partition_path;
  se_cmd->add_option("graph", graph_path, "graph file")->required();
  se_cmd->add_option("--partition", partition_path,
                     "partition file (default: minimize)");

  auto* graph_cmd = app.add_subcommand("graph", "similarity graph over candidates");
  std::vector<std::string> image_paths;
  std::string graph_out;
  graph_cmd->add_option("images", image_paths, "candidate images (>= 2)")->required();
  graph_cmd->add_option("--out", graph_out, "graph file to write")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (make_cmd->parsed()) {
    const tir::CorpusManifest manifest = tir::make_corpus(cfg);
    std::cout << "wrote " << manifest.entries.size() << " images under "
              << manifest.root << "\n";
    return kExitOk;
  }

  if (train_cmd->parsed()) {
    const tir::CorpusManifest manifest = tir::load_manifest(cfg.corpus_dir);
    const std::vector<tir::TrainSample> samples = tir::corpus_samples(manifest);
    const tir::TrainedHeads heads = tir::train_heads(samples, train_opts);
    tir::save_heads(heads, heads_out);
    const auto f1 = tir::per_type_f1(heads.type_head, samples, cfg.zeta);
    std::printf("final loss %.6f\n", heads.final_loss);
    std::printf("training F1 noise %.4f blur %.4f contrast %.4f\n", f1[0], f1[1],
                f1[2]);
    return kExitOk;
  }

  if (restore_cmd->parsed()) {
    const tir::Image degraded = tir::load_image(in_path);
    const tir::TrainedHeads heads = tir::load_heads(cfg.heads_path);
    const tir::Strategy strategy = tir::parse_strategy(cfg.strategy);
    tir::RestoreDiagnostics diag;
    const tir::Image restored =
        tir::restore_one(degraded, heads, strategy, cfg.zeta, cfg.seed, &diag);
    tir::save_image(restored, out_path);
    std::cout << "gates n=" << diag.gates.d_n << " b=" << diag.gates.d_b
              << " c=" << diag.gates.d_c << "\n";
    if (!reference_path.empty()) {
      const tir::Image reference = tir::load_image(reference_path);
      const tir::MetricReport before = tir::compute_metrics(degraded, reference);
      const tir::MetricReport after = tir::compute_metrics(restored, reference);
      std::printf("psnr %.4f -> %.4f  ssim %.4f -> %.4f\n", before.psnr,
                  after.psnr, before.ssim, after.ssim);
    }
    if (!diag_path.empty()) {
      nlohmann::json j;
      j["strategy"] = diag.strategy;
      j["stats"] = {diag.stats.noise_score, diag.stats.blur_score,
                    diag.stats.contrast_score};
      j["gates"] = {int(diag.gates.d_n), int(diag.gates.d_b), int(diag.gates.d_c)};
      j["strengths"] = {diag.strengths[0], diag.strengths[1], diag.strengths[2]};
      j["paths"] = diag.path_labels;
      if (!diag.seros.weights.empty()) {
        j["partition"] = diag.seros.partition.assignment;
        j["weights"] = diag.seros.weights;
        j["selected"] = diag.seros.selected;
      }
      std::ofstream out(diag_path);
      if (!out) throw tir::io_error("cannot write " + diag_path);
      out << j.dump(2) << "\n";
    }
    return kExitOk;
  }

  if (bench_cmd->parsed()) {
    cfg.strategies = strategy_args;
    if (cfg.strategies.empty()) {
      for (const tir::Strategy& s : tir::default_strategies()) {
        cfg.strategies.push_back(s.name());
      }
    }
    const tir::BenchReport report = tir::bench(cfg);
    std::ifstream table(report.table_path);
    std::cout << table.rdbuf();
    std::cout << "csv: " << report.csv_path << "\n";
    return kExitOk;
  }

  if (se_cmd->parsed()) {
    const tir::SimilarityGraph g = tir::load_graph(graph_path);
    tir::Partition p = partition_path.empty() ? tir::minimize_partition(g)
                                              : tir::load_partition(partition_path);
    bool zero_volume = false;
    const double h = tir::two_d_se(g, p, &zero_volume);
    std::printf("H2 %.12f\n", h);
    if (zero_volume) std::cout << "warning: zero-volume graph\n";
    for (std::size_t v = 0; v < p.assignment.size(); ++v) {
      std::cout << v << " " << p.assignment[v] << "\n";
    }
    return kExitOk;
  }

  if (graph_cmd->parsed()) {
    if (image_paths.size() < 2) {
      throw tir::config_error("graph needs at least 2 candidate images");
    }
    std::vector<tir::Image> images;
    std::vector<std::string> labels;
    for (const std::string& path : image_paths) {
      images.push_back(tir::load_image(path));
      labels.push_back(std::filesystem::path(path).filename().string());
    }
    const tir::CandidateSet set = tir::make_candidate_set(labels, images);
    tir::save_graph(tir::build_graph(set), graph_out);
    std::cout << "wrote " << graph_out << "\n";
    return kExitOk;
  }

  return kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const tir::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const tir::io_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
}
