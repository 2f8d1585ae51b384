// icgsbd: command-line driver for the file-based pipeline stages.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "icgsbd/pipeline.hpp"

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kData = 3, kConvergence = 4 };

icgsbd::RunConfig load_config(const std::string& path, std::optional<std::uint64_t> seed, bool strict) {
  icgsbd::KeyValueConfig kv;
  if (!path.empty()) kv = icgsbd::KeyValueConfig::load(path);
  if (seed) kv.set("seed", std::to_string(*seed));
  auto cfg = icgsbd::RunConfig::from_config(kv);
  cfg.strict = strict;
  return cfg;
}

void print_generate(const icgsbd::GenerateSummary& s) {
  std::printf("catalog: %zu graphs\n", s.graphs);
  std::printf("  compile+simulate: %zu\n", s.simulates);
  std::printf("  compile only:     %zu\n", s.compiles - s.simulates);
  std::printf("  no compile:       %zu\n", s.graphs - s.compiles);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"IC-GSBD pipeline: enumerate, featurize, train, predict, evaluate and down-select graph designs"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  bool strict = false;
  app.add_option("--config", config_path, "key = value configuration file");
  app.add_option("--seed", seed, "random seed (overrides the config)");
  app.add_option("--out", out_dir, "directory holding every stage's inputs and outputs");
  app.add_flag("--strict", strict, "treat numeric non-convergence warnings as errors");

  auto* generate = app.add_subcommand("generate", "enumerate the catalog and evaluate the oracle");
  auto* featurize = app.add_subcommand("featurize", "split known/unknown, compute node metrics and PCA");
  auto* train = app.add_subcommand("train", "train the graph classifier on the training split");
  auto* predict = app.add_subcommand("predict", "predict labels for the unknown split");
  auto* metrics = app.add_subcommand("metrics", "score predictions against the oracle");
  auto* iterate = app.add_subcommand("iterate", "run the iterative down-selection loop");

  CLI11_PARSE(app, argc, argv);

  try {
    const auto cfg = load_config(config_path, seed, strict);
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    if (generate->parsed()) {
      print_generate(icgsbd::run_generate(cfg, dir));
    } else if (featurize->parsed()) {
      const auto s = icgsbd::run_featurize(cfg, dir);
      std::printf("featurized %zu graphs: %zu training, %zu validation, %zu unknown\n", s.population, s.training,
                  s.validation, s.unknown);
      if (s.pca) {
        std::printf("pca explained variance:");
        for (double r : s.pca->explained_variance_ratio) std::printf(" %.4f", r);
        std::printf("\n");
      }
      if (s.nonconverged) std::fprintf(stderr, "warning: %zu graph(s) did not converge\n", s.nonconverged);
    } else if (train->parsed()) {
      const auto r = icgsbd::run_train(cfg, dir);
      const auto& last = r.history.back();
      std::printf("trained %zu epochs: final train loss %.6f, validation accuracy %.4f\n", last.epoch,
                  last.train_loss, last.val_accuracy);
    } else if (predict->parsed()) {
      const auto s = icgsbd::run_predict(cfg, dir);
      std::printf("predicted %zu graphs (%zu inconsistent label arrays coerced)\n", s.predicted, s.coerced);
    } else if (metrics->parsed()) {
      const auto r = icgsbd::run_metrics(cfg, dir);
      icgsbd::write_label_table(std::cout, r);
      std::printf("exact-match accuracy %.4f", r.exact_match_accuracy);
      if (r.mean_auc) std::printf(", mean AUC %.4f", *r.mean_auc);
      std::printf("\n");
    } else if (iterate->parsed()) {
      const auto r = icgsbd::run_iterate(cfg, dir);
      std::printf("iterations run: %zu, retained %zu of %zu, oracle evaluations %zu (%zu supplements)%s%s\n",
                  r.iterations.size(), r.retained.size(), r.catalog_size, r.budget_spent, r.supplements,
                  r.truncated ? ", truncated" : "", r.stopped_early ? ", stopped early" : "");
      for (auto [k, c] : r.topk) std::printf("top-%zu recall: %zu\n", k, c);
    }
  } catch (const icgsbd::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const icgsbd::BoundExceeded& e) {
    std::fprintf(stderr, "bound exceeded: %s\n", e.what());
    return kConfig;
  } catch (const icgsbd::ConvergenceWarning& e) {
    std::fprintf(stderr, "non-convergence (strict): %s\n", e.what());
    return kConvergence;
  } catch (const icgsbd::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailure;
  }
  return kOk;
}
