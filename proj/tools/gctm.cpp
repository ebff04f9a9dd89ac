// gctm — graph contrastive topic model pipeline.
//
// Stage commands over a cached artifact directory:
//   preprocess   tokenize, split, vocabulary, TF-IDF, co-occurrence counts
//   build-graphs NPMI scores and thresholded positive/negative word graphs
//   train        joint NTM + graph contrastive training across seeds
//   eval         coherence, sample-similarity diagnostic, exports, classification
//   ablate       full / w/o cl / w/o neg / w/o pos loss compositions
//   report       aggregate run records into table-style outputs
//
// Exit codes: 0 success, 2 input error, 3 stale upstream artifact,
// 4 numeric fault.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gctm/config.hpp"
#include "gctm/error.hpp"
#include "gctm/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitStale = 3;
constexpr int kExitNumeric = 4;

struct GlobalArgs {
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

std::string resolve_out_dir(const GlobalArgs& args) {
  if (!args.out_dir.empty()) return args.out_dir;
  if (const char* env = std::getenv("GCTM_CACHE_DIR"); env != nullptr && *env != '\0') {
    return env;
  }
  return "gctm_cache";
}

gctm::Pipeline make_pipeline(const GlobalArgs& args) {
  gctm::Config cfg = gctm::Config::load(args.config_path);
  for (const std::string& item : args.overrides) cfg.apply_override(item);
  if (args.seed_set) cfg.set("train.seeds", std::to_string(args.seed));
  return gctm::Pipeline(std::move(cfg), resolve_out_dir(args));
}

void report_seed_failures(const gctm::Pipeline& pipeline) {
  for (const auto& [seed, reason] : pipeline.seed_failures()) {
    std::cerr << "[warn] seed " << seed << " failed: " << reason << "\n";
  }
}

int dispatch(const std::string& command, const GlobalArgs& args) {
  gctm::Pipeline pipeline = make_pipeline(args);
  auto announce = [&](const char* stage, bool cache_hit) {
    if (cache_hit) {
      std::cout << "[cache] stage " << stage << " up to date in " << pipeline.root() << "\n";
    } else {
      std::cout << "[done] stage " << stage << " written to " << pipeline.root() << "\n";
    }
  };

  if (command == "preprocess") {
    announce("preprocess", pipeline.run_preprocess());
  } else if (command == "build-graphs") {
    announce("build-graphs", pipeline.run_build_graphs());
  } else if (command == "train") {
    const bool hit = pipeline.run_train();
    report_seed_failures(pipeline);
    announce("train", hit);
  } else if (command == "ablate") {
    const bool hit = pipeline.run_ablate();
    report_seed_failures(pipeline);
    announce("ablate", hit);
    for (const auto& [mode, records] : pipeline.load_ablate_records()) {
      std::vector<double> npmis;
      for (const auto& r : records) npmis.push_back(r.best_val_npmi);
      const gctm::AggregateStat stat = gctm::aggregate(npmis);
      std::cout << gctm::to_string(mode) << " npmi " << stat.mean << " +/- " << stat.stddev
                << "\n";
    }
  } else if (command == "eval") {
    announce("eval", pipeline.run_eval());
  } else if (command == "report") {
    pipeline.run_report();
    std::cout << "[done] report written to " << pipeline.report_dir() << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gctm: graph contrastive topic model pipeline"};
  app.require_subcommand(1);

  GlobalArgs args;
  app.add_option("--config", args.config_path, "flat key = value config file")
      ->required()
      ->envname("GCTM_CONFIG");
  app.add_option("--out", args.out_dir,
                 "artifact root (default: $GCTM_CACHE_DIR or ./gctm_cache)");
  app.add_option("--override", args.overrides, "config override key=value (repeatable)");
  auto* seed_opt = app.add_option("--seed", args.seed, "run a single training seed");
  app.fallthrough();

  for (const char* name : {"preprocess", "build-graphs", "train", "eval", "ablate", "report"}) {
    app.add_subcommand(name);
  }

  CLI11_PARSE(app, argc, argv);
  args.seed_set = seed_opt->count() > 0;
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    return dispatch(command, args);
  } catch (const gctm::StaleArtifactError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitStale;
  } catch (const gctm::NumericError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitNumeric;
  } catch (const gctm::Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitInput;
  } catch (const std::exception& err) {
    std::cerr << "unexpected error: " << err.what() << "\n";
    return 1;
  }
}
