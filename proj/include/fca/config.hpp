#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "fca/bench.hpp"
#include "fca/manifest.hpp"
#include "fca/simcore.hpp"
#include "fca/subset.hpp"

namespace fca {

// JSON run configuration:
//
//   {
//     "dataset": "in1k",
//     "split": "val",
//     "paths": {"manifest": "...", "store": "...", "results": "...",
//               "simss": "...", "out_dir": "..."},
//     "subsets": {"n_cl": [2, 3, 4, 5, 10, 100], "seeds": [0, 1, 2, 3, 4]},
//     "similarity": {"max_instances_per_class": 500, "subsample_seed": 0,
//                    "tolerance": 1e-12},
//     "report": {"format": "json", "regime": "sub"}
//   }
//
// Only "dataset" and "paths.out_dir" are required. Unknown keys are errors.
// The environment may override paths (FCA_MANIFEST, FCA_STORE, FCA_RESULTS,
// FCA_SIMSS, FCA_OUT_DIR) and nothing else.
struct RunConfig {
  struct Paths {
    std::optional<std::filesystem::path> manifest;
    std::optional<std::filesystem::path> store;
    std::optional<std::filesystem::path> results;
    std::optional<std::filesystem::path> simss;
    std::filesystem::path out_dir;
  };

  std::string dataset;
  Split split = Split::val;
  Paths paths;
  SubsetPlan plan;
  sim::SimilarityConfig similarity;
  bench::Format format = bench::Format::json;
  bench::Regime regime = bench::Regime::sub;
};

using EnvLookup = std::function<std::optional<std::string>(std::string_view)>;

std::optional<std::string> process_env(std::string_view name);

// Relative paths resolve against the config file's directory.
RunConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir = {},
                       const EnvLookup& env = process_env);
RunConfig load_config(const std::filesystem::path& path, const EnvLookup& env = process_env);

// Checks that every configured input path exists.
void validate_paths(const RunConfig& config);

}  // namespace fca
