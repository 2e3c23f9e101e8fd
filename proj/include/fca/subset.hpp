#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "fca/manifest.hpp"

namespace fca {

// A few-class overlay over a full dataset. Holds class ids only; images are
// never copied.
struct SubsetSpec {
  std::string dataset_name;
  int n_cl = 0;
  std::uint64_t seed = 0;
  std::vector<ClassId> selected_classes;  // strictly ascending
  std::size_t source_class_count = 0;

  friend bool operator==(const SubsetSpec&, const SubsetSpec&) = default;
};

struct SubsetPlan {
  std::string dataset_name;
  std::vector<int> n_cl_list;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
};

inline const std::vector<int> kDefaultNclList{2, 3, 4, 5, 10, 100};
inline const std::vector<std::uint64_t> kDefaultSeeds{0, 1, 2, 3, 4};

SubsetSpec sample_subset(const std::set<ClassId>& class_universe, int n_cl, std::uint64_t seed,
                         std::string dataset_name = {});

// Cartesian product n_cl_list x seeds, ordered by (n_cl, seed).
std::vector<SubsetSpec> expand_plan(const SubsetPlan& plan, const std::set<ClassId>& class_universe);

DatasetManifest filter_manifest(const DatasetManifest& manifest, const SubsetSpec& spec);

// "<dataset>_ncl<N>_seed<S>.json"
std::string spec_file_name(const SubsetSpec& spec);

// Canonical JSON: fixed key order, two-space indent, trailing newline.
std::string serialize_spec(const SubsetSpec& spec);
SubsetSpec parse_spec(const std::string& text);
SubsetSpec load_spec(const std::filesystem::path& path);

// Writes one file per spec plus "index.json"; returns written paths.
std::vector<std::filesystem::path> write_subset_specs(const std::vector<SubsetSpec>& specs,
                                                      const std::filesystem::path& out_dir);

}  // namespace fca
