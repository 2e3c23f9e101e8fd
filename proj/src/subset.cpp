#include "fca/subset.hpp"

#include <algorithm>

#include <json.hpp>

#include "fca/error.hpp"
#include "fca/io.hpp"
#include "fca/rng.hpp"

namespace fca {

SubsetSpec sample_subset(const std::set<ClassId>& class_universe, int n_cl, std::uint64_t seed,
                         std::string dataset_name) {
  if (n_cl < 2 || static_cast<std::size_t>(n_cl) > class_universe.size()) {
    throw Error(ErrorCode::NClOutOfRange,
                "n_cl=" + std::to_string(n_cl) + " with " +
                    std::to_string(class_universe.size()) + " classes");
  }
  std::vector<ClassId> pool(class_universe.begin(), class_universe.end());
  Xoshiro256 rng(seed);
  const auto k = static_cast<std::size_t>(n_cl);
  partial_shuffle(std::span<ClassId>(pool), k, rng);
  pool.resize(k);
  std::sort(pool.begin(), pool.end());

  SubsetSpec spec;
  spec.dataset_name = std::move(dataset_name);
  spec.n_cl = n_cl;
  spec.seed = seed;
  spec.selected_classes = std::move(pool);
  spec.source_class_count = class_universe.size();
  return spec;
}

std::vector<SubsetSpec> expand_plan(const SubsetPlan& plan, const std::set<ClassId>& class_universe) {
  auto n_cls = plan.n_cl_list;
  auto seeds = plan.seeds;
  std::sort(n_cls.begin(), n_cls.end());
  n_cls.erase(std::unique(n_cls.begin(), n_cls.end()), n_cls.end());
  std::sort(seeds.begin(), seeds.end());
  seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());

  std::vector<SubsetSpec> specs;
  specs.reserve(n_cls.size() * seeds.size());
  for (int n : n_cls) {
    if (n < 2 || static_cast<std::size_t>(n) > class_universe.size()) {
      throw Error(ErrorCode::NClOutOfRange, "n_cl=" + std::to_string(n) + " exceeds " +
                                                std::to_string(class_universe.size()) +
                                                " classes in " + plan.dataset_name);
    }
    for (auto s : seeds) specs.push_back(sample_subset(class_universe, n, s, plan.dataset_name));
  }
  return specs;
}

DatasetManifest filter_manifest(const DatasetManifest& manifest, const SubsetSpec& spec) {
  for (auto c : spec.selected_classes) {
    if (!manifest.class_universe.contains(c)) {
      throw Error(ErrorCode::ClassNotInManifest, std::to_string(c));
    }
  }
  DatasetManifest out;
  out.dataset_name = manifest.dataset_name;
  out.split = manifest.split;
  out.class_universe.insert(spec.selected_classes.begin(), spec.selected_classes.end());
  for (const auto& e : manifest.entries) {
    if (out.class_universe.contains(e.class_id)) out.entries.push_back(e);
  }
  return out;
}

std::string spec_file_name(const SubsetSpec& spec) {
  return spec.dataset_name + "_ncl" + std::to_string(spec.n_cl) + "_seed" +
         std::to_string(spec.seed) + ".json";
}

std::string serialize_spec(const SubsetSpec& spec) {
  nlohmann::ordered_json j;
  j["dataset"] = spec.dataset_name;
  j["n_cl"] = spec.n_cl;
  j["seed"] = spec.seed;
  j["source_class_count"] = spec.source_class_count;
  j["selected_classes"] = spec.selected_classes;
  return j.dump(2) + "\n";
}

SubsetSpec parse_spec(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidValue, std::string("subset spec: ") + e.what());
  }
  SubsetSpec spec;
  try {
    spec.dataset_name = j.at("dataset").get<std::string>();
    spec.n_cl = j.at("n_cl").get<int>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    spec.source_class_count = j.at("source_class_count").get<std::size_t>();
    spec.selected_classes = j.at("selected_classes").get<std::vector<ClassId>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidValue, std::string("subset spec: ") + e.what());
  }
  if (spec.selected_classes.size() != static_cast<std::size_t>(spec.n_cl) ||
      !std::is_sorted(spec.selected_classes.begin(), spec.selected_classes.end()) ||
      std::adjacent_find(spec.selected_classes.begin(), spec.selected_classes.end()) !=
          spec.selected_classes.end()) {
    throw Error(ErrorCode::InvalidValue, "subset spec classes must be n_cl strictly ascending ids");
  }
  return spec;
}

SubsetSpec load_spec(const std::filesystem::path& path) { return parse_spec(io::read_file(path)); }

std::vector<std::filesystem::path> write_subset_specs(const std::vector<SubsetSpec>& specs,
                                                      const std::filesystem::path& out_dir) {
  std::vector<std::filesystem::path> written;
  nlohmann::ordered_json index = nlohmann::ordered_json::array();
  for (const auto& spec : specs) {
    auto path = out_dir / spec_file_name(spec);
    io::write_atomic(path, serialize_spec(spec));
    written.push_back(path);
    nlohmann::ordered_json row;
    row["dataset"] = spec.dataset_name;
    row["n_cl"] = spec.n_cl;
    row["seed"] = spec.seed;
    row["file"] = spec_file_name(spec);
    index.push_back(std::move(row));
  }
  nlohmann::ordered_json doc;
  doc["specs"] = std::move(index);
  auto index_path = out_dir / "index.json";
  io::write_atomic(index_path, doc.dump(2) + "\n");
  written.push_back(index_path);
  return written;
}

}  // namespace fca
