#include "fca/config.hpp"

#include <cstdlib>
#include <set>

#include <json.hpp>

#include "fca/error.hpp"
#include "fca/io.hpp"

namespace fca {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw Error(ErrorCode::InvalidValue, where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.contains(key)) throw Error(ErrorCode::UnknownKey, where.empty() ? key : where + "." + key);
  }
}

template <typename T>
T get_as(const json& j, const std::string& name) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::InvalidValue, name);
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return (path.is_relative() && !base.empty()) ? base / path : path;
}

}  // namespace

std::optional<std::string> process_env(std::string_view name) {
  const char* v = std::getenv(std::string(name).c_str());
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

RunConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir,
                       const EnvLookup& env) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidValue, std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(root, {"dataset", "split", "paths", "subsets", "similarity", "report"}, "");

  RunConfig cfg;
  if (!root.contains("dataset")) throw Error(ErrorCode::MissingRequired, "dataset");
  cfg.dataset = get_as<std::string>(root["dataset"], "dataset");
  if (cfg.dataset.empty()) throw Error(ErrorCode::InvalidValue, "dataset must be non-empty");
  cfg.plan.dataset_name = cfg.dataset;
  if (root.contains("split")) cfg.split = parse_split(get_as<std::string>(root["split"], "split"));

  if (!root.contains("paths")) throw Error(ErrorCode::MissingRequired, "paths");
  const auto& paths = root["paths"];
  reject_unknown(paths, {"manifest", "store", "results", "simss", "out_dir"}, "paths");
  auto opt_path = [&](const char* key) -> std::optional<std::filesystem::path> {
    if (!paths.contains(key)) return std::nullopt;
    return resolve(base_dir, get_as<std::string>(paths[key], std::string("paths.") + key));
  };
  cfg.paths.manifest = opt_path("manifest");
  cfg.paths.store = opt_path("store");
  cfg.paths.results = opt_path("results");
  cfg.paths.simss = opt_path("simss");
  if (auto out = opt_path("out_dir")) cfg.paths.out_dir = *out;

  if (auto v = env("FCA_MANIFEST")) cfg.paths.manifest = *v;
  if (auto v = env("FCA_STORE")) cfg.paths.store = *v;
  if (auto v = env("FCA_RESULTS")) cfg.paths.results = *v;
  if (auto v = env("FCA_SIMSS")) cfg.paths.simss = *v;
  if (auto v = env("FCA_OUT_DIR")) cfg.paths.out_dir = *v;
  if (cfg.paths.out_dir.empty()) throw Error(ErrorCode::MissingRequired, "paths.out_dir");

  cfg.plan.n_cl_list = kDefaultNclList;
  cfg.plan.seeds = kDefaultSeeds;
  if (root.contains("subsets")) {
    const auto& s = root["subsets"];
    reject_unknown(s, {"n_cl", "seeds"}, "subsets");
    if (s.contains("n_cl")) cfg.plan.n_cl_list = get_as<std::vector<int>>(s["n_cl"], "subsets.n_cl");
    if (s.contains("seeds")) cfg.plan.seeds = get_as<std::vector<std::uint64_t>>(s["seeds"], "subsets.seeds");
  }

  if (root.contains("similarity")) {
    const auto& s = root["similarity"];
    reject_unknown(s, {"max_instances_per_class", "subsample_seed", "tolerance"}, "similarity");
    if (s.contains("max_instances_per_class")) {
      cfg.similarity.max_instances_per_class =
          get_as<std::size_t>(s["max_instances_per_class"], "similarity.max_instances_per_class");
    }
    if (s.contains("subsample_seed")) {
      cfg.similarity.subsample_seed = get_as<std::uint64_t>(s["subsample_seed"], "similarity.subsample_seed");
    }
    if (s.contains("tolerance")) cfg.similarity.tolerance = get_as<double>(s["tolerance"], "similarity.tolerance");
    sim::validate(cfg.similarity);
  }

  if (root.contains("report")) {
    const auto& r = root["report"];
    reject_unknown(r, {"format", "regime"}, "report");
    if (r.contains("format")) cfg.format = bench::parse_format(get_as<std::string>(r["format"], "report.format"));
    if (r.contains("regime")) cfg.regime = bench::parse_regime(get_as<std::string>(r["regime"], "report.regime"));
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path, const EnvLookup& env) {
  return parse_config(io::read_file(path), path.parent_path(), env);
}

void validate_paths(const RunConfig& config) {
  auto check = [](const std::optional<std::filesystem::path>& p, const char* name) {
    if (p && !std::filesystem::exists(*p)) {
      throw Error(ErrorCode::InvalidValue, std::string(name) + " does not exist: " + p->string());
    }
  };
  check(config.paths.manifest, "paths.manifest");
  check(config.paths.store, "paths.store");
  check(config.paths.results, "paths.results");
  check(config.paths.simss, "paths.simss");
}

}  // namespace fca
