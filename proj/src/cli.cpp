#include "fca/cli.hpp"

#include <algorithm>
#include <chrono>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fca/bench.hpp"
#include "fca/config.hpp"
#include "fca/embedstore.hpp"
#include "fca/error.hpp"
#include "fca/io.hpp"
#include "fca/manifest.hpp"
#include "fca/parallel.hpp"
#include "fca/simcore.hpp"
#include "fca/subset.hpp"

namespace fca::cli {

namespace {

constexpr const char* kVersion = "1.0.0";

// key=value lines on stderr.
class Logger {
public:
  Logger(std::ostream& err, bool quiet) : err_(err), quiet_(quiet) {}

  void info(std::string_view event, std::initializer_list<std::pair<std::string_view, std::string>> kv = {}) {
    if (!quiet_) write("info", event, kv);
  }
  void error(std::string_view event, std::initializer_list<std::pair<std::string_view, std::string>> kv) {
    write("error", event, kv);
  }

private:
  void write(std::string_view level, std::string_view event,
             std::initializer_list<std::pair<std::string_view, std::string>> kv) {
    err_ << "fca level=" << level << " event=" << event;
    for (const auto& [k, v] : kv) {
      err_ << ' ' << k << '=';
      if (v.find_first_of(" \"=") != std::string::npos) {
        err_ << std::quoted(v);
      } else {
        err_ << v;
      }
    }
    err_ << '\n';
  }
  std::ostream& err_;
  bool quiet_;
};

int exit_code_for(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::config: return kExitConfig;
    case ErrorCategory::data: return kExitData;
    case ErrorCategory::compute: return kExitCompute;
    case ErrorCategory::io: return kExitIo;
  }
  return kExitData;
}

template <typename T>
T required(const std::optional<T>& v, const char* name) {
  if (!v) throw Error(ErrorCode::MissingRequired, name);
  return *v;
}

struct SimJob {
  std::optional<SubsetSpec> spec;
  sim::SimilarityReport report;
  std::string file_name;
};

std::string report_name(const std::string& dataset, const std::optional<SubsetSpec>& spec) {
  if (!spec) return dataset + "_full.report.json";
  return dataset + "_ncl" + std::to_string(spec->n_cl) + "_seed" + std::to_string(spec->seed) +
         ".report.json";
}

sim::SimilarityReport run_similarity(const EmbeddingStore& store, const DatasetManifest& manifest,
                                     const std::optional<SubsetSpec>& spec,
                                     const sim::SimilarityConfig& config) {
  auto view = make_view(store, manifest, spec ? &*spec : nullptr);
  auto report = sim::full_report(view, config);
  sim::SubsetIdentity id;
  id.dataset = manifest.dataset_name;
  if (spec) {
    id.n_cl = spec->n_cl;
    id.seed = spec->seed;
  } else {
    id.n_cl = static_cast<int>(manifest.class_universe.size());
  }
  report.subset = id;
  return report;
}

// Computes every job before writing anything.
std::vector<SimJob> run_sim_batch(const RunConfig& cfg, Logger& log) {
  const auto manifest_path = required(cfg.paths.manifest, "paths.manifest");
  const auto store_path = required(cfg.paths.store, "paths.store");
  auto manifest = parse_manifest(manifest_path, cfg.dataset, cfg.split);
  auto specs = expand_plan(cfg.plan, manifest.class_universe);
  auto store = read_store(store_path);
  log.info("sim.batch", {{"jobs", std::to_string(specs.size())}, {"encoder", store.encoder_tag()}});
  std::vector<SimJob> jobs;
  for (auto& spec : specs) {
    SimJob job;
    job.report = run_similarity(store, manifest, spec, cfg.similarity);
    job.file_name = report_name(cfg.dataset, spec);
    job.spec = std::move(spec);
    log.info("sim.job", {{"file", job.file_name}, {"simss", io::format_double(job.report.dataset.simss)}});
    jobs.push_back(std::move(job));
  }
  return jobs;
}

bench::SimssKey simss_key(const sim::SimilarityReport& report) {
  const auto& id = *report.subset;
  return {id.dataset, id.n_cl,
          id.seed ? std::optional<std::int64_t>(static_cast<std::int64_t>(*id.seed)) : std::nullopt};
}

bench::SimssTable simss_table(const std::vector<SimJob>& jobs) {
  bench::SimssTable table;
  for (const auto& job : jobs) table[simss_key(job.report)] = job.report.dataset.simss;
  return table;
}

void write_sim_batch(const std::vector<SimJob>& jobs, const std::filesystem::path& dir) {
  nlohmann::ordered_json entries = nlohmann::ordered_json::array();
  for (const auto& job : jobs) {
    io::write_atomic(dir / job.file_name, sim::report_to_json(job.report));
    const auto key = simss_key(job.report);
    nlohmann::ordered_json e;
    e["dataset"] = key.dataset;
    e["n_cl"] = key.n_cl;
    e["seed"] = key.seed ? nlohmann::ordered_json(*key.seed) : nlohmann::ordered_json(nullptr);
    e["simss"] = job.report.dataset.simss;
    e["report"] = job.file_name;
    entries.push_back(std::move(e));
  }
  nlohmann::ordered_json doc;
  doc["entries"] = std::move(entries);
  io::write_atomic(dir / "index.json", doc.dump(2) + "\n");
}

std::vector<std::string> ranked_datasets(const std::vector<bench::ResultRecord>& records) {
  std::set<std::string> ds;
  for (const auto& r : records) {
    if (r.regime == bench::Regime::full && !r.seed) ds.insert(r.dataset);
  }
  return {ds.begin(), ds.end()};
}

std::vector<std::string> ranked_models(const std::vector<bench::ResultRecord>& records) {
  std::set<std::string> models;
  for (const auto& r : records) {
    if (r.regime == bench::Regime::full && !r.seed) models.insert(r.model);
  }
  return {models.begin(), models.end()};
}

std::vector<bench::NamedRanking> all_rankings(const std::vector<bench::ResultRecord>& records,
                                              const std::optional<std::string>& dataset) {
  std::vector<bench::NamedRanking> out;
  auto models = ranked_models(records);
  auto datasets = dataset ? std::vector<std::string>{*dataset} : ranked_datasets(records);
  for (const auto& ds : datasets) out.push_back({ds, bench::rank_models(records, ds, models)});
  return out;
}

std::vector<bench::NamedCurve> all_curves(const std::vector<bench::ResultRecord>& records,
                                          const std::optional<std::string>& dataset,
                                          const std::optional<bench::Regime>& regime,
                                          const std::optional<std::string>& model) {
  std::set<std::pair<std::string, bench::Regime>> groups;
  for (const auto& r : records) {
    if (dataset && r.dataset != *dataset) continue;
    if (regime && r.regime != *regime) continue;
    if (!r.seed) continue;  // curves run over seeded subsets
    groups.emplace(r.dataset, r.regime);
  }
  if (groups.empty()) throw Error(ErrorCode::NoData, "no seeded records match the curve filter");
  std::vector<bench::NamedCurve> curves;
  for (const auto& [ds, rg] : groups) {
    std::vector<bench::ResultRecord> seeded;
    for (const auto& r : records) {
      if (r.dataset == ds && r.regime == rg && r.seed) seeded.push_back(r);
    }
    curves.push_back({ds, rg, model.value_or("DCN"), bench::accuracy_curve(seeded, ds, rg, model)});
  }
  return curves;
}

struct Options {
  bool quiet = false;
  unsigned threads = 0;
  std::string format = "json";

  // gen-subsets
  std::string dataset;
  std::string ncl = "2,3,4,5,10,100";
  std::string seeds = "0..4";
  std::optional<std::size_t> classes;
  std::optional<std::string> manifest;
  std::string split = "val";
  std::optional<std::string> out;

  // store
  std::string store_path;
  std::size_t head = 5;
  std::optional<std::string> input;
  std::string encoder = "unknown";
  bool indexed = false;

  // sim
  std::optional<std::string> store;
  std::optional<std::string> subset;
  std::optional<std::size_t> max_per_class;
  std::optional<std::uint64_t> subsample_seed;
  double tolerance = 1e-12;
  std::optional<std::string> csv_out;
  std::optional<std::string> config;

  // bench
  std::optional<std::string> results;
  std::optional<std::string> simss;
  std::optional<std::string> regime;
  std::optional<std::string> model;
  std::optional<std::string> bench_dataset;
};

std::filesystem::path need_out(const Options& o) {
  if (!o.out || o.out->empty()) throw Error(ErrorCode::MissingRequired, "--out");
  return *o.out;
}

int cmd_gen_subsets(const Options& o, std::ostream& out, Logger& log) {
  if (o.dataset.empty()) throw Error(ErrorCode::MissingRequired, "--dataset");
  const auto out_dir = need_out(o);
  std::set<ClassId> universe;
  if (o.manifest) {
    universe = parse_manifest(*o.manifest, o.dataset, parse_split(o.split)).class_universe;
  } else if (o.classes) {
    for (std::size_t c = 0; c < *o.classes; ++c) universe.insert(static_cast<ClassId>(c));
  } else {
    throw Error(ErrorCode::MissingRequired, "--classes or --manifest");
  }
  SubsetPlan plan;
  plan.dataset_name = o.dataset;
  for (auto n : parse_int_list(o.ncl)) plan.n_cl_list.push_back(static_cast<int>(n));
  plan.seeds.clear();
  for (auto s : parse_int_list(o.seeds)) {
    if (s < 0) throw Error(ErrorCode::InvalidValue, "seeds must be >= 0");
    plan.seeds.push_back(static_cast<std::uint64_t>(s));
  }
  auto specs = expand_plan(plan, universe);
  auto written = write_subset_specs(specs, out_dir);
  log.info("gen-subsets.done", {{"specs", std::to_string(specs.size())}, {"out", out_dir.string()}});
  out << specs.size() << " subset specs written to " << out_dir.string() << "\n";
  return kExitOk;
}

int cmd_store_inspect(const Options& o, std::ostream& out) {
  auto h = read_store_header(o.store_path);
  out << "magic: FCAE\n"
      << "version: " << h.version << "\n"
      << "count: " << h.count << "\n"
      << "dim: " << h.dim << "\n"
      << "encoder_tag: " << h.encoder_tag << "\n";
  if (o.head > 0) {
    auto store = read_store(o.store_path);
    const auto k = std::min<std::uint64_t>(o.head, store.count());
    out << "first " << k << " ids:\n";
    for (std::size_t i = 0; i < k; ++i) out << "  " << store.id(i) << "\n";
  }
  return kExitOk;
}

// "<id>,<v0>,<v1>,..." per line.
int cmd_store_pack(const Options& o, std::ostream& out, Logger& log) {
  const auto path = need_out(o);
  if (!o.input) throw Error(ErrorCode::MissingRequired, "--input");
  auto text = io::read_file(*o.input);
  std::vector<RawRecord> records;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::istringstream cells(line);
    RawRecord r;
    std::string cell;
    std::getline(cells, r.image_id, ',');
    while (std::getline(cells, cell, ',')) {
      try {
        std::size_t used = 0;
        r.vector.push_back(std::stof(cell, &used));
      } catch (const std::exception&) {
        throw Error(ErrorCode::MalformedLine, "line " + std::to_string(line_no));
      }
    }
    records.push_back(std::move(r));
  }
  auto summary = write_store(records, o.encoder, path, o.indexed ? kStoreVersionIndexed : kStoreVersionPlain);
  log.info("store.pack", {{"count", std::to_string(summary.count)}, {"dim", std::to_string(summary.dim)}});
  out << "wrote " << summary.count << " vectors of dim " << summary.dim << " to " << path.string() << "\n";
  return kExitOk;
}

int cmd_split_manifest(const Options& o, std::ostream& out) {
  const auto out_dir = need_out(o);
  if (!o.input) throw Error(ErrorCode::MissingRequired, "--input");
  auto all = parse_manifest(*o.input, o.dataset, Split::train);
  auto [train, val] = synthesize_split(all.entries, o.dataset);
  io::write_atomic(out_dir / "train.txt", serialize_manifest(train));
  io::write_atomic(out_dir / "val.txt", serialize_manifest(val));
  out << "train: " << train.size() << " val: " << val.size() << "\n";
  return kExitOk;
}

sim::SimilarityConfig sim_config_from(const Options& o, unsigned threads) {
  sim::SimilarityConfig cfg;
  cfg.max_instances_per_class = o.max_per_class;
  cfg.subsample_seed = o.subsample_seed;
  cfg.tolerance = o.tolerance;
  cfg.threads = threads;
  sim::validate(cfg);
  return cfg;
}

int cmd_sim(const Options& o, std::ostream& out, Logger& log, unsigned threads) {
  if (o.config) {
    auto cfg = load_config(*o.config);
    validate_paths(cfg);
    cfg.similarity.threads = threads;
    auto jobs = run_sim_batch(cfg, log);
    auto dir = cfg.paths.out_dir / "similarity";
    write_sim_batch(jobs, dir);
    out << jobs.size() << " similarity reports written to " << dir.string() << "\n";
    return kExitOk;
  }
  if (!o.store) throw Error(ErrorCode::MissingRequired, "--store");
  if (!o.manifest) throw Error(ErrorCode::MissingRequired, "--manifest");
  const auto out_path = need_out(o);
  auto cfg = sim_config_from(o, threads);
  std::optional<SubsetSpec> spec;
  if (o.subset) spec = load_spec(*o.subset);
  const std::string name = !o.dataset.empty() ? o.dataset
                           : spec             ? spec->dataset_name
                                              : std::filesystem::path(*o.manifest).stem().string();
  auto manifest = parse_manifest(*o.manifest, name, parse_split(o.split));
  auto store = read_store(*o.store);
  auto report = run_similarity(store, manifest, spec, cfg);
  const bool csv = o.format == "csv" || out_path.extension() == ".csv";
  io::write_atomic(out_path, csv ? sim::report_to_csv(report) : sim::report_to_json(report));
  if (o.csv_out) io::write_atomic(*o.csv_out, sim::report_to_csv(report));
  log.info("sim.done", {{"simss", io::format_double(report.dataset.simss)},
                        {"instances", std::to_string(report.dataset.instance_count)}});
  out << "SimSS(D) = " << io::format_double(report.dataset.simss) << "\n";
  return kExitOk;
}

int cmd_dcn(const Options& o, std::ostream& out) {
  const auto out_dir = need_out(o);
  auto records = bench::load_results(required(o.results, "--results"));
  auto table = bench::compute_dcn(records);
  auto written = bench::emit_report({&table, nullptr, nullptr, nullptr}, bench::parse_format(o.format), out_dir);
  out << table.rows.size() << " DCN rows written to " << written.front().string() << "\n";
  return kExitOk;
}

int cmd_rank(const Options& o, std::ostream& out) {
  const auto out_dir = need_out(o);
  auto records = bench::load_results(required(o.results, "--results"));
  auto rankings = all_rankings(records, o.bench_dataset);
  auto written =
      bench::emit_report({nullptr, &rankings, nullptr, nullptr}, bench::parse_format(o.format), out_dir);
  out << rankings.size() << " rankings written to " << written.front().string() << "\n";
  return kExitOk;
}

int cmd_curve(const Options& o, std::ostream& out) {
  const auto out_dir = need_out(o);
  auto records = bench::load_results(required(o.results, "--results"));
  std::optional<bench::Regime> regime;
  if (o.regime) regime = bench::parse_regime(*o.regime);
  auto curves = all_curves(records, o.bench_dataset, regime, o.model);
  auto written =
      bench::emit_report({nullptr, nullptr, &curves, nullptr}, bench::parse_format(o.format), out_dir);
  out << curves.size() << " curves written to " << written.front().string() << "\n";
  return kExitOk;
}

int cmd_corr(const Options& o, std::ostream& out) {
  const auto out_dir = need_out(o);
  auto records = bench::load_results(required(o.results, "--results"));
  auto sims = bench::load_simss(required(o.simss, "--simss"));
  auto regime = bench::parse_regime(o.regime.value_or("sub"));
  auto table = bench::compute_dcn(records);
  std::vector<bench::NamedCorrelation> corr(1);
  corr[0].name = "dcn_vs_simss";
  corr[0].regime = regime;
  corr[0].result = bench::correlate_dcn_simss(table, sims, regime, &corr[0].points);
  auto written = bench::emit_report({nullptr, nullptr, nullptr, &corr}, bench::parse_format(o.format), out_dir);
  out << "r = " << io::format_double(corr[0].result.r) << " over " << corr[0].result.n_points
      << " points, written to " << written.front().string() << "\n";
  return kExitOk;
}

int cmd_report(const Options& o, std::ostream& out, Logger& log, unsigned threads) {
  auto cfg = load_config(required(o.config, "--config"));
  validate_paths(cfg);
  cfg.similarity.threads = threads;
  const auto& out_dir = cfg.paths.out_dir;

  // Compute everything, then write.
  std::vector<SubsetSpec> specs;
  std::vector<SimJob> jobs;
  if (cfg.paths.manifest) {
    auto manifest = parse_manifest(*cfg.paths.manifest, cfg.dataset, cfg.split);
    specs = expand_plan(cfg.plan, manifest.class_universe);
    if (cfg.paths.store) jobs = run_sim_batch(cfg, log);
  }
  std::optional<bench::DcnTable> dcn;
  std::vector<bench::NamedRanking> rankings;
  std::vector<bench::NamedCurve> curves;
  std::vector<bench::NamedCorrelation> corr;
  std::vector<bench::ResultRecord> records;
  if (cfg.paths.results) {
    records = bench::load_results(*cfg.paths.results);
    dcn = bench::compute_dcn(records);
    if (!ranked_datasets(records).empty()) rankings = all_rankings(records, std::nullopt);
    bool seeded = std::any_of(records.begin(), records.end(), [](const auto& r) { return r.seed.has_value(); });
    if (seeded) curves = all_curves(records, std::nullopt, std::nullopt, std::nullopt);
  }

  auto sims = cfg.paths.simss ? bench::load_simss(*cfg.paths.simss) : simss_table(jobs);
  if (dcn && !sims.empty()) {
    bench::NamedCorrelation c;
    c.name = cfg.dataset + "_dcn_vs_simss";
    c.regime = cfg.regime;
    c.result = bench::correlate_dcn_simss(*dcn, sims, cfg.regime, &c.points);
    corr.push_back(std::move(c));
  }

  if (!specs.empty()) write_subset_specs(specs, out_dir / "subsets");
  if (!jobs.empty()) write_sim_batch(jobs, out_dir / "similarity");
  if (dcn) {
    bench::emit_report({&*dcn, rankings.empty() ? nullptr : &rankings, curves.empty() ? nullptr : &curves,
                        corr.empty() ? nullptr : &corr},
                       cfg.format, out_dir / "bench");
  }
  log.info("report.done", {{"subsets", std::to_string(specs.size())},
                           {"similarity_jobs", std::to_string(jobs.size())},
                           {"results", std::to_string(records.size())}});
  out << "report written to " << out_dir.string() << "\n";
  return kExitOk;
}

}  // namespace

std::vector<long long> parse_int_list(const std::string& text) {
  std::vector<long long> values;
  std::stringstream ss(text);
  std::string part;
  auto parse_one = [&](const std::string& s) -> long long {
    try {
      std::size_t used = 0;
      auto v = std::stoll(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidValue, "bad integer list '" + text + "'");
    }
  };
  while (std::getline(ss, part, ',')) {
    if (part.empty()) continue;
    auto dots = part.find("..");
    if (dots == std::string::npos) {
      values.push_back(parse_one(part));
    } else {
      auto lo = parse_one(part.substr(0, dots));
      auto hi = parse_one(part.substr(dots + 2));
      if (hi < lo) throw Error(ErrorCode::InvalidValue, "empty range '" + part + "'");
      for (auto v = lo; v <= hi; ++v) values.push_back(v);
    }
  }
  return values;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Few-class dataset difficulty and benchmark aggregation"};
  app.require_subcommand(0, 1);
  Options o;
  bool version = false;
  app.add_flag("--version", version, "Print tool and file-format versions");
  app.add_flag("-q,--quiet", o.quiet, "Only log errors");
  app.add_option("--threads", o.threads, "Worker threads (default: available parallelism)");

  auto* gen = app.add_subcommand("gen-subsets", "Write seeded few-class subset specs");
  gen->add_option("--dataset", o.dataset, "Dataset name");
  gen->add_option("--ncl", o.ncl, "Class counts, e.g. 2,3,4,5,10,100");
  gen->add_option("--seeds", o.seeds, "Seeds, e.g. 0..4");
  gen->add_option("--classes", o.classes, "Class universe is 0..N-1");
  gen->add_option("--manifest", o.manifest, "Take the class universe from a manifest");
  gen->add_option("--split", o.split, "Manifest split (train|val)");
  gen->add_option("--out", o.out, "Output directory");

  auto* store = app.add_subcommand("store", "Embedding store utilities");
  store->require_subcommand(1);
  auto* inspect = store->add_subcommand("inspect", "Print header fields and the first ids");
  inspect->add_option("path", o.store_path, "Store file")->required();
  inspect->add_option("--head", o.head, "Number of ids to list");
  auto* pack = store->add_subcommand("pack", "Build a store from '<id>,<v0>,<v1>,...' lines");
  pack->add_option("--input", o.input, "Text vectors");
  pack->add_option("--encoder", o.encoder, "Encoder tag");
  pack->add_flag("--indexed", o.indexed, "Write version 2 with the id footer");
  pack->add_option("--out", o.out, "Output store path");

  auto* split = app.add_subcommand("split-manifest", "Derive train/val manifests (id % 5 == 0 -> val)");
  split->add_option("--input", o.input, "Manifest listing every image in ID order");
  split->add_option("--dataset", o.dataset, "Dataset name");
  split->add_option("--out", o.out, "Output directory for train.txt and val.txt");

  auto* sim = app.add_subcommand("sim", "Compute similarity scores and SimSS");
  sim->add_option("--config", o.config, "Run every subset job of a config file");
  sim->add_option("--store", o.store, "Embedding store");
  sim->add_option("--manifest", o.manifest, "Dataset manifest");
  sim->add_option("--split", o.split, "Manifest split (train|val)");
  sim->add_option("--dataset", o.dataset, "Dataset name recorded in the report");
  sim->add_option("--subset", o.subset, "Subset spec file");
  sim->add_option("--max-per-class", o.max_per_class, "Subsample classes larger than K");
  sim->add_option("--subsample-seed", o.subsample_seed, "Seed for subsampling");
  sim->add_option("--tolerance", o.tolerance, "Degenerate denominator tolerance");
  sim->add_option("--format", o.format, "json|csv");
  sim->add_option("--csv", o.csv_out, "Also write the CSV report here");
  sim->add_option("--out", o.out, "Report path");

  std::vector<CLI::App*> bench_cmds;
  for (auto [name, help] : {std::pair{"dcn", "DCN table (max Top-1 per group)"},
                            std::pair{"rank", "Model rankings per dataset"},
                            std::pair{"curve", "Mean/std accuracy curves over N_CL"},
                            std::pair{"corr", "Pearson r between DCN and SimSS"}}) {
    auto* c = app.add_subcommand(name, help);
    c->add_option("--results", o.results, "Results CSV");
    c->add_option("--out", o.out, "Output directory");
    c->add_option("--format", o.format, "json|csv");
    bench_cmds.push_back(c);
  }
  bench_cmds[1]->add_option("--dataset", o.bench_dataset, "Only this dataset");
  bench_cmds[2]->add_option("--dataset", o.bench_dataset, "Only this dataset");
  bench_cmds[2]->add_option("--regime", o.regime, "full|sub");
  bench_cmds[2]->add_option("--model", o.model, "Series for one model (default: DCN)");
  bench_cmds[3]->add_option("--simss", o.simss, "SimSS table (similarity index.json)");
  bench_cmds[3]->add_option("--regime", o.regime, "full|sub (default sub)");

  auto* report = app.add_subcommand("report", "Run every configured pipeline from one config");
  report->add_option("--config", o.config, "Run configuration");

  Logger log(err, false);
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    log.error("usage", {{"message", e.what()}});
    return kExitConfig;
  }
  Logger logger(err, o.quiet);

  if (version) {
    out << "fca " << kVersion << "\n"
        << "embedstore: FCAE versions " << kStoreVersionPlain << "," << kStoreVersionIndexed
        << " (read), " << kStoreVersionPlain << "," << kStoreVersionIndexed << " (write)\n"
        << "manifest: text '<image_id> <class_id>'\n"
        << "subset spec: json\n"
        << "similarity report: json, csv\n"
        << "results: csv model,dataset,n_cl,seed,regime,top1\n";
    return kExitOk;
  }

  const unsigned threads = o.threads == 0 ? default_thread_count() : o.threads;
  const auto start = std::chrono::steady_clock::now();
  try {
    int rc = kExitConfig;
    if (gen->parsed()) rc = cmd_gen_subsets(o, out, logger);
    else if (inspect->parsed()) rc = cmd_store_inspect(o, out);
    else if (pack->parsed()) rc = cmd_store_pack(o, out, logger);
    else if (split->parsed()) rc = cmd_split_manifest(o, out);
    else if (sim->parsed()) rc = cmd_sim(o, out, logger, threads);
    else if (bench_cmds[0]->parsed()) rc = cmd_dcn(o, out);
    else if (bench_cmds[1]->parsed()) rc = cmd_rank(o, out);
    else if (bench_cmds[2]->parsed()) rc = cmd_curve(o, out);
    else if (bench_cmds[3]->parsed()) rc = cmd_corr(o, out);
    else if (report->parsed()) rc = cmd_report(o, out, logger, threads);
    else {
      out << app.help();
      return kExitConfig;
    }
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
    logger.info("done", {{"elapsed_ms", std::to_string(ms.count())}});
    return rc;
  } catch (const Error& e) {
    logger.error("failed", {{"error", std::string(e.name())}, {"detail", e.detail()}});
    return exit_code_for(e.category());
  } catch (const std::filesystem::filesystem_error& e) {
    logger.error("failed", {{"error", "IoError"}, {"detail", e.what()}});
    return kExitIo;
  } catch (const std::exception& e) {
    logger.error("failed", {{"error", "Internal"}, {"detail", e.what()}});
    return kExitCompute;
  }
}

}  // namespace fca::cli
