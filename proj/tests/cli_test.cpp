#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include <json.hpp>

#include "fca/cli.hpp"
#include "fca/config.hpp"
#include "fca/embedstore.hpp"
#include "fca/io.hpp"
#include "test_util.hpp"

using namespace fca;
using fca::testing::error_detail;
using fca::testing::error_of;
using fca::testing::TempDir;
namespace fs = std::filesystem;

namespace {

struct Run {
  int rc;
  std::string out, err;
};

Run fca_run(std::vector<std::string> args) {
  std::ostringstream out, err;
  int rc = cli::run(args, out, err);
  return {rc, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
  return out;
}

// 100 classes x 3 images, 8-d vectors clustered per class.
struct Fixture {
  TempDir dir;
  fs::path manifest = dir / "val.txt";
  fs::path store = dir / "emb.fcae";
  fs::path results = dir / "results.csv";

  Fixture() {
    std::mt19937_64 gen(17);
    std::normal_distribution<double> n(0.0, 1.0);
    std::string man;
    std::vector<RawRecord> recs;
    for (int c = 0; c < 100; ++c) {
      std::vector<double> center(8);
      for (auto& x : center) x = 2.0 * n(gen);
      for (int k = 0; k < 3; ++k) {
        RawRecord r;
        r.image_id = "img" + std::to_string(c * 3 + k) + ".jpeg";
        for (auto x : center) r.vector.push_back(static_cast<float>(x + n(gen)));
        man += r.image_id + " " + std::to_string(c) + "\n";
        recs.push_back(std::move(r));
      }
    }
    io::write_atomic(manifest, man);
    write_store(recs, "toy-encoder", store);

    std::string csv = "model,dataset,n_cl,seed,regime,top1\n";
    std::uniform_real_distribution<double> u(20.0, 99.0);
    for (int ncl : {2, 3, 4, 5, 10, 100})
      for (int s = 0; s < 5; ++s)
        for (const char* m : {"M1", "M2"}) {
          char line[96];
          std::snprintf(line, sizeof line, "%s,toy,%d,%d,sub,%.2f\n", m, ncl, s, u(gen));
          csv += line;
        }
    csv += "M1,toy,100,,full,70.00\nM2,toy,100,,full,75.00\n";
    io::write_atomic(results, csv);
  }

  fs::path config(const std::string& extra = "") {
    auto p = dir / "run.json";
    io::write_atomic(p, R"({"dataset": "toy", "paths": {"manifest": "val.txt", "store": "emb.fcae",
                            "results": "results.csv", "out_dir": "out"})" + extra + "}");
    return p;
  }
};

std::optional<std::string> no_env(std::string_view) { return std::nullopt; }

}  // namespace

TEST_CASE("config defaults and path resolution") {
  auto cfg = parse_config(R"({"dataset":"in1k","paths":{"out_dir":"o","store":"/abs/s.fcae"}})", "/base", no_env);
  CHECK(cfg.dataset == "in1k");
  CHECK(cfg.split == Split::val);
  CHECK(cfg.paths.out_dir == fs::path("/base/o"));
  CHECK(cfg.paths.store == fs::path("/abs/s.fcae"));
  CHECK(!cfg.paths.manifest);
  CHECK(cfg.plan.n_cl_list == std::vector<int>{2, 3, 4, 5, 10, 100});
  CHECK(cfg.plan.seeds.size() == 5);
  CHECK(!cfg.similarity.max_instances_per_class);
  CHECK(cfg.similarity.tolerance == 1e-12);
  CHECK(cfg.format == bench::Format::json);
  CHECK(cfg.regime == bench::Regime::sub);

  auto full = parse_config(R"({"dataset":"d","split":"train","paths":{"out_dir":"o"},
      "subsets":{"n_cl":[2,4],"seeds":[7]},
      "similarity":{"max_instances_per_class":50,"subsample_seed":3,"tolerance":1e-9},
      "report":{"format":"csv","regime":"full"}})", "", no_env);
  CHECK(full.split == Split::train);
  CHECK(full.plan.n_cl_list == std::vector<int>{2, 4});
  CHECK(full.plan.seeds == std::vector<std::uint64_t>{7});
  CHECK(full.similarity.max_instances_per_class == 50u);
  CHECK(full.similarity.subsample_seed == 3u);
  CHECK(full.format == bench::Format::csv);
  CHECK(full.regime == bench::Regime::full);
}

TEST_CASE("config errors") {
  CHECK(error_of([] { parse_config(R"({"dataset":"d","paths":{"out_dir":"o"},"subsets":{"n_clsses":[2]}})", "", no_env); }) ==
        ErrorCode::UnknownKey);
  CHECK(error_detail([] { parse_config(R"({"dataset":"d","paths":{"out_dir":"o"},"subsets":{"n_clsses":[2]}})", "", no_env); })
            .find("n_clsses") != std::string::npos);
  CHECK(error_of([] { parse_config(R"({"paths":{"out_dir":"o"}})", "", no_env); }) == ErrorCode::MissingRequired);
  CHECK(error_of([] { parse_config(R"({"dataset":"d","paths":{}})", "", no_env); }) == ErrorCode::MissingRequired);
  CHECK(error_of([] { parse_config(R"({"dataset":"d"})", "", no_env); }) == ErrorCode::MissingRequired);
  CHECK(error_of([] { parse_config(R"({"dataset":"d","paths":{"out_dir":"o"},"split":"test"})", "", no_env); }) ==
        ErrorCode::InvalidValue);
  CHECK(error_of([] { parse_config("{not json", "", no_env); }) == ErrorCode::InvalidValue);
}

TEST_CASE("environment overrides paths only") {
  auto env = [](std::string_view name) -> std::optional<std::string> {
    if (name == "FCA_STORE") return "/env/store.fcae";
    if (name == "FCA_OUT_DIR") return "/env/out";
    if (name == "FCA_DATASET") return "hijack";
    return std::nullopt;
  };
  auto cfg = parse_config(R"({"dataset":"d","paths":{"out_dir":"o","store":"s"}})", "/b", env);
  CHECK(cfg.paths.store == fs::path("/env/store.fcae"));
  CHECK(cfg.paths.out_dir == fs::path("/env/out"));
  CHECK(cfg.dataset == "d");
}

TEST_CASE("int lists") {
  CHECK(cli::parse_int_list("0..4") == std::vector<long long>{0, 1, 2, 3, 4});
  CHECK(cli::parse_int_list("2,3,10") == std::vector<long long>{2, 3, 10});
  CHECK(cli::parse_int_list("0..2,7") == std::vector<long long>{0, 1, 2, 7});
  CHECK(error_of([] { cli::parse_int_list("a"); }) == ErrorCode::InvalidValue);
}

TEST_CASE("gen-subsets is byte-identical across runs") {
  TempDir a, b;
  auto ra = fca_run({"-q", "gen-subsets", "--dataset", "in1k", "--classes", "1000", "--ncl", "2,3,4,5,10,100",
                     "--seeds", "0..4", "--out", a.path().string()});
  auto rb = fca_run({"-q", "gen-subsets", "--dataset", "in1k", "--classes", "1000", "--ncl", "2,3,4,5,10,100",
                     "--seeds", "0..4", "--out", b.path().string()});
  REQUIRE(ra.rc == 0);
  REQUIRE(rb.rc == 0);
  auto ta = tree(a.path());
  CHECK(ta.size() == 31);
  CHECK(ta == tree(b.path()));
  CHECK(ta.count("in1k_ncl100_seed4.json") == 1);

  auto bad = fca_run({"gen-subsets", "--dataset", "x", "--classes", "5", "--ncl", "6", "--seeds", "0",
                      "--out", a.path().string()});
  CHECK(bad.rc == cli::kExitConfig);
  CHECK(bad.err.find("NClOutOfRange") != std::string::npos);
}

TEST_CASE("flag errors exit 2 and write nothing") {
  TempDir t;
  auto r = fca_run({"sim", "--manifest", "m.txt", "--out", (t / "r.json").string()});
  CHECK(r.rc == cli::kExitConfig);
  CHECK(r.err.find("--store") != std::string::npos);
  CHECK(fs::is_empty(t.path()));
  CHECK(fca_run({"bogus-command"}).rc == cli::kExitConfig);
  CHECK(fca_run({"sim", "--no-such-flag"}).rc == cli::kExitConfig);
  CHECK(fca_run({"--version"}).rc == 0);
}

TEST_CASE("store inspect and data errors") {
  Fixture f;
  auto r = fca_run({"store", "inspect", f.store.string(), "--head", "2"});
  REQUIRE(r.rc == 0);
  CHECK(r.out.find("count: 300") != std::string::npos);
  CHECK(r.out.find("dim: 8") != std::string::npos);
  CHECK(r.out.find("encoder_tag: toy-encoder") != std::string::npos);
  CHECK(r.out.find("img0.jpeg") != std::string::npos);

  auto bytes = slurp(f.store);
  io::write_atomic(f.dir / "cut.fcae", bytes.substr(0, bytes.size() - 5));
  auto cut = fca_run({"sim", "--store", (f.dir / "cut.fcae").string(), "--manifest", f.manifest.string(),
                      "--out", (f.dir / "r.json").string()});
  CHECK(cut.rc == cli::kExitData);
  CHECK(cut.err.find("TruncatedFile") != std::string::npos);
  CHECK(!fs::exists(f.dir / "r.json"));

  auto missing = fca_run({"store", "inspect", (f.dir / "absent.fcae").string()});
  CHECK(missing.rc == cli::kExitIo);
}

TEST_CASE("single similarity run") {
  Fixture f;
  auto spec_dir = f.dir / "specs";
  REQUIRE(fca_run({"-q", "gen-subsets", "--dataset", "toy", "--manifest", f.manifest.string(), "--ncl", "5",
                   "--seeds", "1", "--out", spec_dir.string()})
              .rc == 0);
  auto out = f.dir / "r.json";
  auto r = fca_run({"-q", "sim", "--store", f.store.string(), "--manifest", f.manifest.string(), "--subset",
                    (spec_dir / "toy_ncl5_seed1.json").string(), "--out", out.string(), "--csv",
                    (f.dir / "r.csv").string()});
  REQUIRE(r.rc == 0);
  auto j = nlohmann::json::parse(slurp(out));
  CHECK(j["dataset"]["classes"] == 5);
  CHECK(j["dataset"]["instances"] == 15);
  CHECK(j["subset"]["seed"] == 1);
  CHECK(j["encoder_tag"] == "toy-encoder");
  CHECK(fs::exists(f.dir / "r.csv"));
}

TEST_CASE("batch similarity, correlation and full report") {
  Fixture f;
  auto cfg = f.config();
  auto r = fca_run({"-q", "sim", "--config", cfg.string()});
  REQUIRE(r.rc == 0);
  auto sim_dir = f.dir / "out" / "similarity";
  auto files = tree(sim_dir);
  CHECK(files.size() == 31);
  auto index = nlohmann::json::parse(files.at("index.json"));
  REQUIRE(index["entries"].size() == 30);
  CHECK(index["entries"][0]["n_cl"] == 2);
  CHECK(files.count(index["entries"][29]["report"].get<std::string>()) == 1);

  auto corr = fca_run({"-q", "corr", "--results", f.results.string(), "--simss", (sim_dir / "index.json").string(),
                       "--out", (f.dir / "corr").string(), "--format", "csv"});
  CHECK(corr.rc == 0);
  CHECK(corr.out.find("over 30 points") != std::string::npos);
  CHECK(fs::exists(f.dir / "corr" / "correlations.csv"));

  REQUIRE(fca_run({"-q", "dcn", "--results", f.results.string(), "--out", (f.dir / "dcn").string()}).rc == 0);
  CHECK(fs::exists(f.dir / "dcn" / "dcn.json"));
  REQUIRE(fca_run({"-q", "rank", "--results", f.results.string(), "--out", (f.dir / "rank").string()}).rc == 0);
  REQUIRE(fca_run({"-q", "curve", "--results", f.results.string(), "--out", (f.dir / "curve").string()}).rc == 0);

  // the whole pipeline twice: identical trees
  REQUIRE(fca_run({"-q", "report", "--config", cfg.string()}).rc == 0);
  auto first = tree(f.dir / "out");
  CHECK(first.count("subsets/index.json") == 1);
  CHECK(first.count("bench/correlations.json") == 1);
  REQUIRE(fca_run({"-q", "report", "--config", cfg.string()}).rc == 0);
  CHECK(tree(f.dir / "out") == first);
  CHECK(first.at("similarity/index.json") == files.at("index.json"));
}

TEST_CASE("undefined scores exit 4") {
  Fixture f;
  auto one = f.dir / "one.txt";
  io::write_atomic(one, "img0.jpeg 0\nimg1.jpeg 0\n");
  auto r = fca_run({"sim", "--store", f.store.string(), "--manifest", one.string(), "--out",
                    (f.dir / "r.json").string()});
  CHECK(r.rc == cli::kExitCompute);
  CHECK(r.err.find("TooFewClasses") != std::string::npos);
}

TEST_CASE("report writes nothing when the join fails") {
  Fixture f;
  io::write_atomic(f.results, "model,dataset,n_cl,seed,regime,top1\nM1,toy,2,0,sub,50\nM1,toy,7,0,sub,60\n");
  auto r = fca_run({"-q", "report", "--config", f.config().string()});
  CHECK(r.rc == cli::kExitCompute);
  CHECK(r.err.find("JoinMiss") != std::string::npos);
  CHECK(!fs::exists(f.dir / "out"));
}
