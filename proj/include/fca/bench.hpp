#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fca::bench {

enum class Regime { full, sub };

std::string_view to_string(Regime regime);
Regime parse_regime(std::string_view text);

// One Top-1 accuracy (percent) of one trained model on one (sub)dataset.
struct ResultRecord {
  std::string model;
  std::string dataset;
  int n_cl = 0;
  std::optional<std::int64_t> seed;  // empty for runs on the original class set
  Regime regime = Regime::full;
  double top1 = 0.0;
};

struct GroupKey {
  std::string dataset;
  int n_cl = 0;
  std::optional<std::int64_t> seed;
  Regime regime = Regime::full;

  friend auto operator<=>(const GroupKey&, const GroupKey&) = default;
  friend bool operator==(const GroupKey&, const GroupKey&) = default;
};

std::string to_string(const GroupKey& key);

// Parses the results CSV (header model,dataset,n_cl,seed,regime,top1). An
// empty seed cell or "null" means no seed.
std::vector<ResultRecord> parse_results(std::string_view text);
std::vector<ResultRecord> load_results(const std::filesystem::path& path);

struct DcnRow {
  GroupKey key;
  double dcn = 0.0;
  std::string best_model;
  bool tie = false;  // another model matched dcn; best_model is the smallest name
  std::optional<std::string> runner_up;
  std::optional<double> runner_up_top1;
  std::size_t models = 0;
};

struct DcnTable {
  std::vector<DcnRow> rows;  // ascending key

  const DcnRow* find(const GroupKey& key) const;
};

DcnTable compute_dcn(const std::vector<ResultRecord>& records);

struct Rank {
  std::string model;
  double top1 = 0.0;
  int rank = 0;
  bool tied = false;
};

// Competition ranking ("1224") of models on one dataset's original-class
// records (regime full, no seed), best first, ties by model name.
std::vector<Rank> rank_models(const std::vector<ResultRecord>& records, std::string_view dataset,
                              const std::vector<std::string>& expected_models = {});

struct CurvePoint {
  int n_cl = 0;
  double mean = 0.0;
  double std = 0.0;  // population
  std::size_t n_seeds = 0;
  double min = 0.0;
  double max = 0.0;
};

// Per-n_cl mean and population std across seeds of one model's top1, or of
// the per-seed DCN when `model` is empty.
std::vector<CurvePoint> accuracy_curve(const std::vector<ResultRecord>& records,
                                       std::string_view dataset, Regime regime,
                                       std::optional<std::string> model = std::nullopt);

struct CorrelationResult {
  double r = 0.0;
  std::size_t n_points = 0;
  std::string x_label;
  std::string y_label;
};

CorrelationResult pearson(const std::vector<double>& xs, const std::vector<double>& ys,
                          std::string x_label = "x", std::string y_label = "y");

struct SimssKey {
  std::string dataset;
  int n_cl = 0;
  std::optional<std::int64_t> seed;

  friend auto operator<=>(const SimssKey&, const SimssKey&) = default;
  friend bool operator==(const SimssKey&, const SimssKey&) = default;
};

using SimssTable = std::map<SimssKey, double>;

// Reads {"entries":[{"dataset","n_cl","seed","simss"}, ...]}.
SimssTable parse_simss(std::string_view json_text);
SimssTable load_simss(const std::filesystem::path& path);
std::string serialize_simss(const SimssTable& table);

struct JoinedPoint {
  SimssKey key;
  double simss = 0.0;
  double dcn = 0.0;
};

// Joins DCN rows of `regime` with SimSS values on (dataset, n_cl, seed); x is
// SimSS, y is DCN.
CorrelationResult correlate_dcn_simss(const DcnTable& dcn, const SimssTable& sims, Regime regime,
                                      std::vector<JoinedPoint>* joined = nullptr);

enum class Format { csv, json };
Format parse_format(std::string_view text);

struct NamedRanking {
  std::string dataset;
  std::vector<Rank> ranks;
};

struct NamedCurve {
  std::string dataset;
  Regime regime = Regime::full;
  std::string series;  // model name or "DCN"
  std::vector<CurvePoint> points;
};

struct NamedCorrelation {
  std::string name;
  Regime regime = Regime::sub;
  CorrelationResult result;
  std::vector<JoinedPoint> points;
};

// Rendered file contents; all rows sorted and numbers formatted
// deterministically.
std::string render_dcn(const DcnTable& table, Format format);
std::string render_rankings(const std::vector<NamedRanking>& rankings, Format format);
std::string render_curves(const std::vector<NamedCurve>& curves, Format format);
std::string render_correlations(const std::vector<NamedCorrelation>& correlations, Format format);

struct ReportTables {
  const DcnTable* dcn = nullptr;
  const std::vector<NamedRanking>* rankings = nullptr;
  const std::vector<NamedCurve>* curves = nullptr;
  const std::vector<NamedCorrelation>* correlations = nullptr;
};

// Writes dcn/rankings/curves/correlations files for the tables present.
std::vector<std::filesystem::path> emit_report(const ReportTables& tables, Format format,
                                               const std::filesystem::path& out_dir);

}  // namespace fca::bench
