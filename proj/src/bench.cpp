#include "fca/bench.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include <json.hpp>

#include "fca/error.hpp"
#include "fca/io.hpp"

namespace fca::bench {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(trim(line.substr(start)));
      return cells;
    }
    cells.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

std::string seed_text(const std::optional<std::int64_t>& seed) {
  return seed ? std::to_string(*seed) : std::string();
}

nlohmann::ordered_json seed_json(const std::optional<std::int64_t>& seed) {
  return seed ? nlohmann::ordered_json(*seed) : nlohmann::ordered_json(nullptr);
}

std::string csv_double(double v) { return io::format_double(v); }

}  // namespace

std::string_view to_string(Regime regime) { return regime == Regime::full ? "full" : "sub"; }

Regime parse_regime(std::string_view text) {
  if (text == "full") return Regime::full;
  if (text == "sub") return Regime::sub;
  throw Error(ErrorCode::InvalidValue, "regime must be full or sub, got '" + std::string(text) + "'");
}

std::string to_string(const GroupKey& key) {
  return key.dataset + "/ncl" + std::to_string(key.n_cl) + "/seed" +
         (key.seed ? std::to_string(*key.seed) : std::string("-")) + "/" +
         std::string(to_string(key.regime));
}

std::vector<ResultRecord> parse_results(std::string_view text) {
  std::vector<ResultRecord> records;
  std::set<std::pair<std::string, GroupKey>> keys;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = trim(text.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    auto cells = split_csv(line);
    if (!header_seen) {
      static const std::vector<std::string_view> expected{"model", "dataset", "n_cl",
                                                          "seed",  "regime",  "top1"};
      if (cells != expected) throw Error(ErrorCode::MalformedRow, "line " + std::to_string(line_no) + ": bad header");
      header_seen = true;
      continue;
    }
    auto malformed = [&](const std::string& why) {
      return Error(ErrorCode::MalformedRow, "line " + std::to_string(line_no) + ": " + why);
    };
    if (cells.size() != 6) throw malformed("expected 6 cells");
    ResultRecord r;
    r.model = std::string(cells[0]);
    r.dataset = std::string(cells[1]);
    if (r.model.empty() || r.dataset.empty()) throw malformed("empty model or dataset");
    if (!parse_number(cells[2], r.n_cl) || r.n_cl < 1) throw malformed("bad n_cl");
    if (!cells[3].empty() && cells[3] != "null") {
      std::int64_t seed = 0;
      if (!parse_number(cells[3], seed) || seed < 0) throw malformed("bad seed");
      r.seed = seed;
    }
    try {
      r.regime = parse_regime(cells[4]);
    } catch (const Error&) {
      throw malformed("bad regime");
    }
    if (!parse_number(cells[5], r.top1) || !std::isfinite(r.top1)) throw malformed("bad top1");
    if (r.top1 < 0.0 || r.top1 > 100.0) {
      throw Error(ErrorCode::Top1OutOfRange, "line " + std::to_string(line_no) + ": " + std::string(cells[5]));
    }
    GroupKey key{r.dataset, r.n_cl, r.seed, r.regime};
    if (!keys.emplace(r.model, key).second) {
      throw Error(ErrorCode::DuplicateKey, r.model + "@" + to_string(key));
    }
    records.push_back(std::move(r));
  }
  if (!header_seen) throw Error(ErrorCode::MalformedRow, "missing header");
  return records;
}

std::vector<ResultRecord> load_results(const std::filesystem::path& path) {
  return parse_results(io::read_file(path));
}

const DcnRow* DcnTable::find(const GroupKey& key) const {
  auto it = std::lower_bound(rows.begin(), rows.end(), key,
                             [](const DcnRow& row, const GroupKey& k) { return row.key < k; });
  return (it != rows.end() && it->key == key) ? &*it : nullptr;
}

DcnTable compute_dcn(const std::vector<ResultRecord>& records) {
  std::map<GroupKey, std::vector<const ResultRecord*>> groups;
  for (const auto& r : records) groups[{r.dataset, r.n_cl, r.seed, r.regime}].push_back(&r);

  DcnTable table;
  for (auto& [key, members] : groups) {
    if (members.empty()) throw Error(ErrorCode::EmptyGroup, to_string(key));
    std::sort(members.begin(), members.end(), [](const ResultRecord* a, const ResultRecord* b) {
      if (a->top1 != b->top1) return a->top1 > b->top1;
      return a->model < b->model;
    });
    DcnRow row;
    row.key = key;
    row.dcn = members[0]->top1;
    row.best_model = members[0]->model;
    row.models = members.size();
    if (members.size() > 1) {
      row.tie = members[1]->top1 == row.dcn;
      row.runner_up = members[1]->model;
      row.runner_up_top1 = members[1]->top1;
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::vector<Rank> rank_models(const std::vector<ResultRecord>& records, std::string_view dataset,
                              const std::vector<std::string>& expected_models) {
  std::set<std::string> expected(expected_models.begin(), expected_models.end());
  if (expected.empty()) {
    for (const auto& r : records) expected.insert(r.model);
  }
  // Original-class runs: regime full, no seed, largest n_cl.
  int n_cl = 0;
  for (const auto& r : records) {
    if (r.dataset == dataset && r.regime == Regime::full && !r.seed) n_cl = std::max(n_cl, r.n_cl);
  }
  std::vector<Rank> ranks;
  std::set<std::string> present;
  for (const auto& r : records) {
    if (r.dataset == dataset && r.regime == Regime::full && !r.seed && r.n_cl == n_cl) {
      ranks.push_back({r.model, r.top1, 0, false});
      present.insert(r.model);
    }
  }
  std::string missing;
  for (const auto& m : expected) {
    if (!present.contains(m)) missing += (missing.empty() ? "" : ",") + m;
  }
  if (!missing.empty()) throw Error(ErrorCode::MissingModel, std::string(dataset) + ": " + missing);

  std::sort(ranks.begin(), ranks.end(), [](const Rank& a, const Rank& b) {
    if (a.top1 != b.top1) return a.top1 > b.top1;
    return a.model < b.model;
  });
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    if (i > 0 && ranks[i].top1 == ranks[i - 1].top1) {
      ranks[i].rank = ranks[i - 1].rank;
      ranks[i].tied = ranks[i - 1].tied = true;
    } else {
      ranks[i].rank = static_cast<int>(i) + 1;
    }
  }
  return ranks;
}

std::vector<CurvePoint> accuracy_curve(const std::vector<ResultRecord>& records,
                                       std::string_view dataset, Regime regime,
                                       std::optional<std::string> model) {
  // n_cl -> seed -> value
  std::map<int, std::map<std::optional<std::int64_t>, double>> values;
  std::set<int> seen_ncl;
  for (const auto& r : records) {
    if (r.dataset != dataset || r.regime != regime) continue;
    seen_ncl.insert(r.n_cl);
    if (model && r.model != *model) continue;
    auto [it, inserted] = values[r.n_cl].emplace(r.seed, r.top1);
    if (!inserted && !model) it->second = std::max(it->second, r.top1);
  }
  if (seen_ncl.empty()) {
    throw Error(ErrorCode::NoData, std::string(dataset) + "/" + std::string(to_string(regime)));
  }
  std::vector<CurvePoint> curve;
  for (int n : seen_ncl) {
    auto it = values.find(n);
    if (it == values.end() || it->second.empty()) {
      throw Error(ErrorCode::NoData, "n_cl=" + std::to_string(n));
    }
    std::vector<double> xs;
    for (const auto& [_, v] : it->second) xs.push_back(v);
    CurvePoint p;
    p.n_cl = n;
    p.n_seeds = xs.size();
    p.min = *std::min_element(xs.begin(), xs.end());
    p.max = *std::max_element(xs.begin(), xs.end());
    if (p.min == p.max) {
      p.mean = p.min;
      p.std = 0.0;
    } else {
      double sum = 0.0;
      for (double x : xs) sum += x;
      p.mean = std::clamp(sum / static_cast<double>(xs.size()), p.min, p.max);
      double sq = 0.0;
      for (double x : xs) sq += (x - p.mean) * (x - p.mean);
      p.std = std::sqrt(sq / static_cast<double>(xs.size()));
    }
    curve.push_back(p);
  }
  return curve;
}

CorrelationResult pearson(const std::vector<double>& xs, const std::vector<double>& ys,
                          std::string x_label, std::string y_label) {
  if (xs.size() != ys.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(xs.size()) + " vs " + std::to_string(ys.size()));
  }
  if (xs.size() < 2) throw Error(ErrorCode::LengthMismatch, "need at least 2 points");
  const auto n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0) throw Error(ErrorCode::ConstantSequence, x_label);
  if (syy == 0.0) throw Error(ErrorCode::ConstantSequence, y_label);
  CorrelationResult out;
  out.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  out.n_points = xs.size();
  out.x_label = std::move(x_label);
  out.y_label = std::move(y_label);
  return out;
}

SimssTable parse_simss(std::string_view json_text) {
  SimssTable table;
  try {
    auto j = nlohmann::json::parse(json_text);
    for (const auto& e : j.at("entries")) {
      SimssKey key;
      key.dataset = e.at("dataset").get<std::string>();
      key.n_cl = e.at("n_cl").get<int>();
      if (e.contains("seed") && !e.at("seed").is_null()) key.seed = e.at("seed").get<std::int64_t>();
      auto v = e.at("simss").get<double>();
      if (!table.emplace(key, v).second) {
        throw Error(ErrorCode::DuplicateKey, key.dataset + "/ncl" + std::to_string(key.n_cl));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidValue, std::string("simss table: ") + e.what());
  }
  return table;
}

SimssTable load_simss(const std::filesystem::path& path) { return parse_simss(io::read_file(path)); }

std::string serialize_simss(const SimssTable& table) {
  nlohmann::ordered_json entries = nlohmann::ordered_json::array();
  for (const auto& [key, v] : table) {
    nlohmann::ordered_json e;
    e["dataset"] = key.dataset;
    e["n_cl"] = key.n_cl;
    e["seed"] = seed_json(key.seed);
    e["simss"] = v;
    entries.push_back(std::move(e));
  }
  nlohmann::ordered_json doc;
  doc["entries"] = std::move(entries);
  return doc.dump(2) + "\n";
}

CorrelationResult correlate_dcn_simss(const DcnTable& dcn, const SimssTable& sims, Regime regime,
                                      std::vector<JoinedPoint>* joined) {
  std::vector<double> xs, ys;
  std::vector<JoinedPoint> points;
  std::string misses;
  for (const auto& row : dcn.rows) {
    if (row.key.regime != regime) continue;
    SimssKey key{row.key.dataset, row.key.n_cl, row.key.seed};
    auto it = sims.find(key);
    if (it == sims.end()) {
      misses += (misses.empty() ? "" : ";") + key.dataset + "/ncl" + std::to_string(key.n_cl) +
                "/seed" + (key.seed ? std::to_string(*key.seed) : std::string("-"));
      continue;
    }
    xs.push_back(it->second);
    ys.push_back(row.dcn);
    points.push_back({key, it->second, row.dcn});
  }
  if (!misses.empty()) throw Error(ErrorCode::JoinMiss, misses);
  auto result = pearson(xs, ys, "simss", "dcn_" + std::string(to_string(regime)));
  if (joined) *joined = std::move(points);
  return result;
}

Format parse_format(std::string_view text) {
  if (text == "csv") return Format::csv;
  if (text == "json") return Format::json;
  throw Error(ErrorCode::InvalidValue, "format must be csv or json, got '" + std::string(text) + "'");
}

std::string render_dcn(const DcnTable& table, Format format) {
  if (format == Format::csv) {
    std::string out = "dataset,n_cl,seed,regime,dcn,best_model,tie,runner_up,runner_up_top1,models\n";
    for (const auto& r : table.rows) {
      out += r.key.dataset + "," + std::to_string(r.key.n_cl) + "," + seed_text(r.key.seed) + "," +
             std::string(to_string(r.key.regime)) + "," + io::format_percent(r.dcn) + "," +
             r.best_model + "," + (r.tie ? "true" : "false") + "," + r.runner_up.value_or("") + "," +
             (r.runner_up_top1 ? io::format_percent(*r.runner_up_top1) : std::string()) + "," +
             std::to_string(r.models) + "\n";
    }
    return out;
  }
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& r : table.rows) {
    nlohmann::ordered_json j;
    j["dataset"] = r.key.dataset;
    j["n_cl"] = r.key.n_cl;
    j["seed"] = seed_json(r.key.seed);
    j["regime"] = to_string(r.key.regime);
    j["dcn"] = r.dcn;
    j["best_model"] = r.best_model;
    j["tie"] = r.tie;
    j["runner_up"] = r.runner_up ? nlohmann::ordered_json(*r.runner_up) : nlohmann::ordered_json(nullptr);
    j["runner_up_top1"] =
        r.runner_up_top1 ? nlohmann::ordered_json(*r.runner_up_top1) : nlohmann::ordered_json(nullptr);
    j["models"] = r.models;
    rows.push_back(std::move(j));
  }
  return nlohmann::ordered_json{{"dcn", rows}}.dump(2) + "\n";
}

std::string render_rankings(const std::vector<NamedRanking>& rankings, Format format) {
  auto sorted = rankings;
  std::sort(sorted.begin(), sorted.end(),
            [](const NamedRanking& a, const NamedRanking& b) { return a.dataset < b.dataset; });
  if (format == Format::csv) {
    std::string out = "dataset,rank,model,top1,tied\n";
    for (const auto& nr : sorted) {
      for (const auto& r : nr.ranks) {
        out += nr.dataset + "," + std::to_string(r.rank) + "," + r.model + "," +
               io::format_percent(r.top1) + "," + (r.tied ? "true" : "false") + "\n";
      }
    }
    return out;
  }
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const auto& nr : sorted) {
    nlohmann::ordered_json ranks = nlohmann::ordered_json::array();
    for (const auto& r : nr.ranks) {
      ranks.push_back({{"rank", r.rank}, {"model", r.model}, {"top1", r.top1}, {"tied", r.tied}});
    }
    doc.push_back({{"dataset", nr.dataset}, {"ranks", ranks}});
  }
  return nlohmann::ordered_json{{"rankings", doc}}.dump(2) + "\n";
}

std::string render_curves(const std::vector<NamedCurve>& curves, Format format) {
  auto sorted = curves;
  std::sort(sorted.begin(), sorted.end(), [](const NamedCurve& a, const NamedCurve& b) {
    return std::tie(a.dataset, a.regime, a.series) < std::tie(b.dataset, b.regime, b.series);
  });
  if (format == Format::csv) {
    std::string out = "dataset,regime,series,n_cl,mean,std,n_seeds,min,max\n";
    for (const auto& c : sorted) {
      for (const auto& p : c.points) {
        out += c.dataset + "," + std::string(to_string(c.regime)) + "," + c.series + "," +
               std::to_string(p.n_cl) + "," + csv_double(p.mean) + "," + csv_double(p.std) + "," +
               std::to_string(p.n_seeds) + "," + csv_double(p.min) + "," + csv_double(p.max) + "\n";
      }
    }
    return out;
  }
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const auto& c : sorted) {
    nlohmann::ordered_json pts = nlohmann::ordered_json::array();
    for (const auto& p : c.points) {
      pts.push_back({{"n_cl", p.n_cl}, {"mean", p.mean}, {"std", p.std}, {"n_seeds", p.n_seeds},
                     {"min", p.min}, {"max", p.max}});
    }
    doc.push_back({{"dataset", c.dataset}, {"regime", to_string(c.regime)}, {"series", c.series},
                   {"points", pts}});
  }
  return nlohmann::ordered_json{{"curves", doc}}.dump(2) + "\n";
}

std::string render_correlations(const std::vector<NamedCorrelation>& correlations, Format format) {
  auto sorted = correlations;
  std::sort(sorted.begin(), sorted.end(), [](const NamedCorrelation& a, const NamedCorrelation& b) {
    return std::tie(a.name, a.regime) < std::tie(b.name, b.regime);
  });
  if (format == Format::csv) {
    std::string out = "name,regime,r,n_points,x_label,y_label\n";
    for (const auto& c : sorted) {
      out += c.name + "," + std::string(to_string(c.regime)) + "," + csv_double(c.result.r) + "," +
             std::to_string(c.result.n_points) + "," + c.result.x_label + "," + c.result.y_label + "\n";
    }
    return out;
  }
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const auto& c : sorted) {
    nlohmann::ordered_json pts = nlohmann::ordered_json::array();
    for (const auto& p : c.points) {
      pts.push_back({{"dataset", p.key.dataset}, {"n_cl", p.key.n_cl}, {"seed", seed_json(p.key.seed)},
                     {"simss", p.simss}, {"dcn", p.dcn}});
    }
    doc.push_back({{"name", c.name}, {"regime", to_string(c.regime)}, {"r", c.result.r},
                   {"n_points", c.result.n_points}, {"x_label", c.result.x_label},
                   {"y_label", c.result.y_label}, {"points", pts}});
  }
  return nlohmann::ordered_json{{"correlations", doc}}.dump(2) + "\n";
}

namespace {
std::string render_points_csv(const std::vector<NamedCorrelation>& correlations) {
  auto sorted = correlations;
  std::sort(sorted.begin(), sorted.end(), [](const NamedCorrelation& a, const NamedCorrelation& b) {
    return std::tie(a.name, a.regime) < std::tie(b.name, b.regime);
  });
  std::string out = "name,regime,dataset,n_cl,seed,simss,dcn\n";
  for (const auto& c : sorted) {
    for (const auto& p : c.points) {
      out += c.name + "," + std::string(to_string(c.regime)) + "," + p.key.dataset + "," +
             std::to_string(p.key.n_cl) + "," + seed_text(p.key.seed) + "," + csv_double(p.simss) +
             "," + csv_double(p.dcn) + "\n";
    }
  }
  return out;
}
}  // namespace

std::vector<std::filesystem::path> emit_report(const ReportTables& tables, Format format,
                                               const std::filesystem::path& out_dir) {
  const std::string ext = format == Format::csv ? ".csv" : ".json";
  // Render everything first so a failure leaves no files behind.
  std::vector<std::pair<std::filesystem::path, std::string>> files;
  if (tables.dcn) files.emplace_back(out_dir / ("dcn" + ext), render_dcn(*tables.dcn, format));
  if (tables.rankings) {
    files.emplace_back(out_dir / ("rankings" + ext), render_rankings(*tables.rankings, format));
  }
  if (tables.curves) files.emplace_back(out_dir / ("curves" + ext), render_curves(*tables.curves, format));
  if (tables.correlations) {
    files.emplace_back(out_dir / ("correlations" + ext),
                       render_correlations(*tables.correlations, format));
    if (format == Format::csv) {
      files.emplace_back(out_dir / "correlation_points.csv", render_points_csv(*tables.correlations));
    }
  }
  std::vector<std::filesystem::path> written;
  for (const auto& [path, contents] : files) {
    io::write_atomic(path, contents);
    written.push_back(path);
  }
  return written;
}

}  // namespace fca::bench
