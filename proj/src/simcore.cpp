#include "fca/simcore.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "fca/error.hpp"
#include "fca/io.hpp"
#include "fca/parallel.hpp"
#include "fca/rng.hpp"

namespace fca::sim {

namespace {

inline double to_similarity(double dot) { return std::clamp(0.5 * dot + 0.5, 0.0, 1.0); }

double dot(std::span<const float> a, std::span<const float> b) {
  double acc = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) acc += static_cast<double>(a[d]) * b[d];
  return acc;
}

std::vector<std::size_t> class_rows(const ClassRange& c) {
  std::vector<std::size_t> rows(c.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = c.begin + i;
  return rows;
}

std::size_t require_row(const EmbeddingView& view, std::string_view image_id) {
  auto row = view.row_of(image_id);
  if (!row) throw Error(ErrorCode::UnknownInstance, std::string(image_id));
  return *row;
}

void require_classes(const EmbeddingView& view) {
  if (view.class_count() < 2) {
    throw Error(ErrorCode::TooFewClasses, std::to_string(view.class_count()) + " class(es) in view");
  }
}

// Column-major copy of the view matrix in double: xt[d * rows + r].
std::vector<double> transpose(const EmbeddingView& view) {
  const std::size_t n = view.rows(), dim = view.dim();
  std::vector<double> xt(n * dim);
  auto data = view.data();
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t d = 0; d < dim; ++d) xt[d * n + r] = data[r * dim + d];
  }
  return xt;
}

// Per-row sums of similarity to every class, self excluded:
// out[(r - row_begin) * k + slot] = sum over j in class slot, j != r, of sim(r, j).
//
// Dot products are formed tile by tile (rows x cols), each accumulating over
// the embedding dimension in index order. The per-tile partial sum for every
// (row, class) is then folded into `out` in ascending tile order, so a row's
// result depends only on the tile shape, never on which worker computed it.
class ClassSumKernel {
public:
  ClassSumKernel(const EmbeddingView& view, const SimilarityConfig& config)
      : view_(view),
        xt_(transpose(view)),
        tile_rows_(std::max<std::size_t>(1, config.tile_rows)),
        tile_cols_(std::max<std::size_t>(1, config.tile_cols)),
        threads_(config.threads) {}

  std::vector<double> run(std::size_t row_begin, std::size_t row_end) const {
    const std::size_t k = view_.class_count();
    std::vector<double> out((row_end - row_begin) * k, 0.0);
    const std::size_t blocks = (row_end - row_begin + tile_rows_ - 1) / tile_rows_;
    parallel_for(blocks, threads_, [&](std::size_t b) {
      const std::size_t r0 = row_begin + b * tile_rows_;
      const std::size_t r1 = std::min(row_end, r0 + tile_rows_);
      block(r0, r1, std::span<double>(out.data() + (r0 - row_begin) * k, (r1 - r0) * k));
    });
    return out;
  }

private:
  void block(std::size_t r0, std::size_t r1, std::span<double> out) const {
    const std::size_t n = view_.rows(), dim = view_.dim(), k = view_.class_count();
    const auto& classes = view_.classes();
    auto data = view_.data();
    std::vector<double> acc((r1 - r0) * tile_cols_);

    std::size_t first_slot = 0;
    for (std::size_t c0 = 0; c0 < n; c0 += tile_cols_) {
      const std::size_t c1 = std::min(n, c0 + tile_cols_);
      const std::size_t w = c1 - c0;
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t d = 0; d < dim; ++d) {
        const double* col = xt_.data() + d * n + c0;
        for (std::size_t r = r0; r < r1; ++r) {
          const double x = data[r * dim + d];
          double* a = acc.data() + (r - r0) * tile_cols_;
          for (std::size_t c = 0; c < w; ++c) a[c] += x * col[c];
        }
      }
      while (classes[first_slot].end <= c0) ++first_slot;
      for (std::size_t r = r0; r < r1; ++r) {
        const double* a = acc.data() + (r - r0) * tile_cols_;
        double* row_out = out.data() + (r - r0) * k;
        for (std::size_t slot = first_slot; slot < k && classes[slot].begin < c1; ++slot) {
          const std::size_t s0 = std::max(classes[slot].begin, c0);
          const std::size_t s1 = std::min(classes[slot].end, c1);
          double partial = 0.0;
          for (std::size_t c = s0; c < s1; ++c) {
            if (c != r) partial += to_similarity(a[c - c0]);
          }
          row_out[slot] += partial;
        }
      }
    }
  }

  const EmbeddingView& view_;
  std::vector<double> xt_;
  std::size_t tile_rows_;
  std::size_t tile_cols_;
  unsigned threads_;
};

InstanceScore score_instance(const EmbeddingView& view, std::size_t row,
                             std::span<const double> sums, double tolerance) {
  const auto& classes = view.classes();
  const std::size_t own = view.class_slot_of_row(row);
  InstanceScore s;
  s.image_id = view.ids()[row];
  s.class_id = classes[own].class_id;

  bool have_nearest = false;
  for (std::size_t slot = 0; slot < classes.size(); ++slot) {
    if (slot == own) continue;
    const double mean = sums[slot] / static_cast<double>(classes[slot].size());
    if (!have_nearest || mean > s.s_beta_prime) {
      s.s_beta_prime = mean;
      s.nearest_class = classes[slot].class_id;
      have_nearest = true;
    }
  }

  const std::size_t own_size = classes[own].size();
  if (own_size < 2) return s;  // singleton: S_alpha undefined, scores 0

  s.s_alpha = sums[own] / static_cast<double>(own_size - 1);
  const double den = std::max(s.s_alpha, s.s_beta_prime);
  s.simss = den <= tolerance ? 0.0 : (s.s_alpha - s.s_beta_prime) / den;

  const double a = 1.0 - s.s_alpha;
  const double b = 1.0 - s.s_beta_prime;
  const double ss_den = std::max(a, b);
  s.ss = ss_den <= tolerance ? 0.0 : (b - a) / ss_den;
  return s;
}

InstanceScore score_row(const EmbeddingView& view, std::size_t row, const SimilarityConfig& config) {
  require_classes(view);
  ClassSumKernel kernel(view, config);
  auto sums = kernel.run(row, row + 1);
  return score_instance(view, row, sums, config.tolerance);
}

template <typename T>
double mean_of(const std::vector<T>& xs) {
  double acc = 0.0;
  for (const auto& x : xs) acc += x;
  return acc / static_cast<double>(xs.size());
}

}  // namespace

void validate(const SimilarityConfig& config) {
  if (config.max_instances_per_class && *config.max_instances_per_class < 2) {
    throw Error(ErrorCode::InvalidValue, "max_instances_per_class must be >= 2");
  }
  if (!(config.tolerance >= 0.0)) throw Error(ErrorCode::InvalidValue, "tolerance must be >= 0");
}

double similarity(std::span<const float> a, std::span<const float> b) { return to_similarity(dot(a, b)); }

double pairwise_sim(const EmbeddingView& view, std::span<const std::size_t> rows_a,
                    std::span<const std::size_t> rows_b) {
  if (rows_a.empty() || rows_b.empty()) throw Error(ErrorCode::EmptyPairSet, "empty instance set");
  const bool same = std::equal(rows_a.begin(), rows_a.end(), rows_b.begin(), rows_b.end());
  if (same) {
    if (rows_a.size() < 2) throw Error(ErrorCode::EmptyPairSet, "one instance has no distinct pair");
    double acc = 0.0;
    for (std::size_t i = 0; i < rows_a.size(); ++i) {
      for (std::size_t j = i + 1; j < rows_a.size(); ++j) {
        acc += similarity(view.row(rows_a[i]), view.row(rows_a[j]));
      }
    }
    const double pairs = static_cast<double>(rows_a.size()) * (rows_a.size() - 1) / 2.0;
    return acc / pairs;
  }
  // Canonical operand order makes (A, B) and (B, A) sum identically.
  if (std::lexicographical_compare(rows_b.begin(), rows_b.end(), rows_a.begin(), rows_a.end())) {
    std::swap(rows_a, rows_b);
  }
  double acc = 0.0;
  for (auto i : rows_a) {
    for (auto j : rows_b) acc += similarity(view.row(i), view.row(j));
  }
  return acc / (static_cast<double>(rows_a.size()) * rows_b.size());
}

double intra_class_similarity(const EmbeddingView& view, ClassId class_id) {
  const auto& c = view.class_range(class_id);
  if (c.size() < 2) throw Error(ErrorCode::SingletonClass, std::to_string(class_id));
  auto rows = class_rows(c);
  return pairwise_sim(view, rows, rows);
}

double inter_class_similarity(const EmbeddingView& view, ClassId class_a, ClassId class_b) {
  if (class_a == class_b) throw Error(ErrorCode::SameClass, std::to_string(class_a));
  const auto& a = view.class_range(class_a);
  const auto& b = view.class_range(class_b);
  if (a.size() == 0) throw Error(ErrorCode::EmptyClass, std::to_string(class_a));
  if (b.size() == 0) throw Error(ErrorCode::EmptyClass, std::to_string(class_b));
  return pairwise_sim(view, class_rows(a), class_rows(b));
}

double dataset_intra(const EmbeddingView& view) {
  require_classes(view);
  std::vector<double> per_class;
  // Singleton classes have no intra pairs and are left out.
  for (const auto& c : view.classes()) {
    if (c.size() >= 2) per_class.push_back(intra_class_similarity(view, c.class_id));
  }
  if (per_class.empty()) throw Error(ErrorCode::SingletonClass, "every class is a singleton");
  return mean_of(per_class);
}

double dataset_inter(const EmbeddingView& view) {
  require_classes(view);
  const auto& classes = view.classes();
  std::vector<double> per_pair;
  for (std::size_t a = 0; a < classes.size(); ++a) {
    for (std::size_t b = a + 1; b < classes.size(); ++b) {
      per_pair.push_back(inter_class_similarity(view, classes[a].class_id, classes[b].class_id));
    }
  }
  return mean_of(per_pair);
}

NearestClass nearest_class(const EmbeddingView& view, std::string_view image_id,
                           const SimilarityConfig& config) {
  auto s = score_row(view, require_row(view, image_id), config);
  return {s.nearest_class, s.s_beta_prime};
}

double simss_instance(const EmbeddingView& view, std::string_view image_id,
                      const SimilarityConfig& config) {
  return score_row(view, require_row(view, image_id), config).simss;
}

double silhouette_instance(const EmbeddingView& view, std::string_view image_id,
                           const SimilarityConfig& config) {
  return score_row(view, require_row(view, image_id), config).ss;
}

double simss_class(const EmbeddingView& view, ClassId class_id, const SimilarityConfig& config) {
  require_classes(view);
  const auto& c = view.class_range(class_id);
  ClassSumKernel kernel(view, config);
  auto sums = kernel.run(c.begin, c.end);
  const std::size_t k = view.class_count();
  double acc = 0.0;
  for (std::size_t r = c.begin; r < c.end; ++r) {
    acc += score_instance(view, r, std::span<const double>(sums.data() + (r - c.begin) * k, k),
                          config.tolerance)
               .simss;
  }
  return acc / static_cast<double>(c.size());
}

double simss_dataset(const EmbeddingView& view, const SimilarityConfig& config) {
  return full_report(view, config).dataset.simss;
}

PairCounts pair_counts(std::uint64_t class_size, std::uint64_t class_count,
                       std::uint64_t other_class_size) {
  PairCounts p;
  p.intra = class_size * (class_size - (class_size > 0 ? 1 : 0)) / 2;
  p.dataset_class_pairs = class_count * (class_count - (class_count > 0 ? 1 : 0)) / 2;
  p.inter = class_size * other_class_size;
  return p;
}

EmbeddingView subsample_view(const EmbeddingView& view, const SimilarityConfig& config,
                             std::vector<SubsampleRecord>* record) {
  if (!config.max_instances_per_class) return view;
  const std::size_t cap = *config.max_instances_per_class;
  const std::uint64_t seed = config.subsample_seed.value_or(0);
  bool any = false;
  std::vector<std::vector<std::size_t>> keep;
  for (const auto& c : view.classes()) {
    std::vector<std::size_t> local(c.size());
    for (std::size_t i = 0; i < local.size(); ++i) local[i] = i;
    if (c.size() > cap) {
      // Independent stream per (seed, class).
      std::uint64_t mix = seed ^ (0x632be59bd9b4e019ULL * static_cast<std::uint64_t>(c.class_id + 1));
      Xoshiro256 rng(splitmix64(mix));
      partial_shuffle(std::span<std::size_t>(local), cap, rng);
      local.resize(cap);
      any = true;
      if (record) record->push_back({c.class_id, c.size(), cap});
    }
    keep.push_back(std::move(local));
  }
  return any ? view.select(keep) : view;
}

SimilarityReport full_report(const EmbeddingView& input, const SimilarityConfig& config) {
  validate(config);
  SimilarityReport report;
  report.config = config;
  report.encoder_tag = input.encoder_tag();
  const EmbeddingView view = subsample_view(input, config, &report.subsampled);
  require_classes(view);

  const std::size_t n = view.rows(), k = view.class_count();
  const auto& classes = view.classes();
  ClassSumKernel kernel(view, config);
  const auto sums = kernel.run(0, n);

  report.instances.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    report.instances.push_back(
        score_instance(view, r, std::span<const double>(sums.data() + r * k, k), config.tolerance));
    if (classes[view.class_slot_of_row(r)].size() < 2) ++report.singleton_instances;
  }

  std::vector<double> alphas, beta_primes, simss, ss;
  for (std::size_t slot = 0; slot < k; ++slot) {
    const auto& c = classes[slot];
    ClassScore cs;
    cs.class_id = c.class_id;
    cs.size = c.size();
    double bp = 0.0, sim_acc = 0.0, ss_acc = 0.0, own = 0.0;
    for (std::size_t r = c.begin; r < c.end; ++r) {
      const auto& inst = report.instances[r];
      bp += inst.s_beta_prime;
      sim_acc += inst.simss;
      ss_acc += inst.ss;
      own += sums[r * k + slot];
    }
    const auto size = static_cast<double>(c.size());
    cs.s_beta_prime = bp / size;
    cs.simss = sim_acc / size;
    cs.ss = ss_acc / size;
    if (c.size() >= 2) {
      // Ordered-pair sum over |C|(|C|-1) equals the distinct-pair mean.
      cs.s_alpha = own / (size * (size - 1.0));
      alphas.push_back(cs.s_alpha);
    }
    beta_primes.push_back(cs.s_beta_prime);
    simss.push_back(cs.simss);
    ss.push_back(cs.ss);
    report.classes.push_back(cs);
  }

  std::vector<double> betas;
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      double acc = 0.0;
      for (std::size_t r = classes[a].begin; r < classes[a].end; ++r) acc += sums[r * k + b];
      betas.push_back(acc / (static_cast<double>(classes[a].size()) * classes[b].size()));
    }
  }

  auto& ds = report.dataset;
  ds.s_alpha = alphas.empty() ? kUndefined : mean_of(alphas);
  ds.s_beta = mean_of(betas);
  ds.s_beta_prime = mean_of(beta_primes);
  ds.simss = mean_of(simss);
  ds.ss = mean_of(ss);
  ds.class_count = k;
  ds.instance_count = n;
  return report;
}

namespace {

nlohmann::ordered_json number_or_null(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

std::string csv_number(double v) { return std::isnan(v) ? "" : io::format_double(v); }

}  // namespace

std::string report_to_json(const SimilarityReport& report) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["encoder_tag"] = report.encoder_tag;
  if (report.subset) {
    ordered_json s;
    s["dataset"] = report.subset->dataset;
    s["n_cl"] = report.subset->n_cl;
    s["seed"] = report.subset->seed ? ordered_json(*report.subset->seed) : ordered_json(nullptr);
    j["subset"] = s;
  } else {
    j["subset"] = nullptr;
  }
  ordered_json cfg;
  cfg["similarity"] = "normalized_cosine";
  cfg["normalization"] = "(cos+1)/2";
  cfg["max_instances_per_class"] = report.config.max_instances_per_class
                                       ? ordered_json(*report.config.max_instances_per_class)
                                       : ordered_json(nullptr);
  cfg["subsample_seed"] = report.config.subsample_seed ? ordered_json(*report.config.subsample_seed)
                                                       : ordered_json(nullptr);
  cfg["tolerance"] = report.config.tolerance;
  j["config"] = cfg;

  ordered_json sub = ordered_json::array();
  for (const auto& s : report.subsampled) {
    sub.push_back({{"class_id", s.class_id}, {"original_size", s.original_size}, {"kept", s.kept}});
  }
  j["subsampled"] = sub;
  j["singleton_instances"] = report.singleton_instances;

  const auto& d = report.dataset;
  ordered_json ds;
  ds["classes"] = d.class_count;
  ds["instances"] = d.instance_count;
  ds["s_alpha"] = number_or_null(d.s_alpha);
  ds["s_beta"] = d.s_beta;
  ds["s_beta_prime"] = d.s_beta_prime;
  ds["simss"] = d.simss;
  ds["ss"] = d.ss;
  j["dataset"] = ds;

  ordered_json cls = ordered_json::array();
  for (const auto& c : report.classes) {
    ordered_json row;
    row["class_id"] = c.class_id;
    row["size"] = c.size;
    row["s_alpha"] = number_or_null(c.s_alpha);
    row["s_beta_prime"] = c.s_beta_prime;
    row["simss"] = c.simss;
    row["ss"] = c.ss;
    cls.push_back(std::move(row));
  }
  j["classes"] = std::move(cls);

  ordered_json inst = ordered_json::array();
  for (const auto& i : report.instances) {
    ordered_json row;
    row["image_id"] = i.image_id;
    row["class_id"] = i.class_id;
    row["s_alpha"] = number_or_null(i.s_alpha);
    row["s_beta_prime"] = i.s_beta_prime;
    row["nearest_class"] = i.nearest_class;
    row["simss"] = i.simss;
    row["ss"] = i.ss;
    inst.push_back(std::move(row));
  }
  j["instances"] = std::move(inst);
  return j.dump(2) + "\n";
}

std::string report_to_csv(const SimilarityReport& report) {
  std::string out = "section,id,class_id,size,s_alpha,s_beta,s_beta_prime,nearest_class,simss,ss\n";
  const auto& d = report.dataset;
  out += "dataset,,," + std::to_string(d.instance_count) + "," + csv_number(d.s_alpha) + "," +
         csv_number(d.s_beta) + "," + csv_number(d.s_beta_prime) + ",," + csv_number(d.simss) + "," +
         csv_number(d.ss) + "\n";
  for (const auto& c : report.classes) {
    out += "class,," + std::to_string(c.class_id) + "," + std::to_string(c.size) + "," +
           csv_number(c.s_alpha) + ",," + csv_number(c.s_beta_prime) + ",," + csv_number(c.simss) +
           "," + csv_number(c.ss) + "\n";
  }
  for (const auto& i : report.instances) {
    out += "instance," + i.image_id + "," + std::to_string(i.class_id) + ",," + csv_number(i.s_alpha) +
           ",," + csv_number(i.s_beta_prime) + "," + std::to_string(i.nearest_class) + "," +
           csv_number(i.simss) + "," + csv_number(i.ss) + "\n";
  }
  return out;
}

}  // namespace fca::sim
