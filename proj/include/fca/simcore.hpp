#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fca/embedstore.hpp"

namespace fca::sim {

inline constexpr double kUndefined = std::numeric_limits<double>::quiet_NaN();

struct SimilarityConfig {
  // Classes larger than this are subsampled (seeded Fisher-Yates over the
  // canonical instance order) before scoring.
  std::optional<std::size_t> max_instances_per_class;
  std::optional<std::uint64_t> subsample_seed;
  // Silhouette denominators at or below this yield a score of 0.
  double tolerance = 1e-12;

  // Execution knobs. Results do not depend on `threads`; tile shape changes
  // summation order only (differences stay below 1e-12).
  unsigned threads = 1;
  std::size_t tile_rows = 32;
  std::size_t tile_cols = 128;
};

void validate(const SimilarityConfig& config);

// Normalized cosine of two unit vectors: (dot + 1) / 2, clamped to [0, 1].
double similarity(std::span<const float> a, std::span<const float> b);

// Mean similarity over a pair set. When `rows_a` and `rows_b` hold the same
// rows the pairs are the distinct unordered ones; otherwise all cross pairs.
double pairwise_sim(const EmbeddingView& view, std::span<const std::size_t> rows_a,
                    std::span<const std::size_t> rows_b);

double intra_class_similarity(const EmbeddingView& view, ClassId class_id);
double inter_class_similarity(const EmbeddingView& view, ClassId class_a, ClassId class_b);
// Mean over classes with at least two instances.
double dataset_intra(const EmbeddingView& view);
double dataset_inter(const EmbeddingView& view);

struct NearestClass {
  ClassId class_id = 0;
  double similarity = 0.0;  // mean similarity of the instance to that class
};

NearestClass nearest_class(const EmbeddingView& view, std::string_view image_id,
                           const SimilarityConfig& config = {});

double simss_instance(const EmbeddingView& view, std::string_view image_id,
                      const SimilarityConfig& config = {});
double simss_class(const EmbeddingView& view, ClassId class_id, const SimilarityConfig& config = {});
double simss_dataset(const EmbeddingView& view, const SimilarityConfig& config = {});

// Classic silhouette over the dissimilarity d = 1 - sim.
double silhouette_instance(const EmbeddingView& view, std::string_view image_id,
                           const SimilarityConfig& config = {});

struct PairCounts {
  std::uint64_t intra = 0;                // |C|(|C|-1)/2
  std::uint64_t dataset_class_pairs = 0;  // |L|(|L|-1)/2
  std::uint64_t inter = 0;                // |C1||C2|
};

PairCounts pair_counts(std::uint64_t class_size, std::uint64_t class_count,
                       std::uint64_t other_class_size);

struct InstanceScore {
  std::string image_id;
  ClassId class_id = 0;
  double s_alpha = kUndefined;  // undefined for singleton classes
  double s_beta_prime = 0.0;
  ClassId nearest_class = 0;
  double simss = 0.0;
  double ss = 0.0;
};

struct ClassScore {
  ClassId class_id = 0;
  std::size_t size = 0;
  double s_alpha = kUndefined;
  double s_beta_prime = 0.0;
  double simss = 0.0;
  double ss = 0.0;
};

struct DatasetScore {
  double s_alpha = kUndefined;  // mean over classes with at least two instances
  double s_beta = 0.0;
  double s_beta_prime = 0.0;
  double simss = 0.0;
  double ss = 0.0;
  std::size_t class_count = 0;
  std::size_t instance_count = 0;
};

struct SubsampleRecord {
  ClassId class_id = 0;
  std::size_t original_size = 0;
  std::size_t kept = 0;
};

struct SubsetIdentity {
  std::string dataset;
  int n_cl = 0;
  std::optional<std::uint64_t> seed;  // empty for the full dataset
};

struct SimilarityReport {
  std::vector<InstanceScore> instances;  // view row order
  std::vector<ClassScore> classes;       // ascending class id
  DatasetScore dataset;
  SimilarityConfig config;
  std::string encoder_tag;
  std::optional<SubsetIdentity> subset;
  std::vector<SubsampleRecord> subsampled;
  std::size_t singleton_instances = 0;
};

// Seeded per-class subsample; returns `view` unchanged if nothing is cut.
EmbeddingView subsample_view(const EmbeddingView& view, const SimilarityConfig& config,
                             std::vector<SubsampleRecord>* record = nullptr);

SimilarityReport full_report(const EmbeddingView& view, const SimilarityConfig& config = {});

std::string report_to_json(const SimilarityReport& report);
// One row per instance, class and dataset, distinguished by the first column.
std::string report_to_csv(const SimilarityReport& report);

}  // namespace fca::sim
