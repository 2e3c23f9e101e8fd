#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fca/manifest.hpp"
#include "fca/subset.hpp"

namespace fca {

// On-disk layout, all integers and floats little-endian:
//
//   "FCAE" | u32 version | u64 count | u32 dim | u16 tag_len | tag bytes
//   count x ( u16 id_len | id bytes | dim x f32 )
//   version 2 only:
//   count x u64 record offset, ordered by id bytes | u64 footer offset | "FCAF"
//
// Vectors are L2-normalized before they are written.
inline constexpr char kStoreMagic[4] = {'F', 'C', 'A', 'E'};
inline constexpr char kFooterMagic[4] = {'F', 'C', 'A', 'F'};
inline constexpr std::uint32_t kStoreVersionPlain = 1;
inline constexpr std::uint32_t kStoreVersionIndexed = 2;

struct StoreHeader {
  std::uint32_t version = kStoreVersionPlain;
  std::uint64_t count = 0;
  std::uint32_t dim = 0;
  std::string encoder_tag;
  std::uint64_t records_offset = 0;  // first byte after the header
};

struct StoreSummary {
  std::uint64_t count = 0;
  std::uint32_t dim = 0;
};

struct RawRecord {
  std::string image_id;
  std::vector<float> vector;
};

// Streaming writer. The file appears at `path` only after finish().
class StoreWriter {
public:
  StoreWriter(std::filesystem::path path, std::string encoder_tag,
              std::uint32_t version = kStoreVersionPlain);
  ~StoreWriter();
  StoreWriter(const StoreWriter&) = delete;
  StoreWriter& operator=(const StoreWriter&) = delete;

  void add(std::string_view image_id, std::span<const float> raw_vector);
  StoreSummary finish();

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

StoreSummary write_store(std::span<const RawRecord> records, const std::string& encoder_tag,
                         const std::filesystem::path& path,
                         std::uint32_t version = kStoreVersionPlain);

// Reads only the fixed header.
StoreHeader read_store_header(const std::filesystem::path& path);

// Read-only memory-mapped store. Opening validates the record layout (ids and
// lengths); vectors are decoded on access. Safe for concurrent readers.
class EmbeddingStore {
public:
  EmbeddingStore(EmbeddingStore&&) noexcept;
  EmbeddingStore& operator=(EmbeddingStore&&) noexcept;
  ~EmbeddingStore();

  const StoreHeader& header() const { return header_; }
  std::uint64_t count() const { return header_.count; }
  std::uint32_t dim() const { return header_.dim; }
  const std::string& encoder_tag() const { return header_.encoder_tag; }

  std::string_view id(std::size_t index) const;
  void copy_vector(std::size_t index, std::span<float> out) const;
  std::vector<float> vector(std::size_t index) const;

  std::optional<std::size_t> find(std::string_view image_id) const;

private:
  friend EmbeddingStore read_store(const std::filesystem::path& path);
  EmbeddingStore() = default;

  struct Mapping;
  std::unique_ptr<Mapping> map_;
  StoreHeader header_;
  std::vector<std::uint64_t> offsets_;  // record start, file order
  std::uint64_t footer_offset_ = 0;
  std::unordered_map<std::string_view, std::size_t> by_id_;  // version 1 lookup
};

EmbeddingStore read_store(const std::filesystem::path& path);

struct ClassRange {
  ClassId class_id = 0;
  std::size_t begin = 0;  // row range in the view matrix
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
};

// Labeled, unit-norm embedding rows grouped contiguously by class. Classes
// ascend by id; rows within a class ascend by image id.
class EmbeddingView {
public:
  EmbeddingView() = default;

  std::size_t dim() const { return dim_; }
  std::size_t rows() const { return ids_.size(); }
  std::size_t class_count() const { return classes_.size(); }

  const std::vector<ClassRange>& classes() const { return classes_; }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::string& encoder_tag() const { return encoder_tag_; }

  std::span<const float> row(std::size_t r) const {
    return {data_.data() + r * dim_, dim_};
  }
  std::span<const float> data() const { return data_; }
  ClassId class_of_row(std::size_t r) const { return classes_[row_class_[r]].class_id; }
  std::size_t class_slot_of_row(std::size_t r) const { return row_class_[r]; }

  const ClassRange& class_range(ClassId class_id) const;
  std::optional<std::size_t> class_slot(ClassId class_id) const;
  std::optional<std::size_t> row_of(std::string_view image_id) const;

  // Keeps `keep[slot]` rows (given as row offsets within each class, any
  // order) and drops the rest.
  EmbeddingView select(const std::vector<std::vector<std::size_t>>& keep) const;

  // Builds a view from in-memory labeled vectors, normalizing each one.
  static EmbeddingView from_vectors(const std::vector<std::string>& ids,
                                    const std::vector<ClassId>& labels,
                                    const std::vector<std::vector<double>>& vectors,
                                    std::string encoder_tag = "memory");

private:
  friend EmbeddingView make_view(const EmbeddingStore&, const DatasetManifest&,
                                 const SubsetSpec*);
  void index_ids();

  std::size_t dim_ = 0;
  std::string encoder_tag_;
  std::vector<float> data_;
  std::vector<std::string> ids_;
  std::vector<std::size_t> row_class_;
  std::vector<ClassRange> classes_;
  std::unordered_map<std::string, std::size_t> row_by_id_;
};

// Joins a store with a manifest, optionally restricted to a subset.
EmbeddingView make_view(const EmbeddingStore& store, const DatasetManifest& manifest,
                        const SubsetSpec* spec = nullptr);

}  // namespace fca
