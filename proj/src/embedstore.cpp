#include "fca/embedstore.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include "fca/error.hpp"

namespace fca {

namespace {

void put_u16(std::string& buf, std::uint16_t v) {
  buf.push_back(static_cast<char>(v & 0xff));
  buf.push_back(static_cast<char>(v >> 8));
}
void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

template <typename T>
T get_le(const unsigned char* p) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(p[i]) << (8 * i);
  return v;
}

float get_f32(const unsigned char* p) { return std::bit_cast<float>(get_le<std::uint32_t>(p)); }

constexpr std::uint64_t kFixedHeaderBytes = 4 + 4 + 8 + 4 + 2;

std::string encode_header(std::uint32_t version, std::uint64_t count, std::uint32_t dim,
                          const std::string& tag) {
  std::string buf(kStoreMagic, 4);
  put_u32(buf, version);
  put_u64(buf, count);
  put_u32(buf, dim);
  put_u16(buf, static_cast<std::uint16_t>(tag.size()));
  buf += tag;
  return buf;
}

}  // namespace

// ---------------------------------------------------------------- writer

struct StoreWriter::Impl {
  std::filesystem::path path;
  std::filesystem::path tmp;
  std::string tag;
  std::uint32_t version;
  std::ofstream out;
  std::uint64_t count = 0;
  std::uint32_t dim = 0;
  std::uint64_t offset = 0;
  std::vector<std::pair<std::string, std::uint64_t>> index;  // version 2
  std::string scratch;
  std::vector<float> normalized;
  bool finished = false;
};

StoreWriter::StoreWriter(std::filesystem::path path, std::string encoder_tag, std::uint32_t version)
    : impl_(std::make_unique<Impl>()) {
  if (version != kStoreVersionPlain && version != kStoreVersionIndexed) {
    throw Error(ErrorCode::UnsupportedVersion, std::to_string(version));
  }
  if (encoder_tag.size() > 0xffff) throw Error(ErrorCode::InvalidValue, "encoder tag too long");
  impl_->path = std::move(path);
  impl_->tmp = impl_->path;
  impl_->tmp += ".tmp." + std::to_string(::getpid());
  impl_->tag = std::move(encoder_tag);
  impl_->version = version;
  if (impl_->path.has_parent_path()) std::filesystem::create_directories(impl_->path.parent_path());
  impl_->out.open(impl_->tmp, std::ios::binary | std::ios::trunc);
  if (!impl_->out) throw Error(ErrorCode::IoError, "cannot open " + impl_->tmp.string());
  auto header = encode_header(version, 0, 0, impl_->tag);
  impl_->out.write(header.data(), static_cast<std::streamsize>(header.size()));
  impl_->offset = header.size();
}

StoreWriter::~StoreWriter() {
  if (impl_ && !impl_->finished) {
    impl_->out.close();
    std::error_code ec;
    std::filesystem::remove(impl_->tmp, ec);
  }
}

void StoreWriter::add(std::string_view image_id, std::span<const float> raw_vector) {
  auto& s = *impl_;
  if (image_id.empty() || image_id.size() > 0xffff) {
    throw Error(ErrorCode::InvalidValue, "image id length must be 1..65535");
  }
  if (s.count == 0) {
    if (raw_vector.empty()) throw Error(ErrorCode::DimensionMismatch, "empty vector");
    s.dim = static_cast<std::uint32_t>(raw_vector.size());
  } else if (raw_vector.size() != s.dim) {
    throw Error(ErrorCode::DimensionMismatch,
                "expected " + std::to_string(s.dim) + ", got " +
                    std::to_string(raw_vector.size()) + " for " + std::string(image_id));
  }
  double sq = 0.0;
  for (float x : raw_vector) sq += static_cast<double>(x) * x;
  const double norm = std::sqrt(sq);
  if (!(norm > 0.0) || !std::isfinite(norm)) throw Error(ErrorCode::ZeroVector, std::string(image_id));

  s.scratch.clear();
  put_u16(s.scratch, static_cast<std::uint16_t>(image_id.size()));
  s.scratch.append(image_id);
  for (float x : raw_vector) {
    auto v = static_cast<float>(static_cast<double>(x) / norm);
    put_u32(s.scratch, std::bit_cast<std::uint32_t>(v));
  }
  if (s.version == kStoreVersionIndexed) s.index.emplace_back(std::string(image_id), s.offset);
  s.out.write(s.scratch.data(), static_cast<std::streamsize>(s.scratch.size()));
  s.offset += s.scratch.size();
  ++s.count;
}

StoreSummary StoreWriter::finish() {
  auto& s = *impl_;
  if (s.version == kStoreVersionIndexed) {
    std::sort(s.index.begin(), s.index.end());
    for (std::size_t i = 1; i < s.index.size(); ++i) {
      if (s.index[i].first == s.index[i - 1].first) {
        throw Error(ErrorCode::DuplicateEmbeddingId, s.index[i].first);
      }
    }
    std::string footer;
    for (const auto& [_, off] : s.index) put_u64(footer, off);
    put_u64(footer, s.offset);
    footer.append(kFooterMagic, 4);
    s.out.write(footer.data(), static_cast<std::streamsize>(footer.size()));
  }
  auto header = encode_header(s.version, s.count, s.dim, s.tag);
  s.out.seekp(0);
  s.out.write(header.data(), static_cast<std::streamsize>(header.size()));
  s.out.close();
  if (!s.out) throw Error(ErrorCode::IoError, "write failed for " + s.path.string());
  std::error_code ec;
  std::filesystem::rename(s.tmp, s.path, ec);
  if (ec) throw Error(ErrorCode::IoError, "rename failed for " + s.path.string());
  s.finished = true;
  return {s.count, s.dim};
}

StoreSummary write_store(std::span<const RawRecord> records, const std::string& encoder_tag,
                         const std::filesystem::path& path, std::uint32_t version) {
  StoreWriter writer(path, encoder_tag, version);
  std::unordered_map<std::string_view, int> seen;
  for (const auto& r : records) {
    if (!seen.emplace(r.image_id, 0).second) throw Error(ErrorCode::DuplicateEmbeddingId, r.image_id);
    writer.add(r.image_id, r.vector);
  }
  return writer.finish();
}

// ---------------------------------------------------------------- reader

struct EmbeddingStore::Mapping {
  const unsigned char* data = nullptr;
  std::size_t size = 0;

  Mapping(const std::filesystem::path& path) {
    int fd = ::open(path.c_str(), O_RDONLY);
    if (fd < 0) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    struct stat st {};
    if (::fstat(fd, &st) != 0) {
      ::close(fd);
      throw Error(ErrorCode::IoError, "cannot stat " + path.string());
    }
    size = static_cast<std::size_t>(st.st_size);
    if (size > 0) {
      void* p = ::mmap(nullptr, size, PROT_READ, MAP_PRIVATE, fd, 0);
      if (p == MAP_FAILED) {
        ::close(fd);
        throw Error(ErrorCode::IoError, "cannot map " + path.string());
      }
      data = static_cast<const unsigned char*>(p);
    }
    ::close(fd);
  }
  ~Mapping() {
    if (data) ::munmap(const_cast<unsigned char*>(data), size);
  }
  Mapping(const Mapping&) = delete;
  Mapping& operator=(const Mapping&) = delete;
};

namespace {

StoreHeader parse_header(const unsigned char* data, std::size_t size) {
  if (size < 4) throw Error(ErrorCode::TruncatedFile, "offset " + std::to_string(size));
  if (std::memcmp(data, kStoreMagic, 4) != 0) throw Error(ErrorCode::BadMagic, "");
  if (size < kFixedHeaderBytes) throw Error(ErrorCode::TruncatedFile, "offset " + std::to_string(size));
  StoreHeader h;
  h.version = get_le<std::uint32_t>(data + 4);
  if (h.version != kStoreVersionPlain && h.version != kStoreVersionIndexed) {
    throw Error(ErrorCode::UnsupportedVersion, std::to_string(h.version));
  }
  h.count = get_le<std::uint64_t>(data + 8);
  h.dim = get_le<std::uint32_t>(data + 16);
  auto tag_len = get_le<std::uint16_t>(data + 20);
  if (size < kFixedHeaderBytes + tag_len) {
    throw Error(ErrorCode::TruncatedFile, "offset " + std::to_string(size));
  }
  h.encoder_tag.assign(reinterpret_cast<const char*>(data + kFixedHeaderBytes), tag_len);
  h.records_offset = kFixedHeaderBytes + tag_len;
  return h;
}

}  // namespace

StoreHeader read_store_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::string buf(kFixedHeaderBytes + 0xffff, '\0');
  in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
  auto got = static_cast<std::size_t>(in.gcount());
  return parse_header(reinterpret_cast<const unsigned char*>(buf.data()), got);
}

EmbeddingStore::EmbeddingStore(EmbeddingStore&&) noexcept = default;
EmbeddingStore& EmbeddingStore::operator=(EmbeddingStore&&) noexcept = default;
EmbeddingStore::~EmbeddingStore() = default;

EmbeddingStore read_store(const std::filesystem::path& path) {
  EmbeddingStore store;
  store.map_ = std::make_unique<EmbeddingStore::Mapping>(path);
  const auto* data = store.map_->data;
  const std::size_t size = store.map_->size;
  store.header_ = parse_header(data, size);
  const auto& h = store.header_;

  std::size_t records_end = size;
  if (h.version == kStoreVersionIndexed) {
    if (size < h.records_offset + 12) throw Error(ErrorCode::TruncatedFile, "offset " + std::to_string(size));
    if (std::memcmp(data + size - 4, kFooterMagic, 4) != 0) {
      throw Error(ErrorCode::TruncatedFile, "missing footer at offset " + std::to_string(size));
    }
    store.footer_offset_ = get_le<std::uint64_t>(data + size - 12);
    if (store.footer_offset_ + h.count * 8 + 12 != size) {
      throw Error(ErrorCode::TruncatedFile, "footer inconsistent at offset " + std::to_string(size));
    }
    records_end = store.footer_offset_;
  }

  const std::uint64_t vec_bytes = static_cast<std::uint64_t>(h.dim) * 4;
  std::uint64_t off = h.records_offset;
  store.offsets_.reserve(h.count);
  for (std::uint64_t i = 0; i < h.count; ++i) {
    if (off + 2 > records_end) throw Error(ErrorCode::TruncatedFile, "offset " + std::to_string(off));
    auto id_len = get_le<std::uint16_t>(data + off);
    if (off + 2 + id_len + vec_bytes > records_end) {
      throw Error(ErrorCode::TruncatedFile, "offset " + std::to_string(off));
    }
    store.offsets_.push_back(off);
    off += 2 + id_len + vec_bytes;
  }
  if (off != records_end) {
    throw Error(ErrorCode::TruncatedFile,
                "count mismatch: records end at offset " + std::to_string(off) + " of " +
                    std::to_string(records_end));
  }
  if (h.version == kStoreVersionPlain) {
    store.by_id_.reserve(h.count);
    for (std::size_t i = 0; i < store.offsets_.size(); ++i) {
      if (!store.by_id_.emplace(store.id(i), i).second) {
        throw Error(ErrorCode::DuplicateEmbeddingId, std::string(store.id(i)));
      }
    }
  }
  return store;
}

std::string_view EmbeddingStore::id(std::size_t index) const {
  const auto* p = map_->data + offsets_.at(index);
  auto len = get_le<std::uint16_t>(p);
  return {reinterpret_cast<const char*>(p + 2), len};
}

void EmbeddingStore::copy_vector(std::size_t index, std::span<float> out) const {
  const auto* p = map_->data + offsets_.at(index);
  auto len = get_le<std::uint16_t>(p);
  p += 2 + len;
  const std::size_t n = std::min<std::size_t>(out.size(), header_.dim);
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(out.data(), p, n * 4);
  } else {
    for (std::size_t d = 0; d < n; ++d) out[d] = get_f32(p + 4 * d);
  }
}

std::vector<float> EmbeddingStore::vector(std::size_t index) const {
  std::vector<float> v(header_.dim);
  copy_vector(index, v);
  return v;
}

std::optional<std::size_t> EmbeddingStore::find(std::string_view image_id) const {
  if (header_.version == kStoreVersionPlain) {
    auto it = by_id_.find(image_id);
    if (it == by_id_.end()) return std::nullopt;
    return it->second;
  }
  // Footer entries are record offsets sorted by id.
  const auto* footer = map_->data + footer_offset_;
  std::size_t lo = 0, hi = header_.count;
  while (lo < hi) {
    std::size_t mid = lo + (hi - lo) / 2;
    auto rec = get_le<std::uint64_t>(footer + 8 * mid);
    const auto* p = map_->data + rec;
    std::string_view id(reinterpret_cast<const char*>(p + 2), get_le<std::uint16_t>(p));
    if (id < image_id) {
      lo = mid + 1;
    } else if (image_id < id) {
      hi = mid;
    } else {
      auto it = std::lower_bound(offsets_.begin(), offsets_.end(), rec);
      return static_cast<std::size_t>(it - offsets_.begin());
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------- view

const ClassRange& EmbeddingView::class_range(ClassId class_id) const {
  auto slot = class_slot(class_id);
  if (!slot) throw Error(ErrorCode::UnknownClass, std::to_string(class_id));
  return classes_[*slot];
}

std::optional<std::size_t> EmbeddingView::class_slot(ClassId class_id) const {
  auto it = std::lower_bound(classes_.begin(), classes_.end(), class_id,
                             [](const ClassRange& c, ClassId id) { return c.class_id < id; });
  if (it == classes_.end() || it->class_id != class_id) return std::nullopt;
  return static_cast<std::size_t>(it - classes_.begin());
}

std::optional<std::size_t> EmbeddingView::row_of(std::string_view image_id) const {
  auto it = row_by_id_.find(std::string(image_id));
  if (it == row_by_id_.end()) return std::nullopt;
  return it->second;
}

void EmbeddingView::index_ids() {
  row_by_id_.clear();
  row_by_id_.reserve(ids_.size());
  for (std::size_t r = 0; r < ids_.size(); ++r) row_by_id_.emplace(ids_[r], r);
}

EmbeddingView EmbeddingView::select(const std::vector<std::vector<std::size_t>>& keep) const {
  EmbeddingView out;
  out.dim_ = dim_;
  out.encoder_tag_ = encoder_tag_;
  for (std::size_t slot = 0; slot < classes_.size(); ++slot) {
    const auto& c = classes_[slot];
    auto rows = keep.at(slot);
    std::sort(rows.begin(), rows.end());
    if (rows.empty()) throw Error(ErrorCode::EmptyClassAfterFilter, std::to_string(c.class_id));
    ClassRange range{c.class_id, out.ids_.size(), out.ids_.size() + rows.size()};
    for (auto local : rows) {
      const auto r = c.begin + local;
      out.ids_.push_back(ids_[r]);
      out.row_class_.push_back(out.classes_.size());
      auto src = row(r);
      out.data_.insert(out.data_.end(), src.begin(), src.end());
    }
    out.classes_.push_back(range);
  }
  out.index_ids();
  return out;
}

EmbeddingView EmbeddingView::from_vectors(const std::vector<std::string>& ids,
                                          const std::vector<ClassId>& labels,
                                          const std::vector<std::vector<double>>& vectors,
                                          std::string encoder_tag) {
  if (ids.size() != labels.size() || ids.size() != vectors.size() || ids.empty()) {
    throw Error(ErrorCode::LengthMismatch, "ids, labels and vectors must be equal and non-empty");
  }
  const std::size_t dim = vectors.front().size();
  std::map<ClassId, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < ids.size(); ++i) groups[labels[i]].push_back(i);

  EmbeddingView view;
  view.dim_ = dim;
  view.encoder_tag_ = std::move(encoder_tag);
  for (auto& [cls, members] : groups) {
    std::sort(members.begin(), members.end(),
              [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });
    ClassRange range{cls, view.ids_.size(), view.ids_.size() + members.size()};
    for (auto i : members) {
      const auto& v = vectors[i];
      if (v.size() != dim) {
        throw Error(ErrorCode::DimensionMismatch,
                    "expected " + std::to_string(dim) + ", got " + std::to_string(v.size()) +
                        " for " + ids[i]);
      }
      double sq = 0.0;
      for (double x : v) sq += x * x;
      const double norm = std::sqrt(sq);
      if (!(norm > 0.0)) throw Error(ErrorCode::ZeroVector, ids[i]);
      for (double x : v) view.data_.push_back(static_cast<float>(x / norm));
      view.ids_.push_back(ids[i]);
      view.row_class_.push_back(view.classes_.size());
    }
    view.classes_.push_back(range);
  }
  view.index_ids();
  if (view.row_by_id_.size() != view.ids_.size()) {
    throw Error(ErrorCode::DuplicateImageId, "duplicate ids in view input");
  }
  return view;
}

EmbeddingView make_view(const EmbeddingStore& store, const DatasetManifest& manifest,
                        const SubsetSpec* spec) {
  std::set<ClassId> wanted;
  if (spec) {
    for (auto c : spec->selected_classes) {
      if (!manifest.class_universe.contains(c)) throw Error(ErrorCode::ClassNotInManifest, std::to_string(c));
      wanted.insert(c);
    }
  } else {
    wanted = manifest.class_universe;
  }

  std::map<ClassId, std::vector<const ManifestEntry*>> groups;
  for (auto c : wanted) groups[c];
  for (const auto& e : manifest.entries) {
    if (wanted.contains(e.class_id)) groups[e.class_id].push_back(&e);
  }

  EmbeddingView view;
  view.dim_ = store.dim();
  view.encoder_tag_ = store.encoder_tag();
  for (auto& [cls, members] : groups) {
    if (members.empty()) throw Error(ErrorCode::EmptyClassAfterFilter, std::to_string(cls));
    std::sort(members.begin(), members.end(),
              [](const ManifestEntry* a, const ManifestEntry* b) { return a->image_id < b->image_id; });
    ClassRange range{cls, view.ids_.size(), view.ids_.size() + members.size()};
    for (const auto* e : members) {
      auto idx = store.find(e->image_id);
      if (!idx) throw Error(ErrorCode::MissingEmbedding, e->image_id);
      const auto at = view.data_.size();
      view.data_.resize(at + view.dim_);
      store.copy_vector(*idx, std::span<float>(view.data_.data() + at, view.dim_));
      view.ids_.push_back(e->image_id);
      view.row_class_.push_back(view.classes_.size());
    }
    view.classes_.push_back(range);
  }
  view.index_ids();
  return view;
}

}  // namespace fca
