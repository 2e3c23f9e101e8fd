#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fca {

using ClassId = std::int64_t;

enum class Split { train, val };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);

struct ManifestEntry {
  std::string image_id;
  ClassId class_id = 0;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

// Image-to-class mapping of one dataset split in the
// "<IMAGE_ID>.jpeg <CLASS_NUM>" layout of meta/train.txt and meta/val.txt.
struct DatasetManifest {
  std::string dataset_name;
  Split split = Split::train;
  std::vector<ManifestEntry> entries;  // file order
  std::set<ClassId> class_universe;

  std::size_t size() const { return entries.size(); }
};

struct ClassIndex {
  ClassId class_id = 0;
  std::vector<std::string> instance_ids;  // ascending, bytewise

  std::size_t cardinality() const { return instance_ids.size(); }
};

// Parses manifest text. Blank lines and '#' comments are skipped; tokens may
// be separated by any run of whitespace.
DatasetManifest parse_manifest_text(std::string_view text, std::string dataset_name, Split split);
DatasetManifest parse_manifest(const std::filesystem::path& path, std::string dataset_name,
                               Split split);

// One "<id> <class>" line per entry, single space, '\n' terminated.
std::string serialize_manifest(const DatasetManifest& manifest);

// Sequential ids are assigned in input order; id % 5 == 0 goes to val.
std::pair<DatasetManifest, DatasetManifest> synthesize_split(
    const std::vector<ManifestEntry>& items, std::string dataset_name = {});

std::map<ClassId, ClassIndex> build_class_index(const DatasetManifest& manifest);

// Optional "<class_id> <label...>" sidecar. Labels may contain spaces.
std::map<ClassId, std::string> parse_class_names(std::string_view text);

}  // namespace fca
