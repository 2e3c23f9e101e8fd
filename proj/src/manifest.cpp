#include "fca/manifest.hpp"

#include <algorithm>
#include <charconv>
#include <unordered_set>

#include "fca/error.hpp"
#include "fca/io.hpp"

namespace fca {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v'; }

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    if (i >= line.size()) break;
    std::size_t j = i;
    while (j < line.size() && !is_space(line[j])) ++j;
    tokens.push_back(line.substr(i, j - i));
    i = j;
  }
  return tokens;
}

bool parse_class_id(std::string_view token, ClassId& out) {
  if (token.empty() || token.front() == '-' || token.front() == '+') return false;
  auto res = std::from_chars(token.data(), token.data() + token.size(), out);
  return res.ec == std::errc{} && res.ptr == token.data() + token.size();
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    fn(line_no, text.substr(start, end - start));
    if (end == text.size()) break;
    start = end + 1;
  }
}

}  // namespace

std::string_view to_string(Split split) { return split == Split::train ? "train" : "val"; }

Split parse_split(std::string_view text) {
  if (text == "train") return Split::train;
  if (text == "val") return Split::val;
  throw Error(ErrorCode::InvalidValue, "split must be train or val, got '" + std::string(text) + "'");
}

DatasetManifest parse_manifest_text(std::string_view text, std::string dataset_name, Split split) {
  DatasetManifest manifest;
  manifest.dataset_name = std::move(dataset_name);
  manifest.split = split;
  std::unordered_set<std::string> seen;

  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    auto tokens = split_ws(line);
    if (tokens.empty() || tokens.front().front() == '#') return;
    ClassId cls = 0;
    if (tokens.size() != 2 || !parse_class_id(tokens[1], cls)) {
      throw Error(ErrorCode::MalformedLine, "line " + std::to_string(line_no));
    }
    std::string id(tokens[0]);
    if (!seen.insert(id).second) throw Error(ErrorCode::DuplicateImageId, id);
    manifest.class_universe.insert(cls);
    manifest.entries.push_back({std::move(id), cls});
  });

  if (manifest.entries.empty()) throw Error(ErrorCode::EmptyManifest, manifest.dataset_name);
  return manifest;
}

DatasetManifest parse_manifest(const std::filesystem::path& path, std::string dataset_name,
                               Split split) {
  return parse_manifest_text(io::read_file(path), std::move(dataset_name), split);
}

std::string serialize_manifest(const DatasetManifest& manifest) {
  std::string out;
  for (const auto& e : manifest.entries) {
    out += e.image_id;
    out += ' ';
    out += std::to_string(e.class_id);
    out += '\n';
  }
  return out;
}

std::pair<DatasetManifest, DatasetManifest> synthesize_split(
    const std::vector<ManifestEntry>& items, std::string dataset_name) {
  if (items.empty()) throw Error(ErrorCode::EmptyInput, "no items to split");
  DatasetManifest train{dataset_name, Split::train, {}, {}};
  DatasetManifest val{dataset_name, Split::val, {}, {}};
  for (std::size_t id = 0; id < items.size(); ++id) {
    auto& dst = (id % 5 == 0) ? val : train;
    dst.entries.push_back(items[id]);
    dst.class_universe.insert(items[id].class_id);
  }
  return {std::move(train), std::move(val)};
}

std::map<ClassId, ClassIndex> build_class_index(const DatasetManifest& manifest) {
  std::map<ClassId, ClassIndex> index;
  for (const auto& e : manifest.entries) {
    auto& ci = index[e.class_id];
    ci.class_id = e.class_id;
    ci.instance_ids.push_back(e.image_id);
  }
  for (auto& [_, ci] : index) std::sort(ci.instance_ids.begin(), ci.instance_ids.end());
  return index;
}

std::map<ClassId, std::string> parse_class_names(std::string_view text) {
  std::map<ClassId, std::string> names;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    auto tokens = split_ws(line);
    if (tokens.empty() || tokens.front().front() == '#') return;
    ClassId cls = 0;
    if (tokens.size() < 2 || !parse_class_id(tokens[0], cls)) {
      throw Error(ErrorCode::MalformedLine, "line " + std::to_string(line_no));
    }
    auto label_start = static_cast<std::size_t>(tokens[1].data() - line.data());
    auto label = line.substr(label_start);
    while (!label.empty() && is_space(label.back())) label.remove_suffix(1);
    names[cls] = std::string(label);
  });
  return names;
}

}  // namespace fca
