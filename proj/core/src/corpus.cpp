#include "dgn/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "binary_io.hpp"
#include "dgn/error.hpp"
#include "dgn/io.hpp"

namespace dgn {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kLabelMagic = "DGNL";
constexpr std::string_view kFeatureMagic = "DGNF";
constexpr std::uint32_t kVersion = 1;
constexpr std::string_view kManifestTag = "#DGN-MANIFEST v1";

}  // namespace

LabelMap::LabelMap(std::uint32_t width, std::uint32_t height, std::uint32_t num_objects,
                   std::vector<std::uint16_t> labels)
    : width_(width), height_(height), num_objects_(num_objects), labels_(std::move(labels)) {
  require(width_ > 0 && height_ > 0, "label map must have at least one pixel");
  require(num_objects_ > 0 && num_objects_ <= 65536u, "label map object count must be in [1, 65536]");
  require(labels_.size() == std::size_t{width_} * height_, "label count does not match width x height");
  for (auto v : labels_) {
    if (v >= num_objects_)
      throw ValidationError("label " + std::to_string(v) + " out of range for L=" + std::to_string(num_objects_));
  }
}

FeatureMap::FeatureMap(std::uint32_t width, std::uint32_t height, std::uint32_t channels, std::vector<double> values)
    : width_(width), height_(height), channels_(channels), values_(std::move(values)) {
  require(width_ > 0 && height_ > 0 && channels_ > 0, "feature map dimensions must be positive");
  require(values_.size() == std::size_t{width_} * height_ * channels_, "feature count does not match w1 x h1 x c");
  for (double v : values_) require(std::isfinite(v), "feature map contains a non-finite value");
}

Corpus::Corpus(std::uint32_t num_scenes, std::uint32_t num_objects, Split split, std::vector<Instance> instances)
    : num_scenes_(num_scenes), num_objects_(num_objects), split_(split), instances_(std::move(instances)) {
  require(num_scenes_ > 0, "corpus needs at least one scene category");
  require(num_objects_ > 0, "corpus needs a non-empty object vocabulary");
  const FeatureMap* first_features = nullptr;
  bool any_missing = false;
  for (const auto& inst : instances_) {
    require(inst.scene < num_scenes_, "scene id " + std::to_string(inst.scene) + " out of range");
    require(inst.label_map.num_objects() == num_objects_, "instance label map disagrees on L");
    if (!inst.feature_map) {
      any_missing = true;
      continue;
    }
    if (!first_features) {
      first_features = &*inst.feature_map;
    } else {
      require(inst.feature_map->width() == first_features->width() &&
                  inst.feature_map->height() == first_features->height() &&
                  inst.feature_map->channels() == first_features->channels(),
              "feature maps in a corpus must share (w1, h1, c)");
    }
  }
  require(!(any_missing && first_features), "feature maps must be present on all instances or none");
}

bool Corpus::has_features() const {
  return !instances_.empty() && instances_.front().feature_map.has_value();
}

std::string serialize_label_map(const LabelMap& map) {
  detail::ByteWriter w;
  w.reserve(20 + 2 * map.size());
  w.magic(kLabelMagic);
  w.u32(kVersion);
  w.u32(map.width());
  w.u32(map.height());
  w.u32(map.num_objects());
  for (auto v : map.labels()) w.u16(v);
  return w.take();
}

LabelMap parse_label_map(std::string_view bytes) {
  detail::ByteReader r(bytes);
  r.header(kLabelMagic, kVersion);
  const std::uint32_t width = r.u32();
  const std::uint32_t height = r.u32();
  const std::uint32_t num_objects = r.u32();
  const std::size_t count = std::size_t{width} * height;
  r.expect_remaining(2 * count, "label map");
  std::vector<std::uint16_t> labels(count);
  for (auto& v : labels) v = r.u16();
  r.expect_end("label map");
  return LabelMap(width, height, num_objects, std::move(labels));
}

LabelMap load_label_map(const fs::path& path) { return parse_label_map(read_file(path)); }

void save_label_map(const LabelMap& map, const fs::path& path) {
  write_file_atomic(path, serialize_label_map(map));
}

std::string serialize_feature_map(const FeatureMap& map) {
  detail::ByteWriter w;
  w.reserve(20 + 4 * map.values().size());
  w.magic(kFeatureMagic);
  w.u32(kVersion);
  w.u32(map.width());
  w.u32(map.height());
  w.u32(map.channels());
  for (double v : map.values()) w.f32(static_cast<float>(v));
  return w.take();
}

FeatureMap parse_feature_map(std::string_view bytes) {
  detail::ByteReader r(bytes);
  r.header(kFeatureMagic, kVersion);
  const std::uint32_t width = r.u32();
  const std::uint32_t height = r.u32();
  const std::uint32_t channels = r.u32();
  const std::size_t count = std::size_t{width} * height * channels;
  r.expect_remaining(4 * count, "feature map");
  std::vector<double> values(count);
  for (auto& v : values) v = static_cast<double>(r.f32());
  r.expect_end("feature map");
  return FeatureMap(width, height, channels, std::move(values));
}

FeatureMap load_feature_map(const fs::path& path) { return parse_feature_map(read_file(path)); }

void save_feature_map(const FeatureMap& map, const fs::path& path) {
  write_file_atomic(path, serialize_feature_map(map));
}

Corpus load_manifest(const fs::path& path, Split split) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line) || !line.starts_with(kManifestTag))
    throw FormatError("not a DGN manifest: " + path.string());
  unsigned long long num_scenes = 0, num_objects = 0;
  if (std::sscanf(line.c_str() + kManifestTag.size(), " C=%llu L=%llu", &num_scenes, &num_objects) != 2)
    throw FormatError("malformed manifest header: " + line);
  require(num_scenes > 0 && num_scenes <= 0xFFFFFFFFull, "manifest C out of range");
  require(num_objects > 0 && num_objects <= 65536ull, "manifest L out of range");

  const fs::path base = path.parent_path();
  std::vector<Instance> instances;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab1 = line.find('\t');
    const auto tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
    if (tab2 == std::string::npos)
      throw FormatError("manifest line " + std::to_string(line_no) + ": expected three tab-separated fields");
    const std::string scene_str = line.substr(0, tab1);
    const std::string label_path = line.substr(tab1 + 1, tab2 - tab1 - 1);
    const std::string feature_path = line.substr(tab2 + 1);
    std::size_t used = 0;
    unsigned long scene = 0;
    try {
      scene = std::stoul(scene_str, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != scene_str.size())
      throw FormatError("manifest line " + std::to_string(line_no) + ": bad scene id '" + scene_str + "'");
    Instance inst{static_cast<SceneId>(scene), load_label_map(base / label_path), std::nullopt};
    if (feature_path != "-") inst.feature_map = load_feature_map(base / feature_path);
    instances.push_back(std::move(inst));
  }
  return Corpus(static_cast<std::uint32_t>(num_scenes), static_cast<std::uint32_t>(num_objects), split,
                std::move(instances));
}

fs::path save_corpus(const Corpus& corpus, const fs::path& dir, const std::string& name) {
  std::error_code ec;
  fs::create_directories(dir / name, ec);
  if (ec) throw IoError("cannot create directory " + (dir / name).string());

  std::ostringstream manifest;
  manifest << kManifestTag << " C=" << corpus.num_scenes() << " L=" << corpus.num_objects() << '\n';
  std::size_t index = 0;
  for (const auto& inst : corpus.instances()) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "%06zu", index++);
    const std::string label_rel = name + "/" + stem + ".dgnl";
    save_label_map(inst.label_map, dir / label_rel);
    std::string feature_rel = "-";
    if (inst.feature_map) {
      feature_rel = name + "/" + stem + ".dgnf";
      save_feature_map(*inst.feature_map, dir / feature_rel);
    }
    manifest << inst.scene << '\t' << label_rel << '\t' << feature_rel << '\n';
  }
  const fs::path manifest_path = dir / (name + ".manifest");
  write_file_atomic(manifest_path, manifest.str());
  return manifest_path;
}

LabelMap nn_resize(const LabelMap& map, std::uint32_t out_w, std::uint32_t out_h) {
  require(out_w > 0 && out_h > 0, "resize target must be at least 1x1");
  auto source_index = [](std::uint32_t out, std::uint32_t out_size, std::uint32_t in_size) {
    // floor((out + 0.5) * in / out_size) in exact integer arithmetic.
    const std::uint64_t s = ((2 * std::uint64_t{out} + 1) * in_size) / (2 * std::uint64_t{out_size});
    return static_cast<std::uint32_t>(std::min<std::uint64_t>(s, in_size - 1));
  };
  std::vector<std::uint16_t> labels(std::size_t{out_w} * out_h);
  for (std::uint32_t y = 0; y < out_h; ++y) {
    const std::uint32_t sy = source_index(y, out_h, map.height());
    for (std::uint32_t x = 0; x < out_w; ++x) {
      const std::uint32_t sx = source_index(x, out_w, map.width());
      labels[std::size_t{y} * out_w + x] = static_cast<std::uint16_t>(map.at(sx, sy));
    }
  }
  return LabelMap(out_w, out_h, map.num_objects(), std::move(labels));
}

std::vector<ObjectId> object_presence(const LabelMap& map) {
  std::vector<bool> seen(map.num_objects(), false);
  for (auto v : map.labels()) seen[v] = true;
  std::vector<ObjectId> ids;
  for (ObjectId i = 0; i < map.num_objects(); ++i)
    if (seen[i]) ids.push_back(i);
  return ids;
}

}  // namespace dgn
