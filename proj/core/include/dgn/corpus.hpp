#pragma once

// Label maps, feature maps and corpora, plus their on-disk formats.
//
//   .dgnl  "DGNL" u32 version=1, u32 width, u32 height, u32 L,
//          then width*height u16 labels, row-major (index = y*width + x)
//   .dgnf  "DGNF" u32 version=1, u32 w1, u32 h1, u32 c,
//          then w1*h1*c f32 values, index = (y*w1 + x)*c + k
//   manifest  "#DGN-MANIFEST v1 C=<C> L=<L>" then one line per instance:
//          scene_id \t label-map path \t feature-map path or "-"
//
// All integers and floats are little-endian.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dgn {

using ObjectId = std::uint32_t;
using SceneId = std::uint32_t;

/// Per-pixel object ids. Immutable; every label is < num_objects().
class LabelMap {
 public:
  LabelMap(std::uint32_t width, std::uint32_t height, std::uint32_t num_objects,
           std::vector<std::uint16_t> labels);

  std::uint32_t width() const { return width_; }
  std::uint32_t height() const { return height_; }
  std::uint32_t num_objects() const { return num_objects_; }
  std::size_t size() const { return labels_.size(); }
  std::span<const std::uint16_t> labels() const { return labels_; }
  ObjectId at(std::uint32_t x, std::uint32_t y) const { return labels_[std::size_t{y} * width_ + x]; }

  bool operator==(const LabelMap&) const = default;

 private:
  std::uint32_t width_;
  std::uint32_t height_;
  std::uint32_t num_objects_;
  std::vector<std::uint16_t> labels_;
};

/// Dense w1 x h1 x c feature grid, row-major pixels, channel-minor.
class FeatureMap {
 public:
  FeatureMap(std::uint32_t width, std::uint32_t height, std::uint32_t channels, std::vector<double> values);

  std::uint32_t width() const { return width_; }
  std::uint32_t height() const { return height_; }
  std::uint32_t channels() const { return channels_; }
  std::size_t pixel_count() const { return std::size_t{width_} * height_; }
  std::span<const double> values() const { return values_; }
  std::span<const double> pixel(std::size_t index) const {
    return std::span<const double>(values_).subspan(index * channels_, channels_);
  }

  bool operator==(const FeatureMap&) const = default;

 private:
  std::uint32_t width_;
  std::uint32_t height_;
  std::uint32_t channels_;
  std::vector<double> values_;
};

struct Instance {
  SceneId scene = 0;
  LabelMap label_map;
  std::optional<FeatureMap> feature_map;
};

enum class Split { Train, Test };

/// Ordered list of instances sharing one object vocabulary.
class Corpus {
 public:
  Corpus(std::uint32_t num_scenes, std::uint32_t num_objects, Split split, std::vector<Instance> instances);

  std::uint32_t num_scenes() const { return num_scenes_; }
  std::uint32_t num_objects() const { return num_objects_; }
  Split split() const { return split_; }
  std::span<const Instance> instances() const { return instances_; }
  std::size_t size() const { return instances_.size(); }
  bool empty() const { return instances_.empty(); }
  bool has_features() const;

 private:
  std::uint32_t num_scenes_;
  std::uint32_t num_objects_;
  Split split_;
  std::vector<Instance> instances_;
};

// ---- label map / feature map files ----

std::string serialize_label_map(const LabelMap& map);
LabelMap parse_label_map(std::string_view bytes);
LabelMap load_label_map(const std::filesystem::path& path);
void save_label_map(const LabelMap& map, const std::filesystem::path& path);

// Values are stored as 32-bit floats; saving rounds each value to float.
std::string serialize_feature_map(const FeatureMap& map);
FeatureMap parse_feature_map(std::string_view bytes);
FeatureMap load_feature_map(const std::filesystem::path& path);
void save_feature_map(const FeatureMap& map, const std::filesystem::path& path);

// ---- manifests ----

Corpus load_manifest(const std::filesystem::path& path, Split split);

/// Writes `<dir>/<name>.manifest` plus one .dgnl (and .dgnf) per instance
/// under `<dir>/<name>/`. Returns the manifest path.
std::filesystem::path save_corpus(const Corpus& corpus, const std::filesystem::path& dir, const std::string& name);

// ---- label map operations ----

/// Nearest-neighbour resize, center-aligned:
/// sx = clamp(floor((x + 0.5) * width / out_w), 0, width - 1), same for y.
LabelMap nn_resize(const LabelMap& map, std::uint32_t out_w, std::uint32_t out_h);

/// Sorted ids of the objects carried by at least one pixel.
std::vector<ObjectId> object_presence(const LabelMap& map);

// ---- synthetic corpora ----

/// Planted benchmark: each scene owns a disjoint block of "discriminative"
/// object ids, all scenes share a block of common ids. Label maps are grids of
/// cells; every cell holds one object drawn uniformly from the scene's
/// discriminative ids plus the common ids.
struct SyntheticSpec {
  std::uint32_t num_scenes = 7;
  std::uint32_t num_objects = 20;
  std::uint32_t discriminative_per_scene = 2;
  std::uint32_t common_objects = 6;
  std::uint32_t cells_per_side = 4;
  std::uint32_t train_per_scene = 100;
  std::uint32_t test_per_scene = 20;
  std::uint32_t channels = 8;
  double noise_stddev = 1.0;
  std::uint64_t seed = 304;
  // Pixels per cell side in the label map and in the feature map.
  std::uint32_t label_cell_pixels = 4;
  std::uint32_t feature_cell_pixels = 2;
};

struct SyntheticCorpora {
  Corpus train;
  Corpus test;
};

/// Pure function of `spec`. Throws ValidationError on an infeasible spec.
SyntheticCorpora generate_synthetic_corpus(const SyntheticSpec& spec);

/// The fixed per-object feature embedding used by the generator.
std::vector<double> synthetic_object_embedding(const SyntheticSpec& spec, ObjectId object);

}  // namespace dgn
