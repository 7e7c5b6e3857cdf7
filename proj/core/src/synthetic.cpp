#include <cmath>
#include <random>

#include "dgn/corpus.hpp"
#include "dgn/error.hpp"

namespace dgn {

namespace {

// Stream tags keep embedding and instance draws on independent engines.
constexpr std::uint64_t kEmbeddingStream = 0x656d62;
constexpr std::uint64_t kInstanceStream = 0x696e73;

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream, std::uint64_t a, std::uint64_t b = 0,
                            std::uint64_t c = 0) {
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(seed), hi(seed), lo(stream), lo(a), hi(a), lo(b), lo(c)};
  return std::mt19937_64(seq);
}

void validate(const SyntheticSpec& s) {
  require(s.num_scenes > 0 && s.num_objects > 0, "synthetic spec: C and L must be positive");
  require(s.num_objects <= 65536u, "synthetic spec: L must fit 16-bit labels");
  require(s.discriminative_per_scene > 0, "synthetic spec: need at least one discriminative object per scene");
  require(s.common_objects > 0, "synthetic spec: need at least one common object");
  require(s.cells_per_side > 0 && s.label_cell_pixels > 0 && s.feature_cell_pixels > 0,
          "synthetic spec: grid sizes must be positive");
  require(s.train_per_scene > 0 && s.test_per_scene > 0, "synthetic spec: instance counts must be positive");
  require(s.channels > 0, "synthetic spec: channel count must be positive");
  require(std::isfinite(s.noise_stddev) && s.noise_stddev >= 0.0, "synthetic spec: noise must be finite and >= 0");
  const std::uint64_t needed =
      std::uint64_t{s.discriminative_per_scene} * s.num_scenes + std::uint64_t{s.common_objects};
  require(needed <= s.num_objects, "synthetic spec infeasible: discriminative*C + common = " +
                                       std::to_string(needed) + " exceeds L = " + std::to_string(s.num_objects));
}

Instance make_instance(const SyntheticSpec& s, const std::vector<std::vector<double>>& embeddings, SceneId scene,
                       Split split, std::uint32_t index) {
  auto rng = make_engine(s.seed, kInstanceStream, split == Split::Train ? 0 : 1, scene, index);

  const std::uint32_t disc = s.discriminative_per_scene;
  const std::uint32_t pool = disc + s.common_objects;
  const ObjectId disc_base = scene * disc;
  const ObjectId common_base = s.num_scenes * disc;
  auto pool_object = [&](std::uint32_t k) -> ObjectId { return k < disc ? disc_base + k : common_base + (k - disc); };

  const std::uint32_t cells = s.cells_per_side;
  std::vector<ObjectId> grid(std::size_t{cells} * cells);
  std::uniform_int_distribution<std::uint32_t> pick(0, pool - 1);
  bool has_disc = false;
  for (auto& cell : grid) {
    const std::uint32_t k = pick(rng);
    has_disc |= k < disc;
    cell = pool_object(k);
  }
  if (!has_disc) {
    std::uniform_int_distribution<std::size_t> which_cell(0, grid.size() - 1);
    std::uniform_int_distribution<std::uint32_t> which_disc(0, disc - 1);
    const std::size_t at = which_cell(rng);
    grid[at] = disc_base + which_disc(rng);
  }

  const std::uint32_t lw = cells * s.label_cell_pixels;
  std::vector<std::uint16_t> labels(std::size_t{lw} * lw);
  for (std::uint32_t y = 0; y < lw; ++y)
    for (std::uint32_t x = 0; x < lw; ++x)
      labels[std::size_t{y} * lw + x] =
          static_cast<std::uint16_t>(grid[std::size_t{y / s.label_cell_pixels} * cells + x / s.label_cell_pixels]);

  const std::uint32_t fw = cells * s.feature_cell_pixels;
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> values(std::size_t{fw} * fw * s.channels);
  std::size_t pos = 0;
  for (std::uint32_t y = 0; y < fw; ++y) {
    for (std::uint32_t x = 0; x < fw; ++x) {
      const ObjectId obj = grid[std::size_t{y / s.feature_cell_pixels} * cells + x / s.feature_cell_pixels];
      for (std::uint32_t k = 0; k < s.channels; ++k) {
        // Rounded to float so in-memory corpora equal their reloaded files.
        const double v = embeddings[obj][k] + s.noise_stddev * noise(rng);
        values[pos++] = static_cast<double>(static_cast<float>(v));
      }
    }
  }
  return Instance{scene, LabelMap(lw, lw, s.num_objects, std::move(labels)),
                  FeatureMap(fw, fw, s.channels, std::move(values))};
}

Corpus make_split(const SyntheticSpec& s, const std::vector<std::vector<double>>& embeddings, Split split) {
  const std::uint32_t per_scene = split == Split::Train ? s.train_per_scene : s.test_per_scene;
  std::vector<Instance> instances;
  instances.reserve(std::size_t{per_scene} * s.num_scenes);
  for (SceneId scene = 0; scene < s.num_scenes; ++scene)
    for (std::uint32_t i = 0; i < per_scene; ++i) instances.push_back(make_instance(s, embeddings, scene, split, i));
  return Corpus(s.num_scenes, s.num_objects, split, std::move(instances));
}

}  // namespace

std::vector<double> synthetic_object_embedding(const SyntheticSpec& spec, ObjectId object) {
  require(object < spec.num_objects, "object id out of range");
  auto rng = make_engine(spec.seed, kEmbeddingStream, object);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> e(spec.channels);
  for (auto& v : e) v = gauss(rng);
  return e;
}

SyntheticCorpora generate_synthetic_corpus(const SyntheticSpec& spec) {
  validate(spec);
  std::vector<std::vector<double>> embeddings;
  embeddings.reserve(spec.num_objects);
  for (ObjectId i = 0; i < spec.num_objects; ++i) embeddings.push_back(synthetic_object_embedding(spec, i));
  return SyntheticCorpora{make_split(spec, embeddings, Split::Train), make_split(spec, embeddings, Split::Test)};
}

}  // namespace dgn
