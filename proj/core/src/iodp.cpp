#include "dgn/iodp.hpp"

#include <algorithm>
#include <cmath>

#include "binary_io.hpp"
#include "dgn/error.hpp"
#include "dgn/io.hpp"

namespace dgn {

namespace {

constexpr std::string_view kMagic = "DGNP";
constexpr std::uint32_t kVersion = 1;

}  // namespace

CooccurrenceCounts::CooccurrenceCounts(std::uint32_t num_scenes, std::uint32_t num_objects)
    : num_scenes_(num_scenes),
      num_objects_(num_objects),
      scene_(num_scenes, 0),
      object_(std::size_t{num_scenes} * num_objects, 0),
      pair_(std::size_t{num_scenes} * num_objects * num_objects, 0) {}

void CooccurrenceCounts::add_instance(SceneId c, std::span<const ObjectId> present) {
  require(c < num_scenes_, "scene id out of range");
  ++scene_[c];
  for (ObjectId i : present) {
    require(i < num_objects_, "object id out of range");
    ++object_[std::size_t{c} * num_objects_ + i];
    for (ObjectId j : present) ++pair_[pair_index(c, i, j)];
  }
}

void CooccurrenceCounts::merge(const CooccurrenceCounts& other) {
  require(other.num_scenes_ == num_scenes_ && other.num_objects_ == num_objects_,
          "cannot merge counts of different shapes");
  for (std::size_t k = 0; k < scene_.size(); ++k) scene_[k] += other.scene_[k];
  for (std::size_t k = 0; k < object_.size(); ++k) object_[k] += other.object_[k];
  for (std::size_t k = 0; k < pair_.size(); ++k) pair_[k] += other.pair_[k];
}

CooccurrenceCounts count(const Corpus& corpus) {
  require(!corpus.empty(), "cannot count an empty corpus");
  CooccurrenceCounts counts(corpus.num_scenes(), corpus.num_objects());
  for (const auto& inst : corpus.instances()) counts.add_instance(inst.scene, object_presence(inst.label_map));
  for (SceneId c = 0; c < corpus.num_scenes(); ++c)
    if (counts.instances(c) == 0)
      throw ValidationError("scene category " + std::to_string(c) + " has no instances");
  return counts;
}

double cooccurrence_prob(const CooccurrenceCounts& counts, CooccurrenceMode mode, ObjectId i, ObjectId j,
                         SceneId c) {
  require(c < counts.num_scenes() && i < counts.num_objects() && j < counts.num_objects(),
          "cooccurrence index out of range");
  const double scenes = static_cast<double>(counts.instances(c));
  require(scenes > 0.0, "scene category " + std::to_string(c) + " has no instances");
  switch (mode) {
    case CooccurrenceMode::NonIndependent:
      return static_cast<double>(counts.pair(c, i, j)) / scenes;
    case CooccurrenceMode::Independent:
      return (static_cast<double>(counts.object(c, i)) * static_cast<double>(counts.object(c, j))) /
             (scenes * scenes);
  }
  throw ValidationError("unknown co-occurrence mode");
}

std::optional<std::vector<double>> posterior(std::span<const double> likelihoods) {
  require(!likelihoods.empty(), "posterior over zero scenes");
  // Uniform prior 1/C cancels between numerator and denominator.
  double total = 0.0;
  for (double v : likelihoods) {
    require(v >= 0.0 && std::isfinite(v), "likelihoods must be finite and non-negative");
    total += v;
  }
  if (total == 0.0) return std::nullopt;
  std::vector<double> p(likelihoods.begin(), likelihoods.end());
  for (double& v : p) v /= total;
  return p;
}

double dispersion(std::span<const double> p, Dispersion kind) {
  require(!p.empty(), "dispersion of an empty vector");
  const double n = static_cast<double>(p.size());
  switch (kind) {
    case Dispersion::Range: {
      const auto [lo, hi] = std::minmax_element(p.begin(), p.end());
      return *hi - *lo;
    }
    case Dispersion::StdDev:
    case Dispersion::CoeffVar: {
      // Shifted by p[0] so that equal entries give a variance of exactly 0;
      // the square-root passivation would otherwise blow a 1e-33 rounding
      // residue up to ~1e-8.
      const double shift = p[0];
      double sum = 0.0, s1 = 0.0, s2 = 0.0;
      for (double v : p) {
        sum += v;
        s1 += v - shift;
        s2 += (v - shift) * (v - shift);
      }
      const double var = std::max(0.0, (s2 - s1 * s1 / n) / n);
      const double sigma = std::sqrt(var);
      return kind == Dispersion::StdDev ? sigma : sigma / (sum / n);
    }
  }
  throw ValidationError("unknown dispersion metric");
}

double dispersion(const std::vector<double>& p, Dispersion kind) {
  return dispersion(std::span<const double>(p), kind);
}

double dispersion(const std::optional<std::vector<double>>& p, Dispersion kind) {
  return p ? dispersion(std::span<const double>(*p), kind) : 0.0;
}

double passivate(double theta, bool enabled) {
  require(theta >= 0.0, "dispersion must be non-negative");
  return enabled ? std::sqrt(theta) : theta;
}

Prototype build_prototype(const CooccurrenceCounts& counts, CooccurrenceMode mode, DispersionMetric metric) {
  const std::uint32_t num_objects = counts.num_objects();
  const std::uint32_t num_scenes = counts.num_scenes();
  for (SceneId c = 0; c < num_scenes; ++c)
    require(counts.instances(c) > 0, "scene category " + std::to_string(c) + " has no instances");

  Prototype proto{num_objects, num_scenes, mode, metric, Matrix(num_objects, num_objects)};
  std::vector<double> likelihood(num_scenes);
  for (ObjectId i = 0; i < num_objects; ++i) {
    // Both co-occurrence modes are symmetric in (i, j); fill the upper
    // triangle and mirror it.
    for (ObjectId j = i; j < num_objects; ++j) {
      for (SceneId c = 0; c < num_scenes; ++c) likelihood[c] = cooccurrence_prob(counts, mode, i, j, c);
      const double value = passivate(dispersion(posterior(likelihood), metric.kind), metric.passivate);
      proto.omega(i, j) = value;
      proto.omega(j, i) = value;
    }
  }
  return proto;
}

Prototype build_prototype(const Corpus& corpus, CooccurrenceMode mode, DispersionMetric metric) {
  return build_prototype(count(corpus), mode, metric);
}

std::string serialize_prototype(const Prototype& p) {
  require(p.omega.rows() == p.num_objects && p.omega.cols() == p.num_objects, "prototype matrix is not L x L");
  detail::ByteWriter w;
  w.reserve(23 + 8 * p.omega.size());
  w.magic(kMagic);
  w.u32(kVersion);
  w.u32(p.num_objects);
  w.u8(static_cast<std::uint8_t>(p.mode));
  w.u8(static_cast<std::uint8_t>(p.metric.kind));
  w.u8(p.metric.passivate ? 1 : 0);
  w.u32(p.num_scenes);
  for (double v : p.omega.values()) w.f64(v);
  return w.take();
}

Prototype parse_prototype(std::string_view bytes) {
  detail::ByteReader r(bytes);
  r.header(kMagic, kVersion);
  Prototype p;
  p.num_objects = r.u32();
  const std::uint8_t mode = r.u8();
  const std::uint8_t metric = r.u8();
  const std::uint8_t passivated = r.u8();
  p.num_scenes = r.u32();
  if (mode > 1) throw FormatError("prototype: unknown co-occurrence mode byte " + std::to_string(mode));
  if (metric > 2) throw FormatError("prototype: unknown metric byte " + std::to_string(metric));
  if (passivated > 1) throw FormatError("prototype: passivated byte must be 0 or 1");
  require(p.num_objects > 0 && p.num_scenes > 0, "prototype: L and C must be positive");
  p.mode = static_cast<CooccurrenceMode>(mode);
  p.metric = DispersionMetric{static_cast<Dispersion>(metric), passivated == 1};
  const std::size_t count = std::size_t{p.num_objects} * p.num_objects;
  r.expect_remaining(8 * count, "prototype");
  std::vector<double> values(count);
  for (double& v : values) {
    v = r.f64();
    require(std::isfinite(v) && v >= 0.0, "prototype entries must be finite and non-negative");
  }
  r.expect_end("prototype");
  p.omega = Matrix(p.num_objects, p.num_objects, std::move(values));
  return p;
}

Prototype load_prototype(const std::filesystem::path& path) { return parse_prototype(read_file(path)); }

void save_prototype(const Prototype& prototype, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_prototype(prototype));
}

std::string_view to_string(CooccurrenceMode mode) {
  return mode == CooccurrenceMode::Independent ? "independent" : "nonindependent";
}

std::string_view to_string(Dispersion kind) {
  switch (kind) {
    case Dispersion::Range: return "range";
    case Dispersion::StdDev: return "std";
    case Dispersion::CoeffVar: return "cv";
  }
  return "?";
}

}  // namespace dgn
