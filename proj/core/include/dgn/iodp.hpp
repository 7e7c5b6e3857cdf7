#pragma once

// Inter-object discriminative prototype.
//
// For every object pair (i, j) the scene posterior P(S | o_i, o_j) is formed
// from per-scene co-occurrence likelihoods under a uniform scene prior. The
// dispersion of that posterior across scenes (range, standard deviation or
// coefficient of variation, optionally square-rooted) scores how strongly the
// pair discriminates between scenes. The L x L matrix of scores is Omega.
//
// Prototype file (.dgnp), little-endian:
//   "DGNP" u32 version=1, u32 L, u8 mode, u8 metric, u8 passivated, u32 C,
//   then L*L f64 values, row-major.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dgn/corpus.hpp"
#include "dgn/matrix.hpp"

namespace dgn {

enum class CooccurrenceMode : std::uint8_t {
  NonIndependent = 0,  // N(o_i, o_j) / N(S)
  Independent = 1,     // N(o_i) * N(o_j) / N(S)^2
};

enum class Dispersion : std::uint8_t { Range = 0, StdDev = 1, CoeffVar = 2 };

struct DispersionMetric {
  Dispersion kind = Dispersion::CoeffVar;
  bool passivate = true;  // take the square root of the dispersion

  bool operator==(const DispersionMetric&) const = default;
};

/// Presence counts per scene. Object i "occurs" in an instance when at least
/// one pixel of its full-resolution label map carries i.
class CooccurrenceCounts {
 public:
  CooccurrenceCounts(std::uint32_t num_scenes, std::uint32_t num_objects);

  std::uint32_t num_scenes() const { return num_scenes_; }
  std::uint32_t num_objects() const { return num_objects_; }

  std::uint64_t instances(SceneId c) const { return scene_[c]; }
  std::uint64_t object(SceneId c, ObjectId i) const { return object_[std::size_t{c} * num_objects_ + i]; }
  std::uint64_t pair(SceneId c, ObjectId i, ObjectId j) const { return pair_[pair_index(c, i, j)]; }

  /// Adds one instance of scene c whose present objects are `present`.
  void add_instance(SceneId c, std::span<const ObjectId> present);

  /// Element-wise sum; both operands must share C and L.
  void merge(const CooccurrenceCounts& other);

  bool operator==(const CooccurrenceCounts&) const = default;

 private:
  std::size_t pair_index(SceneId c, ObjectId i, ObjectId j) const {
    return (std::size_t{c} * num_objects_ + i) * num_objects_ + j;
  }

  std::uint32_t num_scenes_;
  std::uint32_t num_objects_;
  std::vector<std::uint64_t> scene_;
  std::vector<std::uint64_t> object_;
  std::vector<std::uint64_t> pair_;
};

/// Throws ValidationError if a scene has no instances.
CooccurrenceCounts count(const Corpus& corpus);

double cooccurrence_prob(const CooccurrenceCounts& counts, CooccurrenceMode mode, ObjectId i, ObjectId j,
                         SceneId c);

/// Likelihoods normalized under a uniform prior. Returns nullopt when every
/// likelihood is zero (the pair was never observed in any scene).
std::optional<std::vector<double>> posterior(std::span<const double> likelihoods);

/// Dispersion of a posterior vector; 0 for a zero-evidence (nullopt) pair.
/// StdDev is the population standard deviation; CoeffVar divides it by the
/// mean 1/C.
double dispersion(std::span<const double> posterior, Dispersion kind);
double dispersion(const std::vector<double>& posterior, Dispersion kind);
double dispersion(const std::optional<std::vector<double>>& posterior, Dispersion kind);

double passivate(double theta, bool enabled = true);

struct Prototype {
  std::uint32_t num_objects = 0;
  std::uint32_t num_scenes = 0;
  CooccurrenceMode mode = CooccurrenceMode::Independent;
  DispersionMetric metric;
  Matrix omega;  // num_objects x num_objects

  double at(ObjectId i, ObjectId j) const { return omega(i, j); }
  bool operator==(const Prototype&) const = default;
};

Prototype build_prototype(const Corpus& corpus, CooccurrenceMode mode, DispersionMetric metric);
Prototype build_prototype(const CooccurrenceCounts& counts, CooccurrenceMode mode, DispersionMetric metric);

std::string serialize_prototype(const Prototype& prototype);
Prototype parse_prototype(std::string_view bytes);
Prototype load_prototype(const std::filesystem::path& path);
void save_prototype(const Prototype& prototype, const std::filesystem::path& path);

std::string_view to_string(CooccurrenceMode mode);
std::string_view to_string(Dispersion kind);

}  // namespace dgn
