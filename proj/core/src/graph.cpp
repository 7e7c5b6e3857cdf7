#include "dgn/graph.hpp"

#include <string>

#include "dgn/error.hpp"

namespace dgn {

NodeSet flatten(const FeatureMap& features, const LabelMap& labels) {
  if (labels.width() != features.width() || labels.height() != features.height())
    throw ValidationError("label map is " + std::to_string(labels.width()) + "x" + std::to_string(labels.height()) +
                          " but feature map is " + std::to_string(features.width()) + "x" +
                          std::to_string(features.height()));
  const std::size_t n = features.pixel_count();
  NodeSet nodes{Matrix(n, features.channels(), std::vector<double>(features.values().begin(), features.values().end())),
                std::vector<ObjectId>(labels.labels().begin(), labels.labels().end())};
  return nodes;
}

Matrix extract_local_knowledge(std::span<const ObjectId> semantics, const Prototype& prototype) {
  const std::size_t n = semantics.size();
  for (ObjectId m : semantics)
    if (m >= prototype.num_objects)
      throw ValidationError("node semantic " + std::to_string(m) + " out of range for prototype L=" +
                            std::to_string(prototype.num_objects));
  Matrix a0(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    auto omega_row = prototype.omega.row(semantics[i]);
    auto dst = a0.row(i);
    for (std::size_t j = 0; j < n; ++j) dst[j] = omega_row[semantics[j]];
  }
  return a0;
}

Matrix row_normalize(const Matrix& raw) {
  Matrix a = raw;
  const std::size_t n = a.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto r = a.row(i);
    double total = 0.0;
    for (double v : r) {
      require(v >= 0.0, "raw knowledge must be non-negative");
      total += v;
    }
    if (total == 0.0) {
      for (double& v : r) v = 1.0 / static_cast<double>(n);
    } else {
      for (double& v : r) v /= total;
    }
  }
  return a;
}

DiscriminativeGraph build_graph(const FeatureMap& features, const LabelMap& resized_labels,
                                const Prototype& prototype) {
  DiscriminativeGraph g{flatten(features, resized_labels), Matrix{}, Matrix{}};
  g.raw_knowledge = extract_local_knowledge(g.nodes.semantics, prototype);
  g.adjacency = row_normalize(g.raw_knowledge);
  return g;
}

DiscriminativeGraph build_graph(const Instance& instance, const Prototype& prototype) {
  require(instance.feature_map.has_value(), "instance has no feature map");
  const auto& f = *instance.feature_map;
  return build_graph(f, nn_resize(instance.label_map, f.width(), f.height()), prototype);
}

}  // namespace dgn
