#pragma once

// Discriminative graph over the pixels of a feature map. Node i is pixel
// (i mod w1, i div w1); its semantics come from the label map resized to the
// feature resolution. Edge weights gather Omega by node semantics and are
// then row-normalized.

#include <span>
#include <vector>

#include "dgn/corpus.hpp"
#include "dgn/iodp.hpp"
#include "dgn/matrix.hpp"

namespace dgn {

struct NodeSet {
  Matrix features;                 // n x c
  std::vector<ObjectId> semantics;  // length n

  std::size_t size() const { return semantics.size(); }
};

struct DiscriminativeGraph {
  NodeSet nodes;
  Matrix raw_knowledge;  // A0[i][j] = Omega[m_i][m_j]
  Matrix adjacency;      // A, row-stochastic
};

/// Requires `labels` to have exactly the feature map's width and height.
NodeSet flatten(const FeatureMap& features, const LabelMap& labels);

/// n x n gather: A0[i][j] = Omega[semantics[i]][semantics[j]].
Matrix extract_local_knowledge(std::span<const ObjectId> semantics, const Prototype& prototype);

/// Divides each row by its sum. An all-zero row becomes uniform 1/n.
Matrix row_normalize(const Matrix& raw);

DiscriminativeGraph build_graph(const FeatureMap& features, const LabelMap& resized_labels,
                                const Prototype& prototype);

/// Resizes the instance's label map to its feature resolution, then builds
/// the graph. The instance must carry a feature map.
DiscriminativeGraph build_graph(const Instance& instance, const Prototype& prototype);

}  // namespace dgn
