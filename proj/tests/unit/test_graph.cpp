#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "dgn/error.hpp"
#include "dgn/graph.hpp"
#include "dgn/nn.hpp"
#include "dgn/oracle.hpp"
#include "test_support.hpp"

namespace dgn {
namespace {

using testing::labels;
using testing::toy_corpus;

Prototype toy_prototype() {
  return build_prototype(toy_corpus(), CooccurrenceMode::NonIndependent, {Dispersion::CoeffVar, true});
}

Prototype constant_prototype(std::uint32_t L, double value) {
  return Prototype{L, 2, CooccurrenceMode::Independent, {}, Matrix(L, L, value)};
}

TEST(Flatten, NodeOrderIsRowMajor) {
  const FeatureMap f(2, 2, 1, {10, 11, 12, 13});
  const auto nodes = flatten(f, labels(2, 2, 4, {0, 1, 2, 3}));
  ASSERT_EQ(nodes.size(), 4u);
  EXPECT_EQ(nodes.features, (Matrix{{10}, {11}, {12}, {13}}));
  EXPECT_EQ(nodes.semantics, (std::vector<ObjectId>{0, 1, 2, 3}));
}

TEST(Flatten, SinglePixelAndMismatch) {
  const FeatureMap f(1, 1, 3, {1, 2, 3});
  const auto nodes = flatten(f, labels(1, 1, 2, {1}));
  EXPECT_EQ(nodes.features.rows(), 1u);
  EXPECT_EQ(nodes.features.cols(), 3u);
  EXPECT_THROW(flatten(f, labels(2, 1, 2, {0, 1})), ValidationError);
}

TEST(LocalKnowledge, Examples) {
  const auto proto = toy_prototype();
  EXPECT_EQ(extract_local_knowledge(std::vector<ObjectId>{0, 1}, proto), (Matrix{{1, 1}, {1, 0}}));
  EXPECT_EQ(max_abs(extract_local_knowledge(std::vector<ObjectId>{1, 1, 1}, proto)), 0.0);
  EXPECT_EQ(extract_local_knowledge(std::vector<ObjectId>{0}, proto), (Matrix{{proto.at(0, 0)}}));
  EXPECT_THROW(extract_local_knowledge(std::vector<ObjectId>{3}, proto), ValidationError);
}

TEST(RowNormalize, Examples) {
  EXPECT_EQ(row_normalize(Matrix{{2, 1, 1}, {0, 0, 4}, {1, 1, 2}}).row(0)[0], 0.5);
  const auto r = row_normalize(Matrix{{2, 1, 1}, {1, 1, 2}, {0, 0, 3}});
  EXPECT_EQ(r(0, 1), 0.25);
  EXPECT_EQ(row_normalize(Matrix{{1, 1}, {1, 0}}), (Matrix{{0.5, 0.5}, {1, 0}}));
  EXPECT_EQ(row_normalize(Matrix{{0, 0}, {1, 3}}), (Matrix{{0.5, 0.5}, {0.25, 0.75}}));
  EXPECT_THROW(row_normalize(Matrix{{-1, 2}, {1, 1}}), ValidationError);
}

TEST(BuildGraph, ToyComposition) {
  const FeatureMap f(2, 1, 1, {1, 0});
  const auto g = build_graph(f, labels(2, 1, 3, {0, 1}), toy_prototype());
  EXPECT_EQ(g.raw_knowledge, (Matrix{{1, 1}, {1, 0}}));
  EXPECT_EQ(g.adjacency, (Matrix{{0.5, 0.5}, {1, 0}}));
}

TEST(BuildGraph, UniformAndSingleNode) {
  const FeatureMap f(3, 1, 1, {1, 2, 3});
  const auto g = build_graph(f, labels(3, 1, 3, {0, 2, 1}), constant_prototype(3, 0.4));
  for (double v : g.adjacency.values()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
  const auto one = build_graph(FeatureMap(1, 1, 1, {5}), labels(1, 1, 3, {2}), toy_prototype());
  EXPECT_EQ(one.adjacency, (Matrix{{1}}));
}

TEST(BuildGraph, FromInstanceResizesLabels) {
  Instance inst{0, labels(4, 2, 3, {0, 0, 1, 1, 0, 0, 1, 1}), FeatureMap(2, 1, 1, {1, 0})};
  const auto g = build_graph(inst, toy_prototype());
  EXPECT_EQ(g.nodes.semantics, (std::vector<ObjectId>{0, 1}));
  EXPECT_EQ(g.adjacency, (Matrix{{0.5, 0.5}, {1, 0}}));
  Instance no_features{0, labels(1, 1, 3, {0}), std::nullopt};
  EXPECT_THROW(build_graph(no_features, toy_prototype()), ValidationError);
}

struct RandomGraphCase {
  FeatureMap features;
  LabelMap labels;
  Prototype proto;
};

RandomGraphCase random_case(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::uint32_t> dim(1, 6), L(1, 5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::uint32_t w = dim(rng), h = dim(rng), l = L(rng), c = dim(rng);
  std::vector<double> fv(std::size_t{w} * h * c);
  for (auto& v : fv) v = u(rng) * 4.0 - 2.0;
  std::vector<std::uint16_t> lv(std::size_t{w} * h);
  for (auto& v : lv) v = static_cast<std::uint16_t>(std::uniform_int_distribution<std::uint32_t>(0, l - 1)(rng));
  Matrix omega(l, l);
  for (std::uint32_t i = 0; i < l; ++i)
    for (std::uint32_t j = i; j < l; ++j) omega(i, j) = omega(j, i) = u(rng) < 0.3 ? 0.0 : u(rng);
  return {FeatureMap(w, h, c, fv), LabelMap(w, h, l, lv), Prototype{l, 2, CooccurrenceMode::Independent, {}, omega}};
}

TEST(BuildGraph, PropertiesOnRandomInstances) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const auto rc = random_case(rng);
    const auto g = build_graph(rc.features, rc.labels, rc.proto);
    EXPECT_EQ(g.raw_knowledge, oracle::naive_gather(g.nodes.semantics, rc.proto.omega));
    for (std::size_t i = 0; i < g.adjacency.rows(); ++i) {
      const auto r = g.adjacency.row(i);
      EXPECT_NEAR(std::accumulate(r.begin(), r.end(), 0.0), 1.0, 1e-12);
    }
    // Permuting nodes permutes A0 and A on both axes.
    const std::size_t n = g.nodes.size();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<ObjectId> sem(n);
    for (std::size_t k = 0; k < n; ++k) sem[k] = g.nodes.semantics[perm[k]];
    const auto a0p = extract_local_knowledge(sem, rc.proto);
    const auto ap = row_normalize(a0p);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        EXPECT_EQ(a0p(i, j), g.raw_knowledge(perm[i], perm[j]));
        // Row sums accumulate in a different order after the permutation.
        EXPECT_NEAR(ap(i, j), g.adjacency(perm[i], perm[j]), 1e-15);
      }
  }
}

TEST(BuildGraph, UniformOmegaPropagationAveragesWithMean) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    auto rc = random_case(rng);
    rc.proto.omega = Matrix(rc.proto.num_objects, rc.proto.num_objects, 0.7);
    const auto g = build_graph(rc.features, rc.labels, rc.proto);
    const auto out = propagate(g.adjacency, g.nodes.features);
    const auto mean = gap(g.nodes.features);
    for (std::size_t i = 0; i < out.rows(); ++i)
      for (std::size_t k = 0; k < out.cols(); ++k)
        EXPECT_NEAR(out(i, k), (g.nodes.features(i, k) + mean[k]) / 2.0, 1e-12);
  }
}

}  // namespace
}  // namespace dgn
