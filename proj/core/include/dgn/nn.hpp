#pragma once

// Building blocks of the graph network: one graph-convolution layer,
// global average pooling, affine heads, softmax cross-entropy, Adam and
// Xavier initialization.

#include <cstdint>
#include <span>
#include <vector>

#include "dgn/matrix.hpp"

namespace dgn {

double sigmoid(double x);

/// D^-1 (A + I) V where D is the diagonal of row sums of A + I.
/// A must be square with as many rows as V; A row-stochastic gives D = 2I.
Matrix propagate(const Matrix& adjacency, const Matrix& features);

struct GcnOutput {
  Matrix pre;        // D^-1 (A + I) V W
  Matrix activated;  // sigmoid(pre), entries in (0, 1)
};

GcnOutput gcn_forward(const Matrix& adjacency, const Matrix& features, const Matrix& weight);

/// Column-wise mean over rows (global average pooling). Requires rows >= 1.
std::vector<double> gap(const Matrix& x);

/// Fully connected head: logits = x^T weight + bias, weight is in x C.
struct ClassifierParams {
  Matrix weight;
  std::vector<double> bias;

  std::size_t inputs() const { return weight.rows(); }
  std::size_t outputs() const { return weight.cols(); }
  bool operator==(const ClassifierParams&) const = default;
};

std::vector<double> linear(std::span<const double> x, const ClassifierParams& params);

std::vector<double> softmax(std::span<const double> logits);

/// -log softmax(logits)[target], max-shifted for stability.
double softmax_ce(std::span<const double> logits, std::size_t target);

/// d softmax_ce / d logits = softmax(logits) - onehot(target).
std::vector<double> softmax_ce_grad(std::span<const double> logits, std::size_t target);

struct AdamHyperParams {
  double learning_rate = 1e-3;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moments are sized lazily on the first step and checked afterwards.
struct AdamState {
  AdamHyperParams hyper;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

/// One Adam update with bias correction. Weight decay is decoupled:
/// p <- p - lr * wd * p is applied before the moment update.
void adam_step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
               AdamState& state);

/// Uniform in [-sqrt(6 / (rows + cols)), +sqrt(6 / (rows + cols))].
Matrix xavier_init(std::size_t rows, std::size_t cols, std::uint64_t seed);

}  // namespace dgn
