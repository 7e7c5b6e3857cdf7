#include "dgn/nn.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "dgn/error.hpp"

namespace dgn {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Matrix propagate(const Matrix& adjacency, const Matrix& features) {
  const std::size_t n = adjacency.rows();
  require(adjacency.cols() == n, "adjacency must be square");
  require(features.rows() == n, "adjacency and node features disagree on node count");
  Matrix out(n, features.cols());
  for (std::size_t i = 0; i < n; ++i) {
    auto dst = out.row(i);
    double degree = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double a = adjacency(i, j) + (i == j ? 1.0 : 0.0);
      degree += adjacency(i, j);
      if (a == 0.0) continue;
      auto src = features.row(j);
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += a * src[k];
    }
    require(degree > 0.0, "degree of A + I must be positive");
    for (double& v : dst) v /= degree;
  }
  return out;
}

GcnOutput gcn_forward(const Matrix& adjacency, const Matrix& features, const Matrix& weight) {
  require(features.cols() == weight.rows(), "gcn weight rows must equal feature width c");
  GcnOutput out{matmul(propagate(adjacency, features), weight), Matrix{}};
  out.activated = Matrix(out.pre.rows(), out.pre.cols());
  for (std::size_t i = 0; i < out.pre.size(); ++i) out.activated.values()[i] = sigmoid(out.pre.values()[i]);
  return out;
}

std::vector<double> gap(const Matrix& x) {
  require(x.rows() >= 1, "global average pooling needs at least one row");
  std::vector<double> mean(x.cols(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto r = x.row(i);
    for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += r[k];
  }
  const double inv = 1.0 / static_cast<double>(x.rows());
  for (double& v : mean) v *= inv;
  return mean;
}

std::vector<double> linear(std::span<const double> x, const ClassifierParams& params) {
  require(x.size() == params.inputs(), "classifier input width mismatch: got " + std::to_string(x.size()) +
                                           ", expected " + std::to_string(params.inputs()));
  require(params.bias.size() == params.outputs(), "classifier bias length mismatch");
  std::vector<double> logits(params.bias);
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto w = params.weight.row(i);
    for (std::size_t c = 0; c < logits.size(); ++c) logits[c] += x[i] * w[c];
  }
  return logits;
}

std::vector<double> softmax(std::span<const double> logits) {
  require(!logits.empty(), "softmax of an empty vector");
  const double peak = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) total += (p[i] = std::exp(logits[i] - peak));
  for (double& v : p) v /= total;
  return p;
}

double softmax_ce(std::span<const double> logits, std::size_t target) {
  require(target < logits.size(), "target class out of range");
  const double peak = *std::max_element(logits.begin(), logits.end());
  // Sum the non-target terms separately so log1p keeps precision when the
  // target dominates.
  double rest = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i)
    if (i != target) rest += std::exp(logits[i] - peak);
  const double shift = logits[target] - peak;
  if (shift == 0.0) return std::log1p(rest);
  return -shift + std::log(std::exp(shift) + rest);
}

std::vector<double> softmax_ce_grad(std::span<const double> logits, std::size_t target) {
  require(target < logits.size(), "target class out of range");
  auto g = softmax(logits);
  g[target] -= 1.0;
  return g;
}

void adam_step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
               AdamState& state) {
  require(params.size() == grads.size(), "adam: parameter and gradient lists differ in length");
  if (state.first_moment.empty() && state.step == 0) {
    for (const auto& p : params) {
      state.first_moment.emplace_back(p.size(), 0.0);
      state.second_moment.emplace_back(p.size(), 0.0);
    }
  }
  require(state.first_moment.size() == params.size(), "adam: state tracks a different parameter list");
  for (std::size_t i = 0; i < params.size(); ++i) {
    require(params[i].size() == grads[i].size(), "adam: gradient shape mismatch");
    require(state.first_moment[i].size() == params[i].size(), "adam: moment shape mismatch");
  }

  const auto& h = state.hyper;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(h.beta1, t);
  const double correction2 = 1.0 - std::pow(h.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i];
    auto g = grads[i];
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      p[k] -= h.learning_rate * h.weight_decay * p[k];
      m[k] = h.beta1 * m[k] + (1.0 - h.beta1) * g[k];
      v[k] = h.beta2 * v[k] + (1.0 - h.beta2) * g[k] * g[k];
      const double m_hat = m[k] / correction1;
      const double v_hat = v[k] / correction2;
      p[k] -= h.learning_rate * m_hat / (std::sqrt(v_hat) + h.epsilon);
    }
  }
}

Matrix xavier_init(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  require(rows > 0 && cols > 0, "xavier_init needs positive dimensions");
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = dist(rng);
  return m;
}

}  // namespace dgn
