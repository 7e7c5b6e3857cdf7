#include "dgn/oracle.hpp"

#include <cmath>

#include "dgn/error.hpp"

namespace dgn::oracle {

namespace {

bool contains(const LabelMap& map, ObjectId object) {
  for (std::uint32_t y = 0; y < map.height(); ++y)
    for (std::uint32_t x = 0; x < map.width(); ++x)
      if (map.at(x, y) == object) return true;
  return false;
}

double naive_theta(const std::vector<double>& likelihood, Dispersion kind) {
  const std::size_t scenes = likelihood.size();
  double total = 0.0;
  for (double v : likelihood) total += v;
  if (total == 0.0) return 0.0;

  std::vector<double> p(scenes);
  for (std::size_t c = 0; c < scenes; ++c) p[c] = likelihood[c] / total;

  bool uniform = true;
  for (double v : p) uniform = uniform && v == p[0];
  if (uniform) return 0.0;

  if (kind == Dispersion::Range) {
    double lo = p[0], hi = p[0];
    for (double v : p) {
      lo = v < lo ? v : lo;
      hi = v > hi ? v : hi;
    }
    return hi - lo;
  }
  double mean = 0.0;
  for (double v : p) mean += v;
  mean /= static_cast<double>(scenes);
  double var = 0.0;
  for (double v : p) var += (v - mean) * (v - mean);
  const double sigma = std::sqrt(var / static_cast<double>(scenes));
  if (kind == Dispersion::StdDev) return sigma;
  return sigma * static_cast<double>(scenes);  // sigma / (1 / C)
}

}  // namespace

OracleReport compare(std::span<const double> expected, std::span<const double> actual) {
  if (expected.size() != actual.size()) throw ValidationError("oracle compare: length mismatch");
  OracleReport report;
  for (std::size_t k = 0; k < expected.size(); ++k) {
    const double diff = std::abs(expected[k] - actual[k]);
    const double scale = std::max(std::abs(expected[k]), std::abs(actual[k]));
    if (diff > report.max_abs_deviation) {
      report.max_abs_deviation = diff;
      report.worst_index = k;
    }
    if (scale > 0.0) report.max_rel_deviation = std::max(report.max_rel_deviation, diff / scale);
  }
  return report;
}

Prototype naive_prototype(const Corpus& corpus, CooccurrenceMode mode, DispersionMetric metric) {
  const std::uint32_t L = corpus.num_objects();
  const std::uint32_t C = corpus.num_scenes();
  if (corpus.empty()) throw ValidationError("oracle: empty corpus");

  Prototype proto;
  proto.num_objects = L;
  proto.num_scenes = C;
  proto.mode = mode;
  proto.metric = metric;
  proto.omega = Matrix(L, L);

  for (ObjectId i = 0; i < L; ++i) {
    for (ObjectId j = 0; j < L; ++j) {
      std::vector<double> likelihood(C, 0.0);
      for (SceneId c = 0; c < C; ++c) {
        double n_scene = 0, n_i = 0, n_j = 0, n_ij = 0;
        for (const auto& inst : corpus.instances()) {
          if (inst.scene != c) continue;
          n_scene += 1;
          const bool has_i = contains(inst.label_map, i);
          const bool has_j = contains(inst.label_map, j);
          n_i += has_i;
          n_j += has_j;
          n_ij += has_i && has_j;
        }
        if (n_scene == 0) throw ValidationError("oracle: scene without instances");
        likelihood[c] = mode == CooccurrenceMode::NonIndependent ? n_ij / n_scene : (n_i * n_j) / (n_scene * n_scene);
      }
      const double theta = naive_theta(likelihood, metric.kind);
      proto.omega(i, j) = metric.passivate ? std::sqrt(theta) : theta;
    }
  }
  return proto;
}

Matrix naive_gather(std::span<const ObjectId> semantics, const Matrix& omega) {
  const std::size_t n = semantics.size();
  Matrix a0(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a0(i, j) = omega(semantics[i], semantics[j]);
  return a0;
}

Matrix naive_propagate(const Matrix& adjacency, const Matrix& features) {
  const std::size_t n = adjacency.rows();
  if (adjacency.cols() != n || features.rows() != n) throw ValidationError("oracle propagate: shape mismatch");
  Matrix out(n, features.cols());
  for (std::size_t i = 0; i < n; ++i) {
    double degree = 0.0;
    for (std::size_t j = 0; j < n; ++j) degree += adjacency(i, j) + (i == j ? 1.0 : 0.0);
    for (std::size_t k = 0; k < features.cols(); ++k) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += (adjacency(i, j) + (i == j ? 1.0 : 0.0)) * features(j, k);
      out(i, k) = acc / degree;
    }
  }
  return out;
}

std::vector<double> fd_gradient(const std::function<double(std::span<const double>)>& f,
                                std::span<const double> params, double h) {
  if (!(h > 0.0)) throw ValidationError("fd_gradient: step must be positive");
  std::vector<double> x(params.begin(), params.end());
  std::vector<double> grad(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double saved = x[k];
    x[k] = saved + h;
    const double plus = f(x);
    x[k] = saved - h;
    const double minus = f(x);
    x[k] = saved;
    if (!std::isfinite(plus) || !std::isfinite(minus)) throw NumericError("fd_gradient: non-finite loss");
    grad[k] = (plus - minus) / (2.0 * h);
  }
  return grad;
}

}  // namespace dgn::oracle
