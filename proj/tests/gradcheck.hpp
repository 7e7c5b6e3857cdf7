#pragma once

// Finite-difference check of the model's analytic gradients, shared by the
// unit tests and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "dgn/model.hpp"
#include "dgn/oracle.hpp"

namespace dgn::testing {

// Relative error with a floor on the denominator. Central differences at
// h = 1e-6 carry up to ~6e-10 of rounding noise (eps * |loss| / h) whatever
// the gradient's size, so entries below the floor are held to an absolute
// 1e-9 instead.
inline double relative_error(double analytic, double numeric, double floor = 1e-3) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

inline std::vector<double> pack(const DgnModel& m) {
  std::vector<double> p;
  auto add = [&](std::span<const double> s) { p.insert(p.end(), s.begin(), s.end()); };
  add(m.gcn_weight.values());
  add(m.main_head.weight.values());
  add(m.main_head.bias);
  add(m.aux_head.weight.values());
  add(m.aux_head.bias);
  return p;
}

inline std::vector<double> pack(const Gradients& g) {
  std::vector<double> p;
  auto add = [&](std::span<const double> s) { p.insert(p.end(), s.begin(), s.end()); };
  add(g.gcn_weight.values());
  add(g.main_head.weight.values());
  add(g.main_head.bias);
  add(g.aux_head.weight.values());
  add(g.aux_head.bias);
  return p;
}

inline void unpack(std::span<const double> p, DgnModel& m) {
  std::size_t k = 0;
  auto take = [&](std::span<double> dst) {
    for (double& v : dst) v = p[k++];
  };
  take(m.gcn_weight.values());
  take(m.main_head.weight.values());
  take(m.main_head.bias);
  take(m.aux_head.weight.values());
  take(m.aux_head.bias);
}

struct GradCheckCase {
  DgnModel model;
  GraphInput input;
  SceneId target = 0;
};

// Random model and random graph input of the requested sizes. Head weights
// are drawn wider than Xavier so that no gradient is vanishingly small.
inline GradCheckCase random_gradcheck_case(std::mt19937_64& rng, AblationMode mode, std::size_t n, std::uint32_t c,
                                           std::uint32_t d, std::uint32_t C, double lambda) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), pos(0.05, 1.0);
  GradCheckCase gc;
  gc.model = init_model(mode, c, d, C, lambda, rng());
  for (double& v : gc.model.main_head.bias) v = u(rng);
  for (double& v : gc.model.aux_head.bias) v = u(rng);
  Matrix v(n, c);
  for (double& x : v.values()) x = 2.0 * u(rng);
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (double& x : a.row(i)) s += (x = pos(rng));
    for (double& x : a.row(i)) x /= s;
  }
  gc.input = GraphInput{v, oracle::naive_propagate(a, v)};
  gc.target = static_cast<SceneId>(std::uniform_int_distribution<std::uint32_t>(0, C - 1)(rng));
  return gc;
}

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t parameters = 0;
};

inline GradCheckResult check_gradients(const GradCheckCase& gc, double h = 1e-6) {
  const auto pass = forward(gc.model, gc.input, true);
  const auto analytic = pack(backward(gc.model, pass, gc.target));
  const auto theta = pack(gc.model);
  DgnModel probe = gc.model;
  const auto numeric = oracle::fd_gradient(
      [&](std::span<const double> p) {
        unpack(p, probe);
        return loss(probe, forward(probe, gc.input, true), gc.target).total;
      },
      theta, h);
  GradCheckResult r;
  r.parameters = theta.size();
  for (std::size_t k = 0; k < theta.size(); ++k)
    r.max_relative_error = std::max(r.max_relative_error, relative_error(analytic[k], numeric[k]));
  return r;
}

}  // namespace dgn::testing
