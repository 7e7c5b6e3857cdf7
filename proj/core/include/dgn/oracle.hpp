#pragma once

// Brute-force references for tests. Nothing here calls into the code it
// checks; only the shared domain types are used.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "dgn/corpus.hpp"
#include "dgn/iodp.hpp"
#include "dgn/matrix.hpp"

namespace dgn::oracle {

struct OracleReport {
  double max_abs_deviation = 0.0;
  double max_rel_deviation = 0.0;
  std::size_t worst_index = 0;  // flat index of the largest absolute deviation
};

OracleReport compare(std::span<const double> expected, std::span<const double> actual);

/// Omega by literal nested loops over (i, j, scene, instance, pixel).
Prototype naive_prototype(const Corpus& corpus, CooccurrenceMode mode, DispersionMetric metric);

/// A0[i][j] = Omega[semantics[i]][semantics[j]] by a double loop.
Matrix naive_gather(std::span<const ObjectId> semantics, const Matrix& omega);

/// D^-1 (A + I) V by scalar triple loop.
Matrix naive_propagate(const Matrix& adjacency, const Matrix& features);

/// Central differences (f(x + h e_k) - f(x - h e_k)) / 2h per coordinate.
/// Throws NumericError if f returns a non-finite value.
std::vector<double> fd_gradient(const std::function<double(std::span<const double>)>& f,
                                std::span<const double> params, double h = 1e-6);

}  // namespace dgn::oracle
