#pragma once

// Seeded sampling helpers. Each (master seed, stream index) pair gets its own
// generator, so trial results do not depend on execution order.

#include <cstdint>
#include <random>

#include "nmuon/dense.hpp"

namespace nmuon {

using Rng = std::mt19937_64;

Rng make_rng(std::uint64_t master_seed, std::uint64_t stream = 0);

DenseMatrix gaussian_matrix(Rng& rng, std::size_t rows, std::size_t cols, double scale = 1.0);

// Modified Gram-Schmidt on a Gaussian matrix; rows >= cols.
DenseMatrix random_orthonormal_columns(Rng& rng, std::size_t rows, std::size_t cols);

// Haar-distributed orthogonal matrix.
DenseMatrix random_orthogonal(Rng& rng, std::size_t n);

// P diag(eigs) P^T with Haar P.
SymMatrix conjugated_diagonal(Rng& rng, std::span<const double> eigs);

// Eigenvalues log-uniform in [1/cond, 1].
SymMatrix random_spd(Rng& rng, std::size_t n, double cond = 100.0);

// Orthonormalize the columns of `a` in place (rows >= cols). Throws
// DimensionMismatch on linearly dependent columns.
void orthonormalize_columns(DenseMatrix& a);

}  // namespace nmuon
