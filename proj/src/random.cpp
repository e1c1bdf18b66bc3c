#include "nmuon/random.hpp"

#include <cmath>
#include <vector>

namespace nmuon {

Rng make_rng(std::uint64_t master_seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                      static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(stream),
                      static_cast<std::uint32_t>(stream >> 32)};
    return Rng(seq);
}

DenseMatrix gaussian_matrix(Rng& rng, std::size_t rows, std::size_t cols, double scale) {
    std::normal_distribution<double> normal(0.0, scale);
    std::vector<double> data(rows * cols);
    for (double& v : data) v = normal(rng);
    return DenseMatrix(rows, cols, std::move(data));
}

void orthonormalize_columns(DenseMatrix& a) {
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    if (n > m) throw DimensionMismatch("orthonormalize_columns: more columns than rows");
    DenseMatrix t = a.transpose();
    for (std::size_t j = 0; j < n; ++j) {
        auto qj = t.row(j);
        // Two passes keep the result orthonormal to working precision.
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t k = 0; k < j; ++k) {
                auto qk = t.row(k);
                double d = 0.0;
                for (std::size_t i = 0; i < m; ++i) d += qk[i] * qj[i];
                for (std::size_t i = 0; i < m; ++i) qj[i] -= d * qk[i];
            }
        }
        double nrm = 0.0;
        for (double v : qj) nrm += v * v;
        nrm = std::sqrt(nrm);
        if (nrm < 1e-12) throw DimensionMismatch("orthonormalize_columns: dependent columns");
        for (double& v : qj) v /= nrm;
    }
    a = t.transpose();
}

DenseMatrix random_orthonormal_columns(Rng& rng, std::size_t rows, std::size_t cols) {
    DenseMatrix a = gaussian_matrix(rng, rows, cols);
    orthonormalize_columns(a);
    return a;
}

DenseMatrix random_orthogonal(Rng& rng, std::size_t n) { return random_orthonormal_columns(rng, n, n); }

SymMatrix conjugated_diagonal(Rng& rng, std::span<const double> eigs) {
    const std::size_t n = eigs.size();
    const DenseMatrix p = random_orthogonal(rng, n);
    DenseMatrix pd = p;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) pd(i, j) *= eigs[j];
    return SymMatrix::from_lower(matmul_nt(pd, p));
}

SymMatrix random_spd(Rng& rng, std::size_t n, double cond) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> eigs(n);
    for (double& e : eigs) e = std::exp(-std::log(cond) * u(rng));
    if (n >= 2) {
        eigs[0] = 1.0;
        eigs[1] = 1.0 / cond;
    }
    return conjugated_diagonal(rng, eigs);
}

}  // namespace nmuon
