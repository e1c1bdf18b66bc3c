#pragma once

// Dense f64 linear algebra used by every other module.
//
// DenseMatrix is row-major. SymMatrix stores the full square but keeps the two
// triangles bit-identical; every kernel that produces one writes a single
// triangle and mirrors it.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "nmuon/errors.hpp"

namespace nmuon {

class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    // Rejects a length mismatch and any NaN/Inf entry.
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
    static DenseMatrix identity(std::size_t n);
    static DenseMatrix diagonal(std::span<const double> diag);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const noexcept {
        return {data_.data() + i * cols_, cols_};
    }
    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }
    const std::vector<double>& storage() const noexcept { return data_; }

    DenseMatrix transpose() const;
    std::vector<double> column(std::size_t j) const;

    double frobenius_norm() const;
    double max_abs() const;
    double trace() const;
    bool all_finite() const;

    DenseMatrix& operator+=(const DenseMatrix& other);
    DenseMatrix& operator-=(const DenseMatrix& other);
    DenseMatrix& operator*=(double s);

    friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b);
DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b);
DenseMatrix operator*(double s, DenseMatrix a);

class SymMatrix {
public:
    SymMatrix() = default;
    explicit SymMatrix(std::size_t dim, double diag_fill = 0.0);

    // Takes the lower triangle of `a` and mirrors it into the upper one.
    static SymMatrix from_lower(const DenseMatrix& a);
    // Averages `a` with its transpose.
    static SymMatrix symmetrize(const DenseMatrix& a);
    static SymMatrix identity(std::size_t n, double scale = 1.0);
    static SymMatrix diagonal(std::span<const double> diag);

    std::size_t dim() const noexcept { return m_.rows(); }
    double operator()(std::size_t i, std::size_t j) const noexcept { return m_(i, j); }
    // Writes both (i, j) and (j, i).
    void set(std::size_t i, std::size_t j, double v) noexcept {
        m_(i, j) = v;
        m_(j, i) = v;
    }
    void add_diagonal(double v) noexcept;

    std::span<const double> values() const noexcept { return m_.values(); }
    const DenseMatrix& dense() const noexcept { return m_; }

    double trace() const { return m_.trace(); }
    double frobenius_norm() const { return m_.frobenius_norm(); }
    bool exactly_symmetric() const;

    SymMatrix& operator*=(double s);
    SymMatrix scaled(double s) const;
    // beta * this + alpha * other, symmetric by construction.
    SymMatrix axpby(double beta, double alpha, const SymMatrix& other) const;

    friend bool operator==(const SymMatrix&, const SymMatrix&) = default;

private:
    DenseMatrix m_;
};

struct CompactSVD {
    DenseMatrix U;          // m x r, orthonormal columns
    std::vector<double> S;  // r positive values, non-increasing
    DenseMatrix V;          // n x r, orthonormal columns

    std::size_t rank() const noexcept { return S.size(); }
};

struct SymEig {
    std::vector<double> values;  // descending
    DenseMatrix vectors;         // column k pairs with values[k]
};

// C = A B.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
// C = A^T B.
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);
// C = A B^T.
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix matmul(const DenseMatrix& a, const SymMatrix& b);
DenseMatrix matmul(const SymMatrix& a, const DenseMatrix& b);

DenseMatrix transpose(const DenseMatrix& a);

// Z Z^T from one triangle, mirrored.
SymMatrix syrk(const DenseMatrix& z);

// P Q for commuting symmetric P and Q; one triangle computed, the other mirrored.
SymMatrix sypp(const SymMatrix& p, const SymMatrix& q);

// Relative commutator ||PQ - QP||_F / (||P||_F ||Q||_F); used by debug checks.
double commutator_defect(const SymMatrix& p, const SymMatrix& q);

// Lower-triangular L with positive diagonal and L L^T = K.
DenseMatrix cholesky_factor(const SymMatrix& k);

// K^{-1} = L^{-T} L^{-1}.
SymMatrix cholesky_inverse(const SymMatrix& k);

inline constexpr double kDefaultRankTol = 1e-12;

// One-sided Jacobi SVD. Singular values <= rank_tol * sigma_max are dropped, so
// the zero matrix yields rank 0.
CompactSVD compact_svd(const DenseMatrix& a, double rank_tol = kDefaultRankTol);

// All singular values (rank_tol = 0), descending.
std::vector<double> singular_values(const DenseMatrix& a);

// Cyclic Jacobi eigendecomposition, sweep cap 100.
SymEig sym_eig(const SymMatrix& k);

// Unique PSD square root. Throws NotPSD for eigenvalues below -1e-6 * lambda_max.
SymMatrix psd_sqrt(const SymMatrix& k);

// Lanczos estimate of lambda_max times `safety`, raised to the Ritz value plus
// its residual when that is larger.
double spec_norm_upper(const SymMatrix& k, std::size_t iters = 30, double safety = 1.02);

// Largest singular value, computed via the SVD.
double spectral_norm(const DenseMatrix& a);

// Spectral norm of a symmetric matrix: max |eigenvalue|.
double spectral_norm(const SymMatrix& k);

double frobenius_distance(const DenseMatrix& a, const DenseMatrix& b);

// tr(A^T B).
double inner(const DenseMatrix& a, const DenseMatrix& b);

}  // namespace nmuon
