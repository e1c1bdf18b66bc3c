#include "nmuon/dense.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

namespace nmuon {
namespace {

void require(bool ok, const char* what) {
    if (!ok) throw DimensionMismatch(what);
}

double dot(const double* a, const double* b, std::size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        s0 += a[k] * b[k];
        s1 += a[k + 1] * b[k + 1];
        s2 += a[k + 2] * b[k + 2];
        s3 += a[k + 3] * b[k + 3];
    }
    for (; k < n; ++k) s0 += a[k] * b[k];
    return (s0 + s1) + (s2 + s3);
}

// Row-major buffer holding the columns of a matrix as contiguous rows.
struct ColumnBlock {
    std::size_t count = 0;
    std::size_t length = 0;
    std::vector<double> data;

    double* col(std::size_t j) { return data.data() + j * length; }
    const double* col(std::size_t j) const { return data.data() + j * length; }
};

}  // namespace

// ---------------------------------------------------------------- DenseMatrix

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
    if (!std::isfinite(fill)) throw NonFiniteValue("DenseMatrix fill value is not finite");
}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw DimensionMismatch("DenseMatrix data length " + std::to_string(data_.size()) +
                                " != " + std::to_string(rows_) + " x " + std::to_string(cols_));
    }
    if (!all_finite()) throw NonFiniteValue("DenseMatrix data contains NaN or Inf");
}

DenseMatrix DenseMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw DimensionMismatch("ragged initializer for DenseMatrix");
        data.insert(data.end(), row.begin(), row.end());
    }
    return DenseMatrix(r, c, std::move(data));
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

DenseMatrix DenseMatrix::diagonal(std::span<const double> diag) {
    DenseMatrix m(diag.size(), diag.size());
    for (std::size_t i = 0; i < diag.size(); ++i) {
        if (!std::isfinite(diag[i])) throw NonFiniteValue("diagonal entry is not finite");
        m(i, i) = diag[i];
    }
    return m;
}

DenseMatrix DenseMatrix::transpose() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

std::vector<double> DenseMatrix::column(std::size_t j) const {
    std::vector<double> c(rows_);
    for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
    return c;
}

double DenseMatrix::frobenius_norm() const {
    return std::sqrt(dot(data_.data(), data_.data(), data_.size()));
}

double DenseMatrix::max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
}

double DenseMatrix::trace() const {
    double t = 0.0;
    for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) t += (*this)(i, i);
    return t;
}

bool DenseMatrix::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

DenseMatrix& DenseMatrix::operator+=(const DenseMatrix& other) {
    require(rows_ == other.rows_ && cols_ == other.cols_, "matrix sum: shape mismatch");
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
    return *this;
}

DenseMatrix& DenseMatrix::operator-=(const DenseMatrix& other) {
    require(rows_ == other.rows_ && cols_ == other.cols_, "matrix difference: shape mismatch");
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= other.data_[k];
    return *this;
}

DenseMatrix& DenseMatrix::operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
}

DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b) { return a += b; }
DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b) { return a -= b; }
DenseMatrix operator*(double s, DenseMatrix a) { return a *= s; }

// ------------------------------------------------------------------ SymMatrix

SymMatrix::SymMatrix(std::size_t dim, double diag_fill) : m_(dim, dim) {
    for (std::size_t i = 0; i < dim; ++i) m_(i, i) = diag_fill;
}

SymMatrix SymMatrix::from_lower(const DenseMatrix& a) {
    require(a.rows() == a.cols(), "SymMatrix requires a square matrix");
    if (!a.all_finite()) throw NonFiniteValue("SymMatrix input contains NaN or Inf");
    SymMatrix s(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j <= i; ++j) s.set(i, j, a(i, j));
    return s;
}

SymMatrix SymMatrix::symmetrize(const DenseMatrix& a) {
    require(a.rows() == a.cols(), "SymMatrix requires a square matrix");
    if (!a.all_finite()) throw NonFiniteValue("SymMatrix input contains NaN or Inf");
    SymMatrix s(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j <= i; ++j) s.set(i, j, 0.5 * (a(i, j) + a(j, i)));
    return s;
}

SymMatrix SymMatrix::identity(std::size_t n, double scale) { return SymMatrix(n, scale); }

SymMatrix SymMatrix::diagonal(std::span<const double> diag) {
    SymMatrix s(diag.size());
    for (std::size_t i = 0; i < diag.size(); ++i) {
        if (!std::isfinite(diag[i])) throw NonFiniteValue("diagonal entry is not finite");
        s.m_(i, i) = diag[i];
    }
    return s;
}

void SymMatrix::add_diagonal(double v) noexcept {
    for (std::size_t i = 0; i < dim(); ++i) m_(i, i) += v;
}

bool SymMatrix::exactly_symmetric() const {
    for (std::size_t i = 0; i < dim(); ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (m_(i, j) != m_(j, i)) return false;
    return true;
}

SymMatrix& SymMatrix::operator*=(double s) {
    m_ *= s;
    return *this;
}

SymMatrix SymMatrix::scaled(double s) const {
    SymMatrix r = *this;
    r *= s;
    return r;
}

SymMatrix SymMatrix::axpby(double beta, double alpha, const SymMatrix& other) const {
    require(dim() == other.dim(), "SymMatrix axpby: dimension mismatch");
    SymMatrix r(dim());
    for (std::size_t i = 0; i < dim(); ++i)
        for (std::size_t j = 0; j <= i; ++j) r.set(i, j, beta * m_(i, j) + alpha * other(i, j));
    return r;
}

// ------------------------------------------------------------------- products

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    require(a.cols() == b.rows(), "matmul: inner dimensions differ");
    DenseMatrix c(a.rows(), b.cols());
    const std::size_t n = b.cols();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* ci = c.row(i).data();
        for (std::size_t p = 0; p < a.cols(); ++p) {
            const double aip = a(i, p);
            if (aip == 0.0) continue;
            const double* bp = b.row(p).data();
            for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
        }
    }
    return c;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
    require(a.rows() == b.rows(), "matmul_tn: row counts differ");
    DenseMatrix c(a.cols(), b.cols());
    const std::size_t n = b.cols();
    for (std::size_t p = 0; p < a.rows(); ++p) {
        const double* bp = b.row(p).data();
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double api = a(p, i);
            if (api == 0.0) continue;
            double* ci = c.row(i).data();
            for (std::size_t j = 0; j < n; ++j) ci[j] += api * bp[j];
        }
    }
    return c;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
    require(a.cols() == b.cols(), "matmul_nt: column counts differ");
    DenseMatrix c(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.rows(); ++j)
            c(i, j) = dot(a.row(i).data(), b.row(j).data(), a.cols());
    return c;
}

DenseMatrix matmul(const DenseMatrix& a, const SymMatrix& b) {
    // B symmetric: (A B)_ij = row_i(A) . row_j(B).
    return matmul_nt(a, b.dense());
}

DenseMatrix matmul(const SymMatrix& a, const DenseMatrix& b) { return matmul(a.dense(), b); }

DenseMatrix transpose(const DenseMatrix& a) { return a.transpose(); }

SymMatrix syrk(const DenseMatrix& z) {
    require(z.cols() >= 1, "syrk: Z needs at least one column");
    const std::size_t n = z.rows();
    DenseMatrix lower(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j)
            lower(i, j) = dot(z.row(i).data(), z.row(j).data(), z.cols());
    return SymMatrix::from_lower(lower);
}

double commutator_defect(const SymMatrix& p, const SymMatrix& q) {
    const DenseMatrix pq = matmul(p.dense(), q.dense());
    const DenseMatrix qp = matmul(q.dense(), p.dense());
    const double scale = p.frobenius_norm() * q.frobenius_norm();
    return scale == 0.0 ? 0.0 : (pq - qp).frobenius_norm() / scale;
}

SymMatrix sypp(const SymMatrix& p, const SymMatrix& q) {
    require(p.dim() == q.dim(), "sypp: dimension mismatch");
#ifndef NDEBUG
    if (commutator_defect(p, q) > 1e-8) throw Error("sypp: factors do not commute");
#endif
    const std::size_t n = p.dim();
    DenseMatrix lower(n, n);
    // Q symmetric, so column j of Q is row j of Q.
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j)
            lower(i, j) = dot(p.dense().row(i).data(), q.dense().row(j).data(), n);
    return SymMatrix::from_lower(lower);
}

// ------------------------------------------------------------------- Cholesky

DenseMatrix cholesky_factor(const SymMatrix& k) {
    const std::size_t n = k.dim();
    DenseMatrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = k(j, j) - dot(l.row(j).data(), l.row(j).data(), j);
        if (!(d > 0.0)) throw NotPositiveDefinite(j, d);
        const double ljj = std::sqrt(d);
        l(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i)
            l(i, j) = (k(i, j) - dot(l.row(i).data(), l.row(j).data(), j)) / ljj;
    }
    return l;
}

SymMatrix cholesky_inverse(const SymMatrix& k) {
    const DenseMatrix l = cholesky_factor(k);
    const std::size_t n = k.dim();
    // Row i of `m` holds column i of L^{-1}; nonzero only for indices >= i.
    DenseMatrix m(n, n);
    for (std::size_t c = 0; c < n; ++c) {
        // Solve L x = e_c by forward substitution; x_p = 0 for p < c.
        m(c, c) = 1.0 / l(c, c);
        for (std::size_t p = c + 1; p < n; ++p) {
            double s = 0.0;
            for (std::size_t q = c; q < p; ++q) s += l(p, q) * m(c, q);
            m(c, p) = -s / l(p, p);
        }
    }
    DenseMatrix lower(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j)
            lower(i, j) = dot(m.row(i).data() + i, m.row(j).data() + i, n - i);
    return SymMatrix::from_lower(lower);
}

// ------------------------------------------------------------------------ SVD

namespace {

struct JacobiResult {
    ColumnBlock work;  // A V, columns orthogonal
    ColumnBlock v;
};

// Hestenes one-sided Jacobi on the columns of `a` (rows >= cols preferred).
JacobiResult one_sided_jacobi(const DenseMatrix& a) {
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    JacobiResult r;
    r.work = {n, m, std::vector<double>(n * m)};
    r.v = {n, n, std::vector<double>(n * n, 0.0)};
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) r.work.col(j)[i] = a(i, j);
    for (std::size_t j = 0; j < n; ++j) r.v.col(j)[j] = 1.0;

    const double frob2 = dot(r.work.data.data(), r.work.data.data(), r.work.data.size());
    if (frob2 == 0.0) return r;
    const double negligible = frob2 * 1e-300;
    constexpr double kTol = 1e-15;
    constexpr int kMaxSweeps = 80;

    std::vector<double> norms(n);
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        for (std::size_t j = 0; j < n; ++j) norms[j] = dot(r.work.col(j), r.work.col(j), m);
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double alpha = norms[p];
                const double beta = norms[q];
                if (alpha <= negligible || beta <= negligible) continue;
                double* wp = r.work.col(p);
                double* wq = r.work.col(q);
                const double gamma = dot(wp, wq, m);
                if (std::abs(gamma) <= kTol * std::sqrt(alpha * beta)) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
                const double c = 1.0 / std::hypot(1.0, t);
                const double s = c * t;
                for (std::size_t i = 0; i < m; ++i) {
                    const double x = wp[i];
                    const double y = wq[i];
                    wp[i] = c * x - s * y;
                    wq[i] = s * x + c * y;
                }
                double* vp = r.v.col(p);
                double* vq = r.v.col(q);
                for (std::size_t i = 0; i < n; ++i) {
                    const double x = vp[i];
                    const double y = vq[i];
                    vp[i] = c * x - s * y;
                    vq[i] = s * x + c * y;
                }
                norms[p] = alpha - t * gamma;
                norms[q] = beta + t * gamma;
            }
        }
        if (!rotated) return r;
    }
    throw NonConvergence("one-sided Jacobi SVD did not converge");
}

}  // namespace

CompactSVD compact_svd(const DenseMatrix& a, double rank_tol) {
    if (!a.all_finite()) throw NonFiniteValue("compact_svd: input contains NaN or Inf");
    if (rank_tol < 0.0) throw Error("compact_svd: rank_tol must be >= 0");
    const bool transposed = a.rows() < a.cols();
    const DenseMatrix tmp = transposed ? a.transpose() : DenseMatrix{};
    const DenseMatrix& in = transposed ? tmp : a;
    JacobiResult jr = one_sided_jacobi(in);
    const std::size_t m = in.rows();
    const std::size_t n = in.cols();

    std::vector<double> sigma(n);
    for (std::size_t j = 0; j < n; ++j) sigma[j] = std::sqrt(dot(jr.work.col(j), jr.work.col(j), m));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

    const double smax = n == 0 ? 0.0 : sigma[order[0]];
    std::size_t r = 0;
    while (r < n && sigma[order[r]] > 0.0 && sigma[order[r]] > rank_tol * smax) ++r;

    CompactSVD out;
    DenseMatrix u(m, r), v(n, r);
    out.S.resize(r);
    for (std::size_t k = 0; k < r; ++k) {
        const std::size_t j = order[k];
        out.S[k] = sigma[j];
        const double inv = 1.0 / sigma[j];
        for (std::size_t i = 0; i < m; ++i) u(i, k) = jr.work.col(j)[i] * inv;
        for (std::size_t i = 0; i < n; ++i) v(i, k) = jr.v.col(j)[i];
    }
    if (transposed) {
        out.U = std::move(v);
        out.V = std::move(u);
    } else {
        out.U = std::move(u);
        out.V = std::move(v);
    }
    return out;
}

std::vector<double> singular_values(const DenseMatrix& a) { return compact_svd(a, 0.0).S; }

// ------------------------------------------------------------- eigen problems

SymEig sym_eig(const SymMatrix& k) {
    const std::size_t n = k.dim();
    DenseMatrix a = k.dense();
    DenseMatrix v = DenseMatrix::identity(n);
    constexpr int kMaxSweeps = 100;

    const double frob2 = std::pow(a.frobenius_norm(), 2);
    bool converged = n <= 1 || frob2 == 0.0;
    for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < i; ++j) off += a(i, j) * a(i, j);
        if (off <= 1e-32 * frob2) {
            converged = true;
            break;
        }
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double app = a(p, p);
                const double aqq = a(q, q);
                if (std::abs(apq) <= 1e-18 * std::sqrt(std::abs(app * aqq)) ) {
                    a(p, q) = a(q, p) = 0.0;
                    continue;
                }
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::hypot(1.0, theta));
                const double c = 1.0 / std::hypot(1.0, t);
                const double s = t * c;
                for (std::size_t r = 0; r < n; ++r) {
                    const double arp = a(r, p);
                    const double arq = a(r, q);
                    a(r, p) = c * arp - s * arq;
                    a(r, q) = s * arp + c * arq;
                }
                double* rp = a.row(p).data();
                double* rq = a.row(q).data();
                for (std::size_t r = 0; r < n; ++r) {
                    const double x = rp[r];
                    const double y = rq[r];
                    rp[r] = c * x - s * y;
                    rq[r] = s * x + c * y;
                }
                a(p, q) = a(q, p) = 0.0;
                for (std::size_t r = 0; r < n; ++r) {
                    const double vrp = v(r, p);
                    const double vrq = v(r, q);
                    v(r, p) = c * vrp - s * vrq;
                    v(r, q) = s * vrp + c * vrq;
                }
            }
        }
    }
    if (!converged) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < i; ++j) off += a(i, j) * a(i, j);
        if (off > 1e-32 * frob2) throw NonConvergence("sym_eig: Jacobi sweep cap reached");
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });
    SymEig out;
    out.values.resize(n);
    out.vectors = DenseMatrix(n, n);
    for (std::size_t c = 0; c < n; ++c) {
        out.values[c] = a(order[c], order[c]);
        for (std::size_t r = 0; r < n; ++r) out.vectors(r, c) = v(r, order[c]);
    }
    return out;
}

SymMatrix psd_sqrt(const SymMatrix& k) {
    const SymEig eig = sym_eig(k);
    const std::size_t n = k.dim();
    const double lmax = n == 0 ? 0.0 : std::max(eig.values.front(), 0.0);
    std::vector<double> root(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double lam = eig.values[i];
        if (lam < -1e-6 * lmax) throw NotPSD("psd_sqrt: eigenvalue " + std::to_string(lam));
        root[i] = lam > 0.0 ? std::sqrt(lam) : 0.0;
    }
    DenseMatrix lower(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            double s = 0.0;
            for (std::size_t c = 0; c < n; ++c)
                s += eig.vectors(i, c) * root[c] * eig.vectors(j, c);
            lower(i, j) = s;
        }
    return SymMatrix::from_lower(lower);
}

double spec_norm_upper(const SymMatrix& k, std::size_t iters, double safety) {
    if (iters < 1) throw Error("spec_norm_upper: iters must be >= 1");
    if (safety < 1.0) throw Error("spec_norm_upper: safety must be >= 1");
    const std::size_t n = k.dim();
    if (n == 0) return 0.0;
    const std::size_t steps = std::min(iters, n);

    // Lanczos with full reorthogonalization from a fixed start vector.
    std::vector<std::vector<double>> basis;
    std::vector<double> alpha, beta;
    std::vector<double> v(n), w(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 0.37 * std::sin(1.0 + 2.3 * static_cast<double>(i));
    const double nv = std::sqrt(dot(v.data(), v.data(), n));
    for (double& x : v) x /= nv;

    double last_beta = 0.0;
    for (std::size_t it = 0; it < steps; ++it) {
        basis.push_back(v);
        for (std::size_t i = 0; i < n; ++i) w[i] = dot(k.dense().row(i).data(), v.data(), n);
        alpha.push_back(dot(v.data(), w.data(), n));
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& b : basis) {
                const double c = dot(b.data(), w.data(), n);
                for (std::size_t i = 0; i < n; ++i) w[i] -= c * b[i];
            }
        last_beta = std::sqrt(dot(w.data(), w.data(), n));
        if (last_beta <= 1e-14 * std::max(std::abs(alpha.back()), 1e-300)) {
            last_beta = 0.0;
            break;
        }
        if (it + 1 < steps) {
            beta.push_back(last_beta);
            for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / last_beta;
        }
    }

    const std::size_t kdim = alpha.size();
    SymMatrix t(kdim);
    for (std::size_t i = 0; i < kdim; ++i) {
        t.set(i, i, alpha[i]);
        if (i + 1 < kdim) t.set(i + 1, i, beta[i]);
    }
    const SymEig ritz = sym_eig(t);
    const double theta = ritz.values.front();
    // Ritz residual ||K y - theta y|| = beta_k * |last component of the Ritz vector|.
    const double residual = last_beta * std::abs(ritz.vectors(kdim - 1, 0));
    return std::max(safety * theta, theta + residual);
}

double spectral_norm(const DenseMatrix& a) {
    const auto s = singular_values(a);
    return s.empty() ? 0.0 : s.front();
}

double spectral_norm(const SymMatrix& k) {
    const SymEig e = sym_eig(k);
    double m = 0.0;
    for (double v : e.values) m = std::max(m, std::abs(v));
    return m;
}

double frobenius_distance(const DenseMatrix& a, const DenseMatrix& b) {
    return (a - b).frobenius_norm();
}

double inner(const DenseMatrix& a, const DenseMatrix& b) {
    require(a.rows() == b.rows() && a.cols() == b.cols(), "inner: shape mismatch");
    return dot(a.values().data(), b.values().data(), a.size());
}

}  // namespace nmuon
