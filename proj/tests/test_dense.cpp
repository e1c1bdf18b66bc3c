#include <gtest/gtest.h>

#include <cmath>

#include "nmuon/dense.hpp"
#include "nmuon/random.hpp"

using namespace nmuon;

namespace {

double max_entry_diff(const DenseMatrix& a, const DenseMatrix& b) { return (a - b).max_abs(); }

DenseMatrix reconstruct(const CompactSVD& s) {
    DenseMatrix us = s.U;
    for (std::size_t i = 0; i < us.rows(); ++i)
        for (std::size_t k = 0; k < s.rank(); ++k) us(i, k) *= s.S[k];
    return matmul_nt(us, s.V);
}

double orthonormality_defect(const DenseMatrix& q) {
    return (matmul_tn(q, q) - DenseMatrix::identity(q.cols())).frobenius_norm();
}

}  // namespace

TEST(DenseMatrix, RejectsBadInput) {
    EXPECT_THROW(DenseMatrix(2, 2, std::vector<double>{1, 2, 3}), DimensionMismatch);
    EXPECT_THROW(DenseMatrix(1, 2, std::vector<double>{1, NAN}), NonFiniteValue);
    EXPECT_THROW(DenseMatrix(1, 1, std::vector<double>{INFINITY}), NonFiniteValue);
}

TEST(Matmul, SmallProducts) {
    const auto a = DenseMatrix::from_rows({{1, 2}, {3, 4}});
    EXPECT_EQ(matmul(DenseMatrix::identity(2), a), a);
    EXPECT_EQ(matmul(a, DenseMatrix::identity(2)), a);
    const auto r = matmul(DenseMatrix::from_rows({{1, 1}}), DenseMatrix::from_rows({{1}, {1}}));
    EXPECT_EQ(r, DenseMatrix::from_rows({{2}}));
    EXPECT_THROW(matmul(a, DenseMatrix(3, 1)), DimensionMismatch);
}

TEST(Matmul, TransposedVariantsAgree) {
    Rng rng = make_rng(11);
    const auto a = gaussian_matrix(rng, 7, 5);
    const auto b = gaussian_matrix(rng, 7, 4);
    const auto c = gaussian_matrix(rng, 3, 5);
    EXPECT_LT(max_entry_diff(matmul_tn(a, b), matmul(a.transpose(), b)), 1e-13);
    EXPECT_LT(max_entry_diff(matmul_nt(a, c), matmul(a, c.transpose())), 1e-13);
}

TEST(Syrk, HandExample) {
    const auto z = DenseMatrix::from_rows({{1, 0, 1}, {0, 1, 1}});
    const SymMatrix k = syrk(z);
    EXPECT_EQ(k.dense(), DenseMatrix::from_rows({{2, 1}, {1, 2}}));
    EXPECT_EQ(syrk(DenseMatrix::identity(4)).dense(), DenseMatrix::identity(4));
}

TEST(Syrk, MatchesFullProduct) {
    Rng rng = make_rng(12);
    for (auto [n, N] : {std::pair<std::size_t, std::size_t>{8, 64}, {128, 1024}}) {
        const auto z = gaussian_matrix(rng, n, N);
        const SymMatrix k = syrk(z);
        EXPECT_TRUE(k.exactly_symmetric());
        EXPECT_LT(max_entry_diff(k.dense(), matmul(z, z.transpose())), 1e-12 * std::sqrt(double(N)));
    }
}

TEST(Sypp, Examples) {
    const SymMatrix q = random_spd(*std::make_unique<Rng>(make_rng(13)), 6);
    EXPECT_LT(max_entry_diff(sypp(SymMatrix::identity(6), q).dense(), q.dense()), 1e-15);
    const double d1[] = {1, 2}, d2[] = {3, 4}, d3[] = {3, 8};
    EXPECT_EQ(sypp(SymMatrix::diagonal(d1), SymMatrix::diagonal(d2)), SymMatrix::diagonal(d3));
}

TEST(Sypp, PolynomialsOfSameMatrix) {
    Rng rng = make_rng(14);
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    for (int trial = 0; trial < 10; ++trial) {
        const SymMatrix k = random_spd(rng, 24, 50.0);
        auto poly = [&](int deg) {
            SymMatrix acc = SymMatrix::identity(24, coef(rng));
            SymMatrix pw = SymMatrix::identity(24);
            for (int d = 1; d <= deg; ++d) {
                pw = SymMatrix::symmetrize(matmul(pw.dense(), k.dense()));
                acc = acc.axpby(1.0, coef(rng), pw);
            }
            return acc;
        };
        const SymMatrix p = poly(1 + trial % 4);
        const SymMatrix q = poly(4 - trial % 4);
        const SymMatrix pq = sypp(p, q);
        EXPECT_TRUE(pq.exactly_symmetric());
        const DenseMatrix full = matmul(p.dense(), q.dense());
        EXPECT_LT((pq.dense() - full).frobenius_norm() / full.frobenius_norm(), 1e-11);
    }
}

TEST(Cholesky, HandFactor) {
    const auto k = SymMatrix::from_lower(DenseMatrix::from_rows({{4, 2}, {2, 3}}));
    const DenseMatrix l = cholesky_factor(k);
    EXPECT_DOUBLE_EQ(l(0, 0), 2.0);
    EXPECT_DOUBLE_EQ(l(0, 1), 0.0);
    EXPECT_DOUBLE_EQ(l(1, 0), 1.0);
    EXPECT_DOUBLE_EQ(l(1, 1), std::sqrt(2.0));
    EXPECT_EQ(cholesky_factor(SymMatrix::identity(3)), DenseMatrix::identity(3));
}

TEST(Cholesky, IndefiniteReportsPivot) {
    const auto k = SymMatrix::from_lower(DenseMatrix::from_rows({{1, 2}, {2, 1}}));
    try {
        cholesky_factor(k);
        FAIL() << "expected NotPositiveDefinite";
    } catch (const NotPositiveDefinite& e) {
        EXPECT_EQ(e.pivot_index(), 1u);
        EXPECT_DOUBLE_EQ(e.pivot_value(), -3.0);
    }
    EXPECT_THROW(cholesky_inverse(k), NotPositiveDefinite);
}

TEST(Cholesky, Inverse) {
    const auto k = SymMatrix::from_lower(DenseMatrix::from_rows({{4, 2}, {2, 3}}));
    const SymMatrix inv = cholesky_inverse(k);
    const auto want = DenseMatrix::from_rows({{3.0 / 8, -2.0 / 8}, {-2.0 / 8, 4.0 / 8}});
    EXPECT_LT(max_entry_diff(inv.dense(), want), 1e-15);
    EXPECT_EQ(cholesky_inverse(SymMatrix::identity(5)), SymMatrix::identity(5));
}

TEST(Cholesky, InverseResidualScalesWithCondition) {
    Rng rng = make_rng(15);
    for (double cond : {1e2, 1e4, 1e6, 1e8}) {
        const SymMatrix k = random_spd(rng, 32, cond);
        const SymMatrix inv = cholesky_inverse(k);
        EXPECT_TRUE(inv.exactly_symmetric());
        const double res = (matmul(k.dense(), inv.dense()) - DenseMatrix::identity(32)).frobenius_norm();
        EXPECT_LE(res, 1e-8 * cond) << "cond " << cond;
    }
}

TEST(CompactSvd, Diagonal) {
    const auto a = DenseMatrix::from_rows({{2, 0}, {0, -3}});
    const CompactSVD s = compact_svd(a);
    ASSERT_EQ(s.rank(), 2u);
    EXPECT_DOUBLE_EQ(s.S[0], 3.0);
    EXPECT_DOUBLE_EQ(s.S[1], 2.0);
    EXPECT_LT(max_entry_diff(reconstruct(s), a), 1e-15);
}

TEST(CompactSvd, ZeroAndRankOne) {
    EXPECT_EQ(compact_svd(DenseMatrix(4, 3)).rank(), 0u);
    Rng rng = make_rng(16);
    auto u = random_orthonormal_columns(rng, 6, 1);
    auto v = random_orthonormal_columns(rng, 4, 1);
    const CompactSVD s = compact_svd(matmul_nt(u, v));
    ASSERT_EQ(s.rank(), 1u);
    EXPECT_NEAR(s.S[0], 1.0, 1e-14);
}

TEST(CompactSvd, RandomShapesContract) {
    Rng rng = make_rng(17);
    const std::pair<std::size_t, std::size_t> shapes[] = {{10, 10}, {30, 12}, {12, 30}, {64, 65}, {1, 7}};
    for (auto [m, n] : shapes) {
        const auto a = gaussian_matrix(rng, m, n);
        const CompactSVD s = compact_svd(a);
        EXPECT_EQ(s.rank(), std::min(m, n));
        EXPECT_LT(orthonormality_defect(s.U), 1e-10);
        EXPECT_LT(orthonormality_defect(s.V), 1e-10);
        for (std::size_t k = 0; k < s.rank(); ++k) {
            EXPECT_GT(s.S[k], 0.0);
            if (k > 0) EXPECT_LE(s.S[k], s.S[k - 1]);
        }
        EXPECT_LT((reconstruct(s) - a).frobenius_norm(), 1e-9 * a.frobenius_norm());

        const CompactSVD scaled = compact_svd(3.5 * a);
        for (std::size_t k = 0; k < s.rank(); ++k) EXPECT_NEAR(scaled.S[k], 3.5 * s.S[k], 1e-12 * scaled.S[0]);
    }
}

TEST(CompactSvd, RankDeficient) {
    Rng rng = make_rng(18);
    const auto a = matmul(gaussian_matrix(rng, 20, 3), gaussian_matrix(rng, 3, 15));
    const CompactSVD s = compact_svd(a);
    EXPECT_EQ(s.rank(), 3u);
    EXPECT_LT(orthonormality_defect(s.U), 1e-10);
    EXPECT_LT(orthonormality_defect(s.V), 1e-10);
    EXPECT_LT((reconstruct(s) - a).frobenius_norm(), 1e-9 * a.frobenius_norm());
}

TEST(SymEig, DiagonalAndIdentity) {
    const double d[] = {1, 3};
    const SymEig e = sym_eig(SymMatrix::diagonal(d));
    EXPECT_DOUBLE_EQ(e.values[0], 3.0);
    EXPECT_DOUBLE_EQ(e.values[1], 1.0);
    EXPECT_DOUBLE_EQ(std::abs(e.vectors(1, 0)), 1.0);
    const SymEig id = sym_eig(SymMatrix::identity(5));
    for (double v : id.values) EXPECT_DOUBLE_EQ(v, 1.0);
    EXPECT_LT(orthonormality_defect(id.vectors), 1e-15);
}

TEST(SymEig, Reconstruction) {
    Rng rng = make_rng(19);
    for (std::size_t n : {2u, 9u, 40u}) {
        const SymMatrix k = random_spd(rng, n, 1e3);
        const SymEig e = sym_eig(k);
        EXPECT_LT(orthonormality_defect(e.vectors), 1e-12);
        DenseMatrix pl = e.vectors;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) pl(i, j) *= e.values[j];
        EXPECT_LT((matmul_nt(pl, e.vectors) - k.dense()).frobenius_norm() / k.frobenius_norm(), 1e-9);
        for (std::size_t i = 1; i < n; ++i) EXPECT_LE(e.values[i], e.values[i - 1]);
    }
}

TEST(PsdSqrt, Examples) {
    const double d[] = {4, 9}, r[] = {2, 3};
    EXPECT_LT(max_entry_diff(psd_sqrt(SymMatrix::diagonal(d)).dense(), SymMatrix::diagonal(r).dense()), 1e-15);
    EXPECT_LT(max_entry_diff(psd_sqrt(SymMatrix::identity(4)).dense(), DenseMatrix::identity(4)), 1e-15);
}

TEST(PsdSqrt, SquaresBack) {
    Rng rng = make_rng(20);
    const auto m = gaussian_matrix(rng, 16, 10);  // rank-deficient M M^T
    const SymMatrix k = syrk(m);
    const SymMatrix root = psd_sqrt(k);
    const DenseMatrix sq = matmul(root.dense(), root.dense());
    EXPECT_LT((sq - k.dense()).frobenius_norm() / k.frobenius_norm(), 1e-8);
    EXPECT_GE(sym_eig(root).values.back(), -1e-8);
}

TEST(PsdSqrt, RejectsIndefinite) {
    const double d[] = {1, -0.5};
    EXPECT_THROW(psd_sqrt(SymMatrix::diagonal(d)), NotPSD);
}

TEST(SpecNormUpper, Examples) {
    const double d[] = {5, 1};
    for (std::size_t iters : {1u, 2u, 5u, 30u}) EXPECT_GE(spec_norm_upper(SymMatrix::diagonal(d), iters), 5.0);
    const double id = spec_norm_upper(SymMatrix::identity(7));
    EXPECT_GE(id, 1.0);
    EXPECT_LE(id, 1.02);
}

TEST(SpecNormUpper, BracketsLambdaMax) {
    Rng rng = make_rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        const SymMatrix k = syrk(gaussian_matrix(rng, 64, 80));
        const double lmax = sym_eig(k).values.front();
        const double ub = spec_norm_upper(k, 30);
        EXPECT_GE(ub, lmax);
        EXPECT_LE(ub, 1.1 * lmax);
    }
}
