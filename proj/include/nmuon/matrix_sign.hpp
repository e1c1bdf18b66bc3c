#pragma once

// Matrix sign (exact and Newton-Schulz) and the polynomial inverse with its
// embedded, verifiable plans.

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "nmuon/dense.hpp"

namespace nmuon {

// U V^T from the compact SVD; the zero matrix maps to zero.
DenseMatrix msgn_exact(const DenseMatrix& a, double rank_tol = kDefaultRankTol);

inline constexpr std::array<double, 3> kNewtonSchulzCoeffs{3.4445, -4.7750, 2.0315};

// Five quintic iterations from A / ||A||_F. Throws ZeroMatrix for A = 0.
DenseMatrix newton_schulz5(const DenseMatrix& a);

enum class SignBackend { Svd, NewtonSchulz5 };

DenseMatrix msgn(const DenseMatrix& a, SignBackend backend);

std::string to_string(SignBackend b);
SignBackend sign_backend_from_string(const std::string& s);

inline constexpr double kPlanCoeffMax = 32.0;
inline constexpr double kIntervalPadRel = 1e-3;
inline constexpr double kNoiseAbs = 1e-3;
// Published bounds carry six decimals.
inline constexpr double kPublishedRounding = 5e-7;

struct PolyStep {
    std::vector<double> coeffs;  // ascending degree
    std::size_t sypp_cost = 0;

    double operator()(double x) const;
    std::size_t degree() const noexcept { return coeffs.empty() ? 0 : coeffs.size() - 1; }
};

struct PolyPlan {
    double epsilon = 0.0;
    std::vector<PolyStep> steps;
    std::size_t total_sypp = 0;
    double s_out = 0.0;

    // Throws Error when a structural invariant fails.
    void validate() const;
    std::string label() const;
};

// The eleven published plans, ordered as in the source table.
const std::vector<PolyPlan>& builtin_plans();

// Largest epsilon <= margin, then smallest s_out, then smallest total cost.
// Throws MarginTooSmall when no plan fits.
const PolyPlan& select_plan(double margin, std::optional<std::size_t> budget = std::nullopt);

struct PolyInverseInfo {
    double lambda_bar = 0.0;  // upper bound on lambda_max(K + gamma I)
    double margin = 0.0;      // gamma / lambda_bar
    const PolyPlan* plan = nullptr;
};

// alpha * X_T approximating (K + gamma I)^{-1}.
SymMatrix poly_inverse(const SymMatrix& k, double gamma, const PolyPlan& plan,
                       PolyInverseInfo* info = nullptr);
// Same, with the plan picked by select_plan.
SymMatrix poly_inverse(const SymMatrix& k, double gamma,
                       std::optional<std::size_t> budget = std::nullopt,
                       PolyInverseInfo* info = nullptr);

struct PlanCertificate {
    double bound = 0.0;         // chain over [0, s0] then |r| <= s_{k-1}
    double padded_bound = 0.0;  // same chain with every interval widened by the pad
    std::vector<double> stage_bounds;
};

PlanCertificate certify_plan(const PolyPlan& plan, std::size_t grid_points);

// Chained residual bound; throws PlanViolation when it exceeds s_out beyond
// the rounding of the published value.
double verify_plan(const PolyPlan& plan, std::size_t grid_points = 200001);

// Copy of `plan` with the constant coefficient of q_1 doubled.
PolyPlan corrupt_plan(const PolyPlan& plan);

std::string plans_to_json(const std::vector<PolyPlan>& plans);
std::vector<PolyPlan> plans_from_json(const std::string& text);

}  // namespace nmuon
