#include "nmuon/matrix_sign.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace nmuon {

DenseMatrix msgn_exact(const DenseMatrix& a, double rank_tol) {
    const CompactSVD s = compact_svd(a, rank_tol);
    if (s.rank() == 0) return DenseMatrix(a.rows(), a.cols());
    return matmul_nt(s.U, s.V);
}

DenseMatrix newton_schulz5(const DenseMatrix& a) {
    const double nrm = a.frobenius_norm();
    if (nrm == 0.0) throw ZeroMatrix("newton_schulz5: input is the zero matrix");
    const auto [ca, cb, cc] = kNewtonSchulzCoeffs;
    DenseMatrix x = (1.0 / nrm) * a;
    const bool wide = x.rows() <= x.cols();
    for (int it = 0; it < 5; ++it) {
        // Work with the smaller Gram matrix; both orders give the same iterate.
        const DenseMatrix g = wide ? matmul_nt(x, x) : matmul_tn(x, x);
        DenseMatrix p = cb * g + cc * matmul(g, g);
        for (std::size_t i = 0; i < p.rows(); ++i) p(i, i) += ca;
        x = wide ? matmul(p, x) : matmul(x, p);
    }
    return x;
}

DenseMatrix msgn(const DenseMatrix& a, SignBackend backend) {
    if (backend == SignBackend::Svd) return msgn_exact(a);
    if (a.frobenius_norm() == 0.0) return DenseMatrix(a.rows(), a.cols());
    return newton_schulz5(a);
}

std::string to_string(SignBackend b) { return b == SignBackend::Svd ? "svd" : "ns5"; }

SignBackend sign_backend_from_string(const std::string& s) {
    if (s == "svd") return SignBackend::Svd;
    if (s == "ns5") return SignBackend::NewtonSchulz5;
    throw ConfigError("unknown sign backend '" + s + "' (expected svd or ns5)");
}

// ------------------------------------------------------------------ plans

double PolyStep::operator()(double x) const {
    double acc = 0.0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x + *it;
    return acc;
}

void PolyPlan::validate() const {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw Error("plan epsilon must lie in (0, 1)");
    if (!(s_out > 0.0 && s_out < 1.0)) throw Error("plan s_out must lie in (0, 1)");
    if (steps.empty()) throw Error("plan has no steps");
    std::size_t cost = 0;
    for (const auto& st : steps) {
        if (st.degree() < 1) throw Error("plan step needs degree >= 1");
        for (double c : st.coeffs)
            if (!std::isfinite(c) || std::abs(c) > kPlanCoeffMax)
                throw Error("plan coefficient outside [-CMAX, CMAX]");
        cost += st.sypp_cost;
    }
    if (cost != total_sypp) throw Error("plan total_sypp does not match its step costs");
}

std::string PolyPlan::label() const {
    std::ostringstream os;
    os << "eps=" << epsilon << "/total=" << total_sypp;
    return os.str();
}

namespace {

PolyPlan make_plan(double eps, double s_out, std::vector<PolyStep> steps) {
    PolyPlan p;
    p.epsilon = eps;
    p.s_out = s_out;
    p.steps = std::move(steps);
    for (const auto& s : p.steps) p.total_sypp += s.sypp_cost;
    p.validate();
    return p;
}

std::vector<PolyPlan> build_plans() {
    const PolyStep q0015{{1.991037, -15.856588, 31.760959}, 3};
    const PolyStep q003{{1.964953, -15.439061, 31.064790}, 3};
    const PolyStep q006{{1.915935, -14.653845, 29.754543}, 3};
    const PolyStep q012{{1.828900, -13.257429, 27.420730}, 3};
    return {
        make_plan(0.0015, 0.030717,
                  {q0015,
                   {{0.102569, 0.102569, 7.383161, 7.383161}, 4},
                   {{1, 2.541910, 2.541910}, 3},
                   {{1, 1.192261, 1.192261}, 2}}),
        make_plan(0.0015, 0.004865,
                  {q0015,
                   {{1, 3.839962, 3.839963}, 3},
                   {{1, 2.989700, 2.989700}, 3},
                   {{1.244063, 1.244063}, 2},
                   {{1, 1.047265, 1.047265}, 2}}),
        make_plan(0.003, 0.019885,
                  {q003,
                   {{1, 3.346712, 3.346712}, 3},
                   {{1.403255, 1.403255}, 2},
                   {{1, 1.140006, 1.140006}, 2}}),
        make_plan(0.003, 0.002839,
                  {q003,
                   {{1, 3.346712, 3.346712}, 3},
                   {{1, 1.757644, 1.757644}, 3},
                   {{1, 1.028634, 1.028634}, 2}}),
        make_plan(0.006, 0.047094,
                  {q006, {{1, 2.716205, 2.716205}, 3}, {{1, 1.262596, 1.262596}, 2}}),
        make_plan(0.006, 0.014106,
                  {q006,
                   {{0.639753, 0.639753, 4.060692, 4.060692}, 4},
                   {{1, 1.108734, 1.108734}, 2}}),
        make_plan(0.006, 0.002087,
                  {q006,
                   {{1, 2.716205, 2.716205}, 3},
                   {{1.160973, 1.160973}, 2},
                   {{1, 1.020113, 1.020111}, 2}}),
        make_plan(0.012, 0.047594,
                  {q012, {{1, 2.072900, 2.072900}, 3}, {{1.046594, 1.046594}, 1}}),
        make_plan(0.012, 0.008118,
                  {q012, {{1, 2.072900, 2.072900}, 3}, {{1, 1.071558, 1.071558}, 2}}),
        make_plan(0.025, 0.048057,
                  {{{1.528164, 1.400800, -12.902311, 0, 32}, 4}, {{1, 1.266514, 1.266514}, 2}}),
        make_plan(0.025, 0.008458,
                  {{{1.679044, -10.844625, 23.373926}, 3},
                   {{1.301562, 1.301562}, 2},
                   {{1, 1.073878, 1.073878}, 2}}),
    };
}

}  // namespace

const std::vector<PolyPlan>& builtin_plans() {
    static const std::vector<PolyPlan> plans = build_plans();
    return plans;
}

const PolyPlan& select_plan(double margin, std::optional<std::size_t> budget) {
    const PolyPlan* best = nullptr;
    double smallest_eps = std::numeric_limits<double>::infinity();
    for (const auto& p : builtin_plans()) {
        smallest_eps = std::min(smallest_eps, p.epsilon);
        if (p.epsilon > margin) continue;
        if (budget && p.total_sypp > *budget) continue;
        if (!best || p.epsilon > best->epsilon ||
            (p.epsilon == best->epsilon &&
             (p.s_out < best->s_out || (p.s_out == best->s_out && p.total_sypp < best->total_sypp))))
            best = &p;
    }
    if (!best) throw MarginTooSmall(margin, smallest_eps);
    return *best;
}

// ---------------------------------------------------------- poly_inverse

namespace {

// q(R) by Horner: c_d R + c_{d-1} I, then repeated multiply-and-shift.
SymMatrix eval_poly(const PolyStep& q, const SymMatrix& r) {
    const std::size_t n = r.dim();
    const auto& c = q.coeffs;
    SymMatrix acc = SymMatrix::identity(n, 0.0).axpby(0.0, c.back(), r);
    acc.add_diagonal(c[c.size() - 2]);
    for (std::size_t k = c.size() - 2; k-- > 0;) {
        acc = sypp(r, acc);
        acc.add_diagonal(c[k]);
    }
    return acc;
}

}  // namespace

SymMatrix poly_inverse(const SymMatrix& k, double gamma, const PolyPlan& plan, PolyInverseInfo* info) {
    if (!(gamma > 0.0)) throw Error("poly_inverse: gamma must be > 0");
    const std::size_t n = k.dim();
    SymMatrix kg = k;
    kg.add_diagonal(gamma);
    const double lambda_bar = spec_norm_upper(kg, 50);
    const double alpha = 1.0 / lambda_bar;
    const double margin = alpha * gamma;
    if (info) *info = {lambda_bar, margin, &plan};
    if (margin < plan.epsilon) throw MarginTooSmall(margin, plan.epsilon);

    const SymMatrix eye = SymMatrix::identity(n);
    SymMatrix r = eye.axpby(1.0, -alpha, kg);
    SymMatrix x = eye;
    for (std::size_t s = 0; s < plan.steps.size(); ++s) {
        const SymMatrix q = eval_poly(plan.steps[s], r);
        x = sypp(x, q);
        if (s + 1 == plan.steps.size()) break;
        // I - R_{k-1} = alpha K_gamma X_{k-1}; R_k = I - (I - R_{k-1}) Q_k.
        const SymMatrix ir = eye.axpby(1.0, -1.0, r);
        r = eye.axpby(1.0, -1.0, sypp(ir, q));
    }
    return x.scaled(alpha);
}

SymMatrix poly_inverse(const SymMatrix& k, double gamma, std::optional<std::size_t> budget,
                       PolyInverseInfo* info) {
    if (!(gamma > 0.0)) throw Error("poly_inverse: gamma must be > 0");
    SymMatrix kg = k;
    kg.add_diagonal(gamma);
    const double margin = gamma / spec_norm_upper(kg, 50);
    return poly_inverse(k, gamma, select_plan(margin, budget), info);
}

// ---------------------------------------------------------- certification

namespace {

double sup_abs_phi(const PolyStep& q, double lo, double hi, std::size_t grid_points) {
    double sup = 0.0;
    const double h = (hi - lo) / static_cast<double>(grid_points - 1);
    for (std::size_t i = 0; i < grid_points; ++i) {
        const double r = i + 1 == grid_points ? hi : lo + h * static_cast<double>(i);
        sup = std::max(sup, std::abs(1.0 - (1.0 - r) * q(r)));
    }
    return sup;
}

double chain(const PolyPlan& plan, std::size_t grid_points, double pad, std::vector<double>* stages) {
    double s = 1.0 - plan.epsilon;
    for (std::size_t k = 0; k < plan.steps.size(); ++k) {
        const double hi = (1.0 + pad) * s;
        const double lo = k == 0 ? 0.0 : -hi;
        s = sup_abs_phi(plan.steps[k], lo, hi, grid_points) + kNoiseAbs;
        if (stages) stages->push_back(s);
    }
    return s;
}

}  // namespace

PlanCertificate certify_plan(const PolyPlan& plan, std::size_t grid_points) {
    if (grid_points < 10000) throw Error("certify_plan: grid_points must be >= 10^4");
    plan.validate();
    PlanCertificate c;
    c.bound = chain(plan, grid_points, 0.0, &c.stage_bounds);
    c.padded_bound = chain(plan, grid_points, kIntervalPadRel, nullptr);
    return c;
}

double verify_plan(const PolyPlan& plan, std::size_t grid_points) {
    const PlanCertificate c = certify_plan(plan, grid_points);
    if (c.bound > plan.s_out + kPublishedRounding) throw PlanViolation(c.bound, plan.s_out);
    return c.bound;
}

PolyPlan corrupt_plan(const PolyPlan& plan) {
    PolyPlan bad = plan;
    bad.steps.front().coeffs.front() *= 2.0;
    return bad;
}

// ------------------------------------------------------------------ JSON

std::string plans_to_json(const std::vector<PolyPlan>& plans) {
    nlohmann::json doc = nlohmann::json::array();
    for (const auto& p : plans) {
        nlohmann::json steps = nlohmann::json::array();
        for (const auto& s : p.steps) steps.push_back({{"coeffs", s.coeffs}, {"sypp_cost", s.sypp_cost}});
        doc.push_back({{"epsilon", p.epsilon},
                       {"total_sypp", p.total_sypp},
                       {"s_out", p.s_out},
                       {"steps", steps}});
    }
    return doc.dump(2);
}

std::vector<PolyPlan> plans_from_json(const std::string& text) {
    std::vector<PolyPlan> out;
    try {
        const auto doc = nlohmann::json::parse(text);
        for (const auto& item : doc) {
            PolyPlan p;
            p.epsilon = item.at("epsilon").get<double>();
            p.s_out = item.at("s_out").get<double>();
            p.total_sypp = item.at("total_sypp").get<std::size_t>();
            for (const auto& s : item.at("steps"))
                p.steps.push_back({s.at("coeffs").get<std::vector<double>>(), s.at("sypp_cost").get<std::size_t>()});
            p.validate();
            out.push_back(std::move(p));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed plan JSON: ") + e.what());
    }
    return out;
}

}  // namespace nmuon
