#include "nmuon/precond.hpp"

#include <cmath>
#include <limits>

#include <json.hpp>

#include "nmuon/matrix_sign.hpp"

namespace nmuon {

std::string to_string(InverseBackend b) { return b == InverseBackend::Cholesky ? "cholesky" : "poly"; }

InverseBackend inverse_backend_from_string(const std::string& s) {
    if (s == "cholesky") return InverseBackend::Cholesky;
    if (s == "poly") return InverseBackend::Polynomial;
    throw ConfigError("unknown inverse backend '" + s + "' (expected cholesky or poly)");
}

void PrecondConfig::validate(std::size_t dim) const {
    if (!(beta >= 0.0 && beta < 1.0)) throw ConfigError("ewma beta must lie in [0, 1)");
    if (!(gamma > 0.0)) throw ConfigError("ridge gamma must be > 0");
    if (refresh_k < 1) throw ConfigError("refresh_k must be >= 1");
    if (blocks < 1 || dim % blocks != 0)
        throw ConfigError("blocks must be >= 1 and divide the layer input dimension");
}

SecondMomentState::SecondMomentState(std::size_t dim, PrecondConfig cfg) : dim_(dim), cfg_(cfg) {
    if (dim == 0) throw DimensionMismatch("SecondMomentState: dim must be >= 1");
    cfg_.validate(dim);
    const std::size_t bd = dim / cfg_.blocks;
    for (std::size_t b = 0; b < cfg_.blocks; ++b) {
        k_.push_back(SymMatrix::identity(bd, kInitialSecondMoment));
        // Before the first refresh the cached inverse is that of the initial K.
        k_inv_.push_back(SymMatrix::identity(bd, 1.0 / kInitialSecondMoment));
        ridge_.push_back(0.0);
    }
}

namespace {

SymMatrix invert(const SymMatrix& k, double ridge, InverseBackend backend) {
    if (backend == InverseBackend::Polynomial) return poly_inverse(k, ridge);
    SymMatrix kg = k;
    kg.add_diagonal(ridge);
    return cholesky_inverse(kg);
}

}  // namespace

bool SecondMomentState::maybe_refresh(const DenseMatrix& z, std::size_t step) {
    if ((step + 1) % cfg_.refresh_k != 0) return false;
    if (z.rows() != dim_) throw DimensionMismatch("maybe_refresh: Z must have dim rows");
    if (z.cols() == 0) return false;

    const std::size_t bd = block_dim();
    const double inv_n = 1.0 / static_cast<double>(z.cols());
    std::vector<SymMatrix> next_k, next_inv;
    std::vector<double> next_ridge;
    std::size_t retries = 0;
    for (std::size_t b = 0; b < cfg_.blocks; ++b) {
        DenseMatrix zb(bd, z.cols());
        for (std::size_t i = 0; i < bd; ++i) {
            const auto src = z.row(b * bd + i);
            std::copy(src.begin(), src.end(), zb.row(i).begin());
        }
        SymMatrix kb = k_[b].axpby(cfg_.beta, (1.0 - cfg_.beta) * inv_n, syrk(zb));
        double ridge = cfg_.gamma * kb.trace() / static_cast<double>(bd);
        if (!(ridge > 0.0)) ridge = cfg_.gamma * kInitialSecondMoment;
        for (int attempt = 0;; ++attempt) {
            try {
                next_inv.push_back(invert(kb, ridge, cfg_.backend));
                break;
            } catch (const NotPositiveDefinite&) {
                if (attempt == kMaxRidgeRetries) throw;
            } catch (const MarginTooSmall&) {
                if (attempt == kMaxRidgeRetries) throw;
            }
            ridge *= 10.0;
            ++retries;
        }
        next_k.push_back(std::move(kb));
        next_ridge.push_back(ridge);
    }
    k_ = std::move(next_k);
    k_inv_ = std::move(next_inv);
    ridge_ = std::move(next_ridge);
    retries_ += retries;
    ++refreshes_;
    return true;
}

DenseMatrix SecondMomentState::apply_right_precond(const DenseMatrix& g) const {
    if (g.cols() != dim_) throw DimensionMismatch("apply_right_precond: G must have dim columns");
    if (cfg_.blocks == 1) return matmul(g, k_inv_[0]);
    const std::size_t bd = block_dim();
    DenseMatrix out(g.rows(), dim_);
    DenseMatrix gb(g.rows(), bd);
    for (std::size_t b = 0; b < cfg_.blocks; ++b) {
        for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < bd; ++j) gb(i, j) = g(i, b * bd + j);
        const DenseMatrix pb = matmul(gb, k_inv_[b]);
        for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < bd; ++j) out(i, b * bd + j) = pb(i, j);
    }
    return out;
}

namespace {

SymMatrix assemble(const std::vector<SymMatrix>& blocks, std::size_t dim) {
    SymMatrix out(dim);
    std::size_t off = 0;
    for (const auto& b : blocks) {
        for (std::size_t i = 0; i < b.dim(); ++i)
            for (std::size_t j = 0; j <= i; ++j) out.set(off + i, off + j, b(i, j));
        off += b.dim();
    }
    return out;
}

nlohmann::json sym_to_json(const SymMatrix& s) {
    return {{"dim", s.dim()}, {"data", s.dense().storage()}};
}

SymMatrix sym_from_json(const nlohmann::json& j) {
    const auto n = j.at("dim").get<std::size_t>();
    return SymMatrix::from_lower(DenseMatrix(n, n, j.at("data").get<std::vector<double>>()));
}

}  // namespace

SymMatrix SecondMomentState::k() const { return assemble(k_, dim_); }
SymMatrix SecondMomentState::k_inv() const { return assemble(k_inv_, dim_); }

std::string SecondMomentState::to_json() const {
    nlohmann::json doc;
    doc["dim"] = dim_;
    doc["beta"] = cfg_.beta;
    doc["gamma"] = cfg_.gamma;
    doc["refresh_k"] = cfg_.refresh_k;
    doc["blocks"] = cfg_.blocks;
    doc["backend"] = to_string(cfg_.backend);
    doc["refreshes"] = refreshes_;
    doc["retries"] = retries_;
    doc["ridge"] = ridge_;
    doc["K"] = nlohmann::json::array();
    doc["K_inv"] = nlohmann::json::array();
    for (std::size_t b = 0; b < k_.size(); ++b) {
        doc["K"].push_back(sym_to_json(k_[b]));
        doc["K_inv"].push_back(sym_to_json(k_inv_[b]));
    }
    return doc.dump();
}

SecondMomentState SecondMomentState::from_json(const std::string& text) {
    try {
        const auto doc = nlohmann::json::parse(text);
        PrecondConfig cfg;
        cfg.beta = doc.at("beta").get<double>();
        cfg.gamma = doc.at("gamma").get<double>();
        cfg.refresh_k = doc.at("refresh_k").get<std::size_t>();
        cfg.blocks = doc.at("blocks").get<std::size_t>();
        cfg.backend = inverse_backend_from_string(doc.at("backend").get<std::string>());
        SecondMomentState s(doc.at("dim").get<std::size_t>(), cfg);
        s.refreshes_ = doc.at("refreshes").get<std::size_t>();
        s.retries_ = doc.at("retries").get<std::size_t>();
        s.ridge_ = doc.at("ridge").get<std::vector<double>>();
        for (std::size_t b = 0; b < cfg.blocks; ++b) {
            s.k_[b] = sym_from_json(doc.at("K").at(b));
            s.k_inv_[b] = sym_from_json(doc.at("K_inv").at(b));
            if (s.k_[b].dim() != s.block_dim() || s.k_inv_[b].dim() != s.block_dim())
                throw ConfigError("snapshot block dimension mismatch");
        }
        if (s.ridge_.size() != cfg.blocks) throw ConfigError("snapshot ridge list has the wrong length");
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed second-moment snapshot: ") + e.what());
    }
}

SecondMomentReport diagnostics(const SymMatrix& k) {
    const std::size_t n = k.dim();
    if (n == 0) throw DimensionMismatch("diagnostics: empty matrix");
    SecondMomentReport r;
    r.d_min = std::numeric_limits<double>::infinity();
    r.d_max = -std::numeric_limits<double>::infinity();
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = k(i, i);
        r.d_min = std::min(r.d_min, d);
        r.d_max = std::max(r.d_max, d);
        r.d_mean += d;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) off += std::abs(k(i, j));
    }
    r.d_mean /= static_cast<double>(n);
    r.offdiag_mass = off / static_cast<double>(n);
    const SymEig e = sym_eig(k);
    r.lambda_max = e.values.front();
    r.lambda_min = e.values.back();
    r.condition = r.lambda_min > 0.0 ? r.lambda_max / r.lambda_min : std::numeric_limits<double>::infinity();
    return r;
}

}  // namespace nmuon
