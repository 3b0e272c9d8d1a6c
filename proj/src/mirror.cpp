#include "smd/mirror.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace smd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

inline double soft_threshold(double v, double beta) {
    if (v > beta)
        return v - beta;
    if (v < -beta)
        return v + beta;
    return 0.0;
}

inline double xlogx(double v) { return v > 0.0 ? v * std::log(v) : 0.0; }

inline double weight(const Vector& w, Eigen::Index j) { return w.size() == 0 ? 1.0 : w[j]; }

void check_weights(const Vector& w, std::size_t dim) {
    if (w.size() == 0)
        return;
    if (static_cast<std::size_t>(w.size()) != dim)
        throw std::invalid_argument("mirror map: weight vector length does not match dimension");
    for (double v : w)
        if (!(v > 0.0) || !std::isfinite(v))
            throw std::invalid_argument("mirror map: weights must be positive and finite");
}

}  // namespace

std::string to_string(MirrorKind kind) {
    switch (kind) {
    case MirrorKind::quadratic: return "quadratic";
    case MirrorKind::nonneg_quadratic: return "nonneg_quadratic";
    case MirrorKind::entropy_simplex: return "entropy_simplex";
    case MirrorKind::elastic_net: return "elastic_net";
    case MirrorKind::product: return "product";
    }
    return "unknown";
}

MirrorMap MirrorMap::quadratic(std::size_t dim, Vector weights) {
    if (dim == 0)
        throw std::invalid_argument("mirror map: dimension must be positive");
    check_weights(weights, dim);
    MirrorMap m;
    m.kind_ = MirrorKind::quadratic;
    m.dim_ = dim;
    m.weights_ = std::move(weights);
    return m;
}

MirrorMap MirrorMap::nonneg_quadratic(std::size_t dim, Vector weights) {
    MirrorMap m = quadratic(dim, std::move(weights));
    m.kind_ = MirrorKind::nonneg_quadratic;
    return m;
}

MirrorMap MirrorMap::elastic_net(std::size_t dim, double beta, Vector weights) {
    if (!(beta >= 0.0) || !std::isfinite(beta))
        throw std::invalid_argument("elastic_net: beta must be finite and >= 0");
    MirrorMap m = quadratic(dim, std::move(weights));
    m.kind_ = MirrorKind::elastic_net;
    m.beta_ = beta;
    return m;
}

MirrorMap MirrorMap::entropy_simplex(Vector weights) {
    if (weights.size() == 0)
        throw std::invalid_argument("entropy_simplex: quadrature weights are required");
    check_weights(weights, static_cast<std::size_t>(weights.size()));
    MirrorMap m;
    m.kind_ = MirrorKind::entropy_simplex;
    m.dim_ = static_cast<std::size_t>(weights.size());
    m.weights_ = std::move(weights);
    return m;
}

MirrorMap MirrorMap::product(std::vector<MirrorMap> components) {
    if (components.empty())
        throw std::invalid_argument("product map: no components");
    MirrorMap m;
    m.kind_ = MirrorKind::product;
    m.offsets_.push_back(0);
    m.sigma_ = kInf;
    for (const auto& c : components) {
        m.dim_ += c.dim();
        m.offsets_.push_back(m.dim_);
        m.sigma_ = std::min(m.sigma_, c.sigma());
    }
    m.components_ = std::move(components);
    return m;
}

Geometry MirrorMap::geometry() const noexcept {
    switch (kind_) {
    case MirrorKind::entropy_simplex: return Geometry::weighted_l1;
    case MirrorKind::product:
        for (const auto& c : components_)
            if (c.geometry() != Geometry::weighted_l2)
                return Geometry::mixed;
        return Geometry::weighted_l2;
    default: return Geometry::weighted_l2;
    }
}

Vector MirrorMap::l2_weights() const {
    if (geometry() != Geometry::weighted_l2)
        throw std::logic_error("l2_weights: map is not l2-type");
    if (kind_ != MirrorKind::product)
        return weights_.size() == 0 ? Vector(Vector::Ones(static_cast<Eigen::Index>(dim_))) : weights_;
    Vector w(static_cast<Eigen::Index>(dim_));
    for (std::size_t c = 0; c < components_.size(); ++c)
        w.segment(static_cast<Eigen::Index>(offsets_[c]), static_cast<Eigen::Index>(components_[c].dim())) =
            components_[c].l2_weights();
    return w;
}

bool MirrorMap::unit_weighted() const {
    if (kind_ == MirrorKind::product)
        return std::all_of(components_.begin(), components_.end(), [](const auto& c) { return c.unit_weighted(); });
    return weights_.size() == 0;
}

void MirrorMap::check_length(const Vector& v, const char* what) const {
    if (static_cast<std::size_t>(v.size()) != dim_)
        throw std::invalid_argument(std::string(what) + ": vector length " + std::to_string(v.size()) +
                                    " does not match map dimension " + std::to_string(dim_));
}

Vector MirrorMap::solve(const Vector& xi) const {
    check_length(xi, "mirror solve");
    if (!xi.allFinite())
        throw std::invalid_argument("mirror solve: non-finite dual vector");
    return solve_unchecked(xi);
}

Vector MirrorMap::solve_unchecked(const Vector& xi) const {
    const auto n = static_cast<Eigen::Index>(dim_);
    switch (kind_) {
    case MirrorKind::quadratic:
        if (weights_.size() == 0)
            return xi;
        return xi.cwiseQuotient(weights_);
    case MirrorKind::nonneg_quadratic: {
        Vector x(n);
        for (Eigen::Index j = 0; j < n; ++j)
            x[j] = std::max(weights_.size() == 0 ? xi[j] : xi[j] / weights_[j], 0.0);
        return x;
    }
    case MirrorKind::elastic_net: {
        Vector x(n);
        for (Eigen::Index j = 0; j < n; ++j)
            x[j] = soft_threshold(weights_.size() == 0 ? xi[j] : xi[j] / weights_[j], beta_);
        return x;
    }
    case MirrorKind::entropy_simplex: {
        // normalized exponential is invariant under a constant shift
        Vector u = xi.cwiseQuotient(weights_);
        const double shift = u.maxCoeff();
        Vector e = (u.array() - shift).exp().matrix();
        return e / weights_.dot(e);
    }
    case MirrorKind::product: {
        Vector x(n);
        for (std::size_t c = 0; c < components_.size(); ++c) {
            const auto off = static_cast<Eigen::Index>(offsets_[c]);
            const auto len = static_cast<Eigen::Index>(components_[c].dim());
            x.segment(off, len) = components_[c].solve_unchecked(xi.segment(off, len));
        }
        return x;
    }
    }
    throw std::logic_error("unreachable");
}

double MirrorMap::evaluate(const Vector& x) const {
    check_length(x, "evaluate");
    const auto n = static_cast<Eigen::Index>(dim_);
    switch (kind_) {
    case MirrorKind::quadratic: {
        double s = 0.0;
        for (Eigen::Index j = 0; j < n; ++j)
            s += weight(weights_, j) * x[j] * x[j];
        return 0.5 * s;
    }
    case MirrorKind::nonneg_quadratic: {
        double s = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (x[j] < 0.0)
                return kInf;
            s += weight(weights_, j) * x[j] * x[j];
        }
        return 0.5 * s;
    }
    case MirrorKind::elastic_net: {
        double s = 0.0;
        for (Eigen::Index j = 0; j < n; ++j)
            s += weight(weights_, j) * (beta_ * std::abs(x[j]) + 0.5 * x[j] * x[j]);
        return s;
    }
    case MirrorKind::entropy_simplex: {
        double mass = 0.0, s = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (x[j] < 0.0)
                return kInf;
            mass += weights_[j] * x[j];
            s += weights_[j] * xlogx(x[j]);
        }
        if (std::abs(mass - 1.0) > simplex_tolerance)
            return kInf;
        return s;
    }
    case MirrorKind::product: {
        double s = 0.0;
        for (std::size_t c = 0; c < components_.size(); ++c) {
            const double v = components_[c].evaluate(
                x.segment(static_cast<Eigen::Index>(offsets_[c]), static_cast<Eigen::Index>(components_[c].dim())));
            if (v == kInf)
                return kInf;
            s += v;
        }
        return s;
    }
    }
    throw std::logic_error("unreachable");
}

// Coordinate-wise sum of r(x_ref_j) - r(x_j) - xi_j (x_ref_j - x_j); every
// term is nonnegative for separable maps, which keeps cancellation local.
double MirrorMap::bregman_terms(const Vector& xi, const Vector& x, const Vector& x_ref) const {
    const auto n = static_cast<Eigen::Index>(dim_);
    double s = 0.0;
    switch (kind_) {
    case MirrorKind::quadratic:
    case MirrorKind::nonneg_quadratic:
        for (Eigen::Index j = 0; j < n; ++j) {
            const double w = weight(weights_, j);
            s += 0.5 * w * (x_ref[j] * x_ref[j] - x[j] * x[j]) - xi[j] * (x_ref[j] - x[j]);
        }
        return s;
    case MirrorKind::elastic_net:
        for (Eigen::Index j = 0; j < n; ++j) {
            const double w = weight(weights_, j);
            const double r_ref = beta_ * std::abs(x_ref[j]) + 0.5 * x_ref[j] * x_ref[j];
            const double r_x = beta_ * std::abs(x[j]) + 0.5 * x[j] * x[j];
            s += w * (r_ref - r_x) - xi[j] * (x_ref[j] - x[j]);
        }
        return s;
    case MirrorKind::entropy_simplex:
        for (Eigen::Index j = 0; j < n; ++j)
            s += weights_[j] * (xlogx(x_ref[j]) - xlogx(x[j])) - xi[j] * (x_ref[j] - x[j]);
        return s;
    case MirrorKind::product:
        for (std::size_t c = 0; c < components_.size(); ++c) {
            const auto off = static_cast<Eigen::Index>(offsets_[c]);
            const auto len = static_cast<Eigen::Index>(components_[c].dim());
            s += components_[c].bregman_terms(xi.segment(off, len), x.segment(off, len), x_ref.segment(off, len));
        }
        return s;
    }
    throw std::logic_error("unreachable");
}

double MirrorMap::bregman(const Vector& xi, const Vector& x, const Vector& x_ref) const {
    check_length(xi, "bregman");
    check_length(x, "bregman");
    check_length(x_ref, "bregman");
    if (evaluate(x_ref) == kInf)
        return kInf;
    if (evaluate(x) == kInf)
        throw std::invalid_argument("bregman: base point lies outside the domain of R");
    double d = bregman_terms(xi, x, x_ref);
    if (d < 0.0 && d > -1e-12)
        d = 0.0;
    return d;
}

double MirrorMap::conjugate_value(const Vector& xi) const {
    const Vector x = solve(xi);
    return xi.dot(x) - evaluate(x);
}

double MirrorMap::primal_norm(const Vector& x) const {
    check_length(x, "primal_norm");
    switch (kind_) {
    case MirrorKind::entropy_simplex: return weights_.dot(x.cwiseAbs());
    case MirrorKind::product: {
        double s = 0.0;
        for (std::size_t c = 0; c < components_.size(); ++c) {
            const double v = components_[c].primal_norm(
                x.segment(static_cast<Eigen::Index>(offsets_[c]), static_cast<Eigen::Index>(components_[c].dim())));
            s += v * v;
        }
        return std::sqrt(s);
    }
    default:
        if (weights_.size() == 0)
            return x.norm();
        return std::sqrt(weights_.dot(x.cwiseAbs2()));
    }
}

double MirrorMap::dual_norm(const Vector& xi) const {
    check_length(xi, "dual_norm");
    switch (kind_) {
    case MirrorKind::entropy_simplex: return xi.cwiseAbs().cwiseQuotient(weights_).maxCoeff();
    case MirrorKind::product: {
        double s = 0.0;
        for (std::size_t c = 0; c < components_.size(); ++c) {
            const double v = components_[c].dual_norm(
                xi.segment(static_cast<Eigen::Index>(offsets_[c]), static_cast<Eigen::Index>(components_[c].dim())));
            s += v * v;
        }
        return std::sqrt(s);
    }
    default:
        if (weights_.size() == 0)
            return xi.norm();
        return std::sqrt(xi.cwiseAbs2().cwiseQuotient(weights_).sum());
    }
}

}  // namespace smd
