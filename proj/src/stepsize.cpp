#include "smd/stepsize.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace smd {

std::string to_string(StepKind kind) {
    switch (kind) {
    case StepKind::s1: return "s1";
    case StepKind::s2: return "s2";
    case StepKind::s3: return "s3";
    }
    return "unknown";
}

StepRule StepRule::constant_step(double t) {
    StepRule r;
    r.kind = StepKind::s1;
    r.constant = t;
    return r;
}

StepRule StepRule::per_block(std::vector<double> t) {
    StepRule r;
    r.kind = StepKind::s1;
    r.table = std::move(t);
    return r;
}

StepRule StepRule::adaptive(double mu0, double mu1) {
    StepRule r;
    r.kind = StepKind::s2;
    r.mu0 = mu0;
    r.mu1 = mu1;
    return r;
}

StepRule StepRule::discrepancy(double mu0, double tau, double mu1) {
    StepRule r;
    r.kind = StepKind::s3;
    r.mu0 = mu0;
    r.mu1 = mu1;
    r.tau = tau;
    return r;
}

double StepRule::table_step(const BatchIndexSet& I) const {
    if (table.empty())
        return constant;
    if (I.size() != 1)
        throw std::invalid_argument("per-block step table requires batch size 1");
    return table.at(I[0]);
}

double compute_step(const StepRule& rule, double residual_norm, double adjoint_dual_norm, const BatchIndexSet& I,
                    double batch_noise) {
    if (rule.kind == StepKind::s1)
        return rule.table_step(I);
    if (!(rule.mu1 > 0.0))
        throw std::invalid_argument("compute_step: mu1 unset; resolve the rule first");
    if (residual_norm == 0.0)
        return 0.0;
    if (rule.kind == StepKind::s3 && !(residual_norm > rule.tau * batch_noise))
        return 0.0;
    if (adjoint_dual_norm == 0.0)
        return rule.mu1;
    const double ratio = rule.mu0 * residual_norm * residual_norm / (adjoint_dual_norm * adjoint_dual_norm);
    return std::min(ratio, rule.mu1);
}

double compute_step(const StepRule& rule, const Vector& residual, const Vector& adjoint_residual,
                    const BatchIndexSet& I, double batch_noise) {
    return compute_step(rule, residual.norm(), adjoint_residual.norm(), I, batch_noise);
}

double batch_noise_level(const Vector& block_noise, const BatchIndexSet& I) {
    if (block_noise.size() == 0)
        return 0.0;   // noiseless
    double s = 0.0;
    for (auto i : I) {
        if (i >= static_cast<std::size_t>(block_noise.size()))
            throw std::invalid_argument("batch_noise_level: index out of range");
        s += block_noise[static_cast<Eigen::Index>(i)] * block_noise[static_cast<Eigen::Index>(i)];
    }
    return std::sqrt(s);
}

double induced_norm(const BlockOperator& op, const BatchIndexSet& I, const MirrorMap& map) {
    if (op.input_dim() != map.dim())
        throw std::invalid_argument("induced_norm: operator and map dimensions differ");
    if (op.batch_dim(I) == 1) {
        // a functional's norm is the dual norm of its representer
        Vector one = Vector::Ones(1);
        return map.dual_norm(op.adjoint(I, one));
    }
    switch (map.geometry()) {
    case Geometry::weighted_l2:
        return op.estimate_norm(I, 1e-6, 5000, map.unit_weighted() ? Vector() : map.l2_weights()).value;
    case Geometry::weighted_l1: {
        // ||A e_j|| / w_j maximized over the vertices of the weighted l1 ball
        Vector c = op.column_norms(I);
        return c.cwiseQuotient(map.weights()).maxCoeff();
    }
    case Geometry::mixed: break;
    }
    throw std::invalid_argument("induced_norm: unsupported geometry for multi-row blocks");
}

double default_step_cap(const BlockOperator& op, const MirrorMap& map) {
    double smallest = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < op.num_blocks(); ++i) {
        const double n = induced_norm(op, BatchIndexSet::single(i), map);
        if (n > 0.0)
            smallest = std::min(smallest, n);
    }
    if (!std::isfinite(smallest))
        throw std::invalid_argument("default_step_cap: operator is zero");
    return 1e6 / (smallest * smallest);
}

namespace {

// safe upper bound on max_{|I| = b} ||A_I||^2
double batch_norm_sq_bound(const BlockOperator& op, const MirrorMap& map, std::size_t b) {
    const std::size_t p = op.num_blocks();
    std::vector<double> sq(p);
    for (std::size_t i = 0; i < p; ++i) {
        const double n = induced_norm(op, BatchIndexSet::single(i), map);
        sq[i] = n * n;
    }
    if (b == 1)
        return *std::max_element(sq.begin(), sq.end());
    std::sort(sq.begin(), sq.end(), std::greater<>());
    double top = 0.0;
    for (std::size_t k = 0; k < b; ++k)
        top += sq[k];
    // ||A_I|| <= ||A|| as well
    const double full = induced_norm(op, BatchIndexSet::all(p), map);
    return std::min(top, full * full);
}

}  // namespace

StepCheck check_step_rule(const StepRule& rule, const BlockOperator& op, const MirrorMap& map, std::size_t b) {
    const double four_sigma = 4.0 * map.sigma();
    std::ostringstream msg;
    if (b == 0 || b > op.num_blocks())
        throw std::invalid_argument("check_step_rule: batch size out of range");

    if (rule.kind == StepKind::s1) {
        if (!rule.table.empty()) {
            if (b != 1)
                throw std::invalid_argument("s1: a per-block step table needs batch size 1; use a constant step");
            if (rule.table.size() != op.num_blocks())
                throw std::invalid_argument("s1: step table length does not match the block count");
            for (std::size_t i = 0; i < rule.table.size(); ++i) {
                const double t = rule.table[i];
                if (!(t > 0.0))
                    throw std::invalid_argument("s1: step sizes must be positive");
                const double n = induced_norm(op, BatchIndexSet::single(i), map);
                if (!(t * n * n < four_sigma)) {
                    msg << "s1: t_" << i << " = " << t << " violates t < 4 sigma/||A_i||^2 = " << four_sigma / (n * n);
                    return {false, msg.str()};
                }
            }
            return {};
        }
        if (!(rule.constant > 0.0))
            throw std::invalid_argument("s1: step size must be positive");
        const double bound = batch_norm_sq_bound(op, map, b);
        if (!(rule.constant * bound < four_sigma)) {
            msg << "s1: t = " << rule.constant << " violates t < 4 sigma/||A_I||^2 (bound " << four_sigma / bound << ")";
            return {false, msg.str()};
        }
        return {};
    }

    if (!(rule.mu0 > 0.0))
        throw std::invalid_argument(to_string(rule.kind) + ": mu0 must be positive");
    if (rule.mu1 < 0.0)
        throw std::invalid_argument(to_string(rule.kind) + ": mu1 must be positive (or 0 for the default)");
    if (rule.kind == StepKind::s3 && !(rule.tau >= 1.0))
        throw std::invalid_argument("s3: tau must be >= 1");
    if (!(rule.mu0 < four_sigma)) {
        msg << to_string(rule.kind) << ": mu0 = " << rule.mu0 << " violates mu0 < 4 sigma = " << four_sigma;
        return {false, msg.str()};
    }
    return {};
}

StepRule resolve_step_rule(StepRule rule, const BlockOperator& op, const MirrorMap& map) {
    if (rule.kind != StepKind::s1 && !(rule.mu1 > 0.0))
        rule.mu1 = default_step_cap(op, map);
    return rule;
}

}  // namespace smd
