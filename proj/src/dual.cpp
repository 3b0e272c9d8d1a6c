#include "smd/dual.hpp"

#include <cmath>
#include <stdexcept>

namespace smd {

DualBlockGradient::DualBlockGradient(std::shared_ptr<const BlockOperator> op, MirrorMap map, StepRule rule,
                                     Sampler sampler, Vector y, bool enforce_step_hypotheses)
    : op_(std::move(op)), map_(std::move(map)), rule_(std::move(rule)), sampler_(std::move(sampler)),
      y_(std::move(y)) {
    if (!op_)
        throw std::invalid_argument("dual: null operator");
    if (op_->input_dim() != map_.dim())
        throw std::invalid_argument("dual: operator input dimension differs from the mirror map dimension");
    if (static_cast<std::size_t>(y_.size()) != op_->output_dim())
        throw std::invalid_argument("dual: data length differs from the operator output dimension");
    if (rule_.kind != StepKind::s1)
        throw std::invalid_argument("dual: only s1 step rules are supported");
    const std::size_t b = sampler_.batch_size();
    if (b > 1 && !rule_.table.empty())
        throw std::invalid_argument("dual: batch size > 1 requires one constant step");
    const StepCheck check = check_step_rule(rule_, *op_, map_, b);
    if (!check.ok && enforce_step_hypotheses)
        throw std::invalid_argument(check.message);

    lambda_ = Vector::Zero(static_cast<Eigen::Index>(op_->output_dim()));
    x_ = map_.solve(Vector::Zero(static_cast<Eigen::Index>(map_.dim())));
}

StepInfo DualBlockGradient::step() {
    StepInfo info;
    info.batch = sampler_.next(n_);
    const Vector ax = op_->apply(info.batch, x_);
    info.step = rule_.table_step(info.batch);
    double res2 = 0.0;
    Eigen::Index k = 0;
    for (auto i : info.batch) {
        const auto off = static_cast<Eigen::Index>(op_->block_offset(i));
        const auto d = static_cast<Eigen::Index>(op_->block_dim(i));
        const Vector r = ax.segment(k, d) - y_.segment(off, d);
        res2 += r.squaredNorm();
        lambda_.segment(off, d) -= info.step * r;
        k += d;
    }
    info.batch_res = std::sqrt(res2);
    x_ = map_.solve(op_->adjoint_all(lambda_));
    ++n_;
    return info;
}

double DualBlockGradient::objective() const {
    return dual_objective(map_, *op_, lambda_, y_);
}

double dual_objective(const MirrorMap& map, const BlockOperator& op, const Vector& lambda, const Vector& y) {
    if (lambda.size() != y.size())
        throw std::invalid_argument("dual_objective: lambda and y lengths differ");
    return map.conjugate_value(op.adjoint_all(lambda)) - lambda.dot(y);
}

EquivalenceReport check_equivalence(std::shared_ptr<const BlockOperator> op, const MirrorMap& map,
                                    const StepRule& rule, const std::vector<BatchIndexSet>& path, const Vector& y,
                                    std::size_t n_iters, const StepRule* dual_rule) {
    if (path.size() < n_iters)
        throw std::invalid_argument("check_equivalence: path shorter than the iteration count");
    Observations data{y, {}};
    MirrorDescent primal(op, map, rule, Sampler::replay(path), data);
    DualBlockGradient dual(op, map, dual_rule ? *dual_rule : rule, Sampler::replay(path), y);

    EquivalenceReport rep;
    for (std::size_t n = 0; n < n_iters; ++n) {
        primal.step();
        dual.step();
        const Vector diff = primal.xi() - dual.adjoint_lambda();
        rep.max_deviation = std::max(rep.max_deviation, diff.lpNorm<Eigen::Infinity>());
        rep.max_xi = std::max(rep.max_xi, primal.xi().lpNorm<Eigen::Infinity>());
        ++rep.iterations;
    }
    return rep;
}

}  // namespace smd
