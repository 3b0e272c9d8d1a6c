#pragma once

#include "smd/engine.hpp"

#include <memory>
#include <vector>

namespace smd {

/**
 * Mini-batch randomized dual block gradient method
 *
 *   x_n         = solve(A^T lambda_n)
 *   lambda_n+1,I = lambda_n,I - t_I (A_I x_n - y_I),    lambda_0 = 0
 *
 * Only s1 rules are accepted; with b > 1 the step must be one constant.
 */
class DualBlockGradient {
public:
    DualBlockGradient(std::shared_ptr<const BlockOperator> op, MirrorMap map, StepRule rule, Sampler sampler,
                      Vector y, bool enforce_step_hypotheses = true);

    const Vector& lambda() const noexcept { return lambda_; }
    const Vector& x() const noexcept { return x_; }
    std::size_t iteration() const noexcept { return n_; }

    // A^T lambda, the dual element the primal engine tracks as xi
    Vector adjoint_lambda() const { return op_->adjoint_all(lambda_); }

    StepInfo step();

    double objective() const;

private:
    std::shared_ptr<const BlockOperator> op_;
    MirrorMap map_;
    StepRule rule_;
    Sampler sampler_;
    Vector y_;
    Vector lambda_;
    Vector x_;
    std::size_t n_ = 0;
};

// d_y(lambda) = R*(A^T lambda) - <lambda, y>
double dual_objective(const MirrorMap& map, const BlockOperator& op, const Vector& lambda, const Vector& y);

struct EquivalenceReport {
    double max_deviation = 0.0;   // max_n ||xi_n - A^T lambda_n||_inf
    double max_xi = 0.0;          // max_n ||xi_n||_inf
    std::size_t iterations = 0;

    double relative() const { return max_xi > 0.0 ? max_deviation / max_xi : max_deviation; }
};

// Runs both methods for n_iters steps on `path`; `dual_rule` defaults to `rule`
// (a different one is a negative control).
EquivalenceReport check_equivalence(std::shared_ptr<const BlockOperator> op, const MirrorMap& map,
                                    const StepRule& rule, const std::vector<BatchIndexSet>& path, const Vector& y,
                                    std::size_t n_iters, const StepRule* dual_rule = nullptr);

}  // namespace smd
