#pragma once

#include "smd/mirror.hpp"
#include "smd/operators.hpp"
#include "smd/sampler.hpp"
#include "smd/stepsize.hpp"

#include <limits>
#include <memory>
#include <vector>

namespace smd {

inline constexpr double not_recorded = std::numeric_limits<double>::quiet_NaN();

// Noisy data stacked in block order plus the per-block noise levels delta_i.
struct Observations {
    Vector y;
    Vector block_noise;  // empty = noiseless

    double total_noise() const { return block_noise.size() ? block_noise.norm() : 0.0; }
};

// Known solution used for error metrics.
struct Truth {
    Vector x;                   // full primal truth (stacked for product maps)
    Vector weights;             // quadrature weights of the error norms; empty = ones
    std::size_t prefix = 0;     // error norms use the leading `prefix` coordinates; 0 = all
};

struct RunRecord {
    std::size_t n = 0;
    BatchIndexSet batch;        // empty on a terminal record (no step taken)
    double step = not_recorded;
    double batch_res = not_recorded;
    double full_res = not_recorded;
    double rel_err = not_recorded;   // ||x - x*||^2 / ||x*||^2
    double l1_sq = not_recorded;     // ||x - x*||_1^2
    double bregman = not_recorded;   // D^{xi_n}(x*, x_n)
};

enum class StopKind { fixed, a_priori, discrepancy_all };
enum class StopReason { budget, fixed, a_priori, discrepancy };

struct StopSpec {
    StopKind kind = StopKind::fixed;
    std::size_t n = 0;        // fixed: iteration count (0 = budget)
    double c = 1.0;           // a_priori: n = ceil(c * delta^-exponent)
    double exponent = 1.0;
    double tau = 1.0;         // discrepancy_all

    static StopSpec fixed(std::size_t n) { return {StopKind::fixed, n}; }
    static StopSpec a_priori(double c, double exponent = 1.0) {
        StopSpec s;
        s.kind = StopKind::a_priori;
        s.c = c;
        s.exponent = exponent;
        return s;
    }
    static StopSpec discrepancy_all(double tau) {
        StopSpec s;
        s.kind = StopKind::discrepancy_all;
        s.tau = tau;
        return s;
    }
};

struct RunTrace {
    std::vector<RunRecord> records;
    std::size_t iterations = 0;
    StopReason reason = StopReason::budget;
};

struct EngineOptions {
    // throw at construction when the step rule violates its hypotheses
    bool enforce_step_hypotheses = true;
    // full residual at iterations that are multiples of k; 0 = ceil(p/b)
    std::size_t full_residual_every = 0;
    std::size_t trace_every = 1;
};

struct StepInfo {
    BatchIndexSet batch;
    double step = 0.0;
    double batch_res = 0.0;
};

/**
 * Mini-batch stochastic mirror descent
 *
 *   x_n     = solve(xi_n)
 *   xi_n+1  = xi_n - t_n A_I^T (A_I x_n - y_I),    xi_0 = 0
 *
 * One instance is a sequential chain. Instances may share the operator.
 */
class MirrorDescent {
public:
    MirrorDescent(std::shared_ptr<const BlockOperator> op, MirrorMap map, StepRule rule, Sampler sampler,
                  Observations data, EngineOptions options = {});

    const Vector& xi() const noexcept { return xi_; }
    const Vector& x() const noexcept { return x_; }
    std::size_t iteration() const noexcept { return n_; }

    const BlockOperator& op() const noexcept { return *op_; }
    const MirrorMap& map() const noexcept { return map_; }
    const StepRule& rule() const noexcept { return rule_; }   // resolved (default mu1 filled in)
    const StepCheck& step_check() const noexcept { return check_; }
    const Observations& data() const noexcept { return data_; }

    StepInfo step();

    // budget >= 1; records iterations 0, trace_every, ... plus the final state
    RunTrace run(std::size_t budget, const StopSpec& stop = {}, const Truth* truth = nullptr);

    // metrics of the current iterate (no step fields)
    RunRecord observe(const Truth* truth, bool with_full_residual) const;

    double full_residual() const;
    bool discrepancy_met(double tau) const;

    // iteration count a stopping rule asks for, capped at the budget
    std::size_t stop_target(std::size_t budget, const StopSpec& stop) const;

private:
    Vector gather(const BatchIndexSet& I) const;

    std::shared_ptr<const BlockOperator> op_;
    MirrorMap map_;
    StepRule rule_;
    StepCheck check_;
    Sampler sampler_;
    Observations data_;
    EngineOptions options_;
    std::size_t sweep_ = 1;

    Vector xi_;
    Vector x_;
    std::size_t n_ = 0;
};

// Error metrics of x against a truth; shared with the harness and the dual engine.
void fill_error_metrics(const MirrorMap& map, const Vector& xi, const Vector& x, const Truth& truth, RunRecord& rec);

}  // namespace smd
