#pragma once

#include "smd/mirror.hpp"
#include "smd/operators.hpp"

#include <string>
#include <vector>

namespace smd {

enum class StepKind {
    s1,  // depends only on the drawn batch (constant or per-block table)
    s2,  // min{ mu0 ||r||^2 / ||A_I^* r||_*^2, mu1 }
    s3,  // s2 gated by ||r|| > tau * delta_I
};

std::string to_string(StepKind kind);

struct StepRule {
    StepKind kind = StepKind::s2;

    // s1: `table` (indexed by block, batch size 1 only) wins over `constant`
    double constant = 0.0;
    std::vector<double> table;

    // s2 / s3; mu1 <= 0 means "use the default cap", see resolve_step_rule()
    double mu0 = 1.0;
    double mu1 = 0.0;
    double tau = 1.0;

    static StepRule constant_step(double t);
    static StepRule per_block(std::vector<double> t);
    static StepRule adaptive(double mu0, double mu1 = 0.0);
    static StepRule discrepancy(double mu0, double tau, double mu1 = 0.0);

    // t_I for s1 rules
    double table_step(const BatchIndexSet& I) const;
};

/**
 * Step size for one iteration.
 *
 * `residual_norm` is ||A_I x - y_I|| and `adjoint_dual_norm` is the dual norm
 * of A_I^*(A_I x - y_I). `batch_noise` is delta_I (s3 only).
 *
 * For s2/s3 a vanishing residual gives 0 and a nonzero residual with a
 * vanishing adjoint gives the cap mu1.
 */
double compute_step(const StepRule& rule, double residual_norm, double adjoint_dual_norm, const BatchIndexSet& I,
                    double batch_noise);

// Same, with Euclidean norms taken of the given vectors.
double compute_step(const StepRule& rule, const Vector& residual, const Vector& adjoint_residual,
                    const BatchIndexSet& I, double batch_noise);

// delta_I = sqrt(sum_{i in I} delta_i^2); 0 when `block_noise` is empty
double batch_noise_level(const Vector& block_noise, const BatchIndexSet& I);

// ||A_I|| as a map from (R^m, norm of `map`) into Euclidean R^{d_I}.
// Exact for single-row blocks, an upper power-iteration estimate otherwise.
double induced_norm(const BlockOperator& op, const BatchIndexSet& I, const MirrorMap& map);

// 1e6 / min_i ||A_i||^2
double default_step_cap(const BlockOperator& op, const MirrorMap& map);

struct StepCheck {
    bool ok = true;
    std::string message;
};

// Checks the hypotheses attached to each rule for batch size b:
//   s1: 0 < t_I < 4 sigma / ||A_I||^2 (using a safe upper bound on ||A_I|| when b > 1)
//   s2, s3: 0 < mu0 < 4 sigma, mu1 > 0, tau >= 1 (s3)
StepCheck check_step_rule(const StepRule& rule, const BlockOperator& op, const MirrorMap& map, std::size_t b);

// Copy of `rule` with the default cap filled in when mu1 is unset.
StepRule resolve_step_rule(StepRule rule, const BlockOperator& op, const MirrorMap& map);

}  // namespace smd
