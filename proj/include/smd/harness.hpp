#pragma once

#include "smd/config.hpp"
#include "smd/engine.hpp"
#include "smd/noise.hpp"

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace smd {

// Everything a run needs, built from a ProblemSpec and MirrorSpec.
struct ProblemInstance {
    std::string id;
    std::shared_ptr<const BlockOperator> op;
    MirrorMap map = MirrorMap::quadratic(1);
    Truth truth;
    Vector base_y;                                     // exact data the noise acts on (one entry per block)
    std::function<Vector(const Vector&)> lift;         // base data -> stacked operator data; empty = identity
    std::string primary_metric = "rel_l2";

    Observations observe(const NoisyData& noisy) const;
};

ProblemInstance build_problem(const ExperimentConfig& cfg);

StepRule make_step_rule(const StepSpec& spec, const BlockOperator& op, const MirrorMap& map, std::size_t b);

Sampler make_sampler(const SamplerSpec& spec, std::size_t p, std::uint64_t seed);

// seed of run k
inline std::uint64_t run_seed(std::uint64_t master, std::size_t k) { return master ^ static_cast<std::uint64_t>(k); }

struct SemiconvergenceReport {
    std::size_t argmin = 0;   // iteration n* of the minimum
    double min = 0.0;
    double ratio = 1.0;       // max over n > n* divided by min
    double final_over_min = 1.0;
};

SemiconvergenceReport semiconvergence_report(const std::vector<std::size_t>& n, const std::vector<double>& values);

struct EnsembleResult {
    std::vector<std::size_t> n;
    std::map<std::string, std::vector<double>> means;   // metric -> mean over runs at each n
    std::vector<RunTrace> traces;                       // kept when requested
    std::vector<std::uint64_t> seeds;
    std::string primary_metric;
    SemiconvergenceReport report;                       // on the primary metric
    std::string step_warning;                           // hypothesis check message when not strict
};

struct EnsembleOptions {
    std::size_t threads = 1;
    bool keep_traces = false;
};

// Metric values of one record by name.
double metric_value(const RunRecord& rec, const std::string& metric);

EnsembleResult run_ensemble(const ExperimentConfig& cfg, const EnsembleOptions& options = {});
EnsembleResult run_ensemble(const ExperimentConfig& cfg, const ProblemInstance& problem,
                            const EnsembleOptions& options = {});

// Mean of per-run traces on the union of their recorded iterations; a run
// that stopped early contributes its final state afterwards.
EnsembleResult aggregate(std::vector<RunTrace> traces, const std::vector<std::string>& metrics, bool keep_traces);

std::string ensemble_csv(const EnsembleResult& result);

struct RateRow {
    double delta = 0.0;
    std::size_t n_delta = 0;
    double mean_sq_error = 0.0;
};

struct RateStudyResult {
    std::vector<RateRow> rows;
    double slope = 0.0;
    double intercept = 0.0;
};

struct RateStudyOptions {
    std::size_t b = 1;
    double t = 0.0;               // 0 = 1 / max_i ||A_i||^2
    std::vector<double> deltas{1e-1, 1e-2, 1e-3, 1e-4};
    double c = 1.0;
    std::size_t K = 20;
    std::uint64_t master_seed = 1;
    bool fresh_noise = true;
    std::size_t threads = 1;
};

// n_delta = ceil(c p / (b delta))
std::size_t rate_iterations(double c, std::size_t p, std::size_t b, double delta);

// Source-condition instance x* = solve(A^T lambda*) (quadratic maps only), data
// y = A x*; each delta corrupts y with Gaussian noise of exact norm delta.
RateStudyResult rate_study(std::shared_ptr<const BlockOperator> op, const MirrorMap& map, const Vector& lambda_true,
                           const RateStudyOptions& options);

// least-squares fit of log(err) against log(delta): (slope, intercept)
std::pair<double, double> loglog_fit(const std::vector<double>& delta, const std::vector<double>& err);

// Instance of the configured rate study: random ill-posed operator with
// lambda* scaled so ||A A^T lambda*|| = 1.
struct RateInstance {
    std::shared_ptr<const BlockOperator> op;
    MirrorMap map = MirrorMap::quadratic(1);
    Vector lambda_true;
};
RateInstance build_rate_instance(const RateSpec& spec);

}  // namespace smd
