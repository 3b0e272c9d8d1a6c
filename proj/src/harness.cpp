#include "smd/harness.hpp"

#include "smd/io.hpp"
#include "smd/problems.hpp"
#include "smd/tomography.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace smd {

namespace {

// Runs body(k) for k in [0, count) on up to `threads` workers; the first
// exception (lowest k) is rethrown after all workers finish.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& body) {
    threads = std::max<std::size_t>(1, std::min(threads, count));
    if (threads == 1) {
        for (std::size_t k = 0; k < count; ++k)
            body(k);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::size_t err_index = count;
    std::exception_ptr err;
    auto worker = [&] {
        for (std::size_t k = next++; k < count; k = next++) {
            try {
                body(k);
            } catch (...) {
                std::lock_guard lock(err_mutex);
                if (k < err_index) {
                    err_index = k;
                    err = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w)
        pool.emplace_back(worker);
    for (auto& t : pool)
        t.join();
    if (err)
        std::rethrow_exception(err);
}

MirrorMap make_map(const MirrorSpec& spec, const Vector& quad_weights) {
    const auto m = static_cast<std::size_t>(quad_weights.size());
    const bool quad = spec.weights == "quadrature";
    Vector w = quad ? quad_weights : Vector();
    if (spec.kind == "quadratic") return MirrorMap::quadratic(m, w);
    if (spec.kind == "nonneg_quadratic") return MirrorMap::nonneg_quadratic(m, w);
    if (spec.kind == "elastic_net") return MirrorMap::elastic_net(m, spec.beta, w);
    if (spec.kind == "entropy_simplex")
        return MirrorMap::entropy_simplex(quad ? quad_weights : Vector::Ones(quad_weights.size()));
    throw std::invalid_argument("mirror kind '" + spec.kind + "' is not available for this problem");
}

}  // namespace

Observations ProblemInstance::observe(const NoisyData& noisy) const {
    return Observations{lift ? lift(noisy.y) : noisy.y, noisy.block_noise};
}

ProblemInstance build_problem(const ExperimentConfig& cfg) {
    const ProblemSpec& ps = cfg.problem;
    ProblemInstance inst;
    inst.id = ps.id;

    if (ps.id == "ct") {
        TomographyProblem tp = build_tomography(ps.n, ps.angles, ps.rays);
        inst.op = tp.op;
        Vector ones = Vector::Ones(static_cast<Eigen::Index>(tp.n * tp.n));
        MirrorSpec ms = cfg.mirror;
        ms.weights = "unit";
        inst.map = make_map(ms, ones);
        inst.truth.x = tp.phantom;
        inst.base_y = tp.y;
        return inst;
    }

    KernelKind kernel = parse_kernel(ps.kernel);
    TruthKind truth = parse_truth(ps.truth);
    IntegralProblem ip = build_integral(kernel, ps.p, truth);

    if (ps.id == "tv") {
        if (cfg.mirror.kind != "product")
            throw std::invalid_argument("problem 'tv' needs mirror kind 'product'");
        TVProblem tv = build_tv(ip, cfg.mirror.beta);
        auto op = tv.op;
        inst.op = op;
        inst.map = tv.map;
        inst.truth.x = tv.x_true;
        inst.truth.prefix = ip.p;
        inst.truth.weights = ip.weights;
        inst.base_y = ip.y;
        inst.lift = [op](const Vector& y) { return tv_stack_data(*op, y); };
        return inst;
    }

    if (ps.id != "sgd_conv" && ps.id != "entropy" && ps.id != "sparse")
        throw std::invalid_argument("unknown problem id '" + ps.id + "'");
    inst.op = ip.op;
    inst.map = make_map(cfg.mirror, ip.weights);
    inst.truth.x = ip.x_true;
    inst.truth.weights = ip.weights;
    inst.base_y = ip.y;
    if (ps.id == "entropy")
        inst.primary_metric = "l1_sq";
    return inst;
}

StepRule make_step_rule(const StepSpec& spec, const BlockOperator& op, const MirrorMap& map, std::size_t b) {
    if (spec.kind == "s1") {
        if (spec.t > 0.0)
            return StepRule::constant_step(spec.t);
        if (b != 1)
            throw std::invalid_argument("step: s1 with batch size > 1 needs an explicit constant t");
        std::vector<double> table(op.num_blocks());
        for (std::size_t i = 0; i < table.size(); ++i) {
            const double n = induced_norm(op, BatchIndexSet::single(i), map);
            if (!(n > 0.0))
                throw std::invalid_argument("step: zero block " + std::to_string(i) + " has no normalized step");
            table[i] = spec.mu0 / (n * n);
        }
        return StepRule::per_block(std::move(table));
    }
    if (spec.kind == "s2")
        return StepRule::adaptive(spec.mu0, spec.mu1);
    if (spec.kind == "s3")
        return StepRule::discrepancy(spec.mu0, spec.tau, spec.mu1);
    throw std::invalid_argument("unknown step kind '" + spec.kind + "'");
}

Sampler make_sampler(const SamplerSpec& spec, std::size_t p, std::uint64_t seed) {
    if (spec.kind == "uniform")
        return Sampler::uniform(p, spec.b, seed);
    if (spec.kind == "cyclic") {
        if (spec.b != 1)
            throw std::invalid_argument("sampler: cyclic needs batch size 1");
        return Sampler::cyclic(p);
    }
    throw std::invalid_argument("unknown sampler kind '" + spec.kind + "'");
}

SemiconvergenceReport semiconvergence_report(const std::vector<std::size_t>& n, const std::vector<double>& values) {
    if (n.size() != values.size())
        throw std::invalid_argument("semiconvergence_report: length mismatch");
    std::size_t best = values.size();
    for (std::size_t k = 0; k < values.size(); ++k)
        if (!std::isnan(values[k]) && (best == values.size() || values[k] < values[best]))
            best = k;
    std::size_t valid = 0;
    for (double v : values)
        valid += std::isnan(v) ? 0 : 1;
    if (valid < 2)
        throw std::invalid_argument("semiconvergence_report: need at least 2 recorded values");

    SemiconvergenceReport rep;
    rep.argmin = n[best];
    rep.min = values[best];
    double after = rep.min;
    double last = rep.min;
    for (std::size_t k = best + 1; k < values.size(); ++k) {
        if (std::isnan(values[k]))
            continue;
        after = std::max(after, values[k]);
        last = values[k];
    }
    auto ratio = [&](double v) {
        if (rep.min > 0.0)
            return v / rep.min;
        return v > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
    };
    rep.ratio = ratio(after);
    rep.final_over_min = ratio(last);
    return rep;
}

double metric_value(const RunRecord& rec, const std::string& metric) {
    if (metric == "rel_l2") return rec.rel_err;
    if (metric == "l1_sq") return rec.l1_sq;
    if (metric == "bregman") return rec.bregman;
    if (metric == "residual") return rec.full_res;
    throw std::invalid_argument("unknown metric '" + metric + "'");
}

EnsembleResult aggregate(std::vector<RunTrace> traces, const std::vector<std::string>& metrics, bool keep_traces) {
    if (traces.empty())
        throw std::invalid_argument("aggregate: no runs");
    EnsembleResult res;
    for (const auto& tr : traces)
        for (const auto& r : tr.records)
            res.n.push_back(r.n);
    std::sort(res.n.begin(), res.n.end());
    res.n.erase(std::unique(res.n.begin(), res.n.end()), res.n.end());

    for (const auto& m : metrics)
        res.means[m].assign(res.n.size(), 0.0);
    const double K = static_cast<double>(traces.size());
    for (const auto& tr : traces) {
        std::size_t pos = 0;
        for (std::size_t k = 0; k < res.n.size(); ++k) {
            while (pos + 1 < tr.records.size() && tr.records[pos + 1].n <= res.n[k])
                ++pos;
            for (const auto& m : metrics)
                res.means[m][k] += metric_value(tr.records[pos], m);
        }
    }
    for (auto& [name, v] : res.means)
        for (double& x : v)
            x /= K;
    if (keep_traces)
        res.traces = std::move(traces);
    return res;
}

EnsembleResult run_ensemble(const ExperimentConfig& cfg, const EnsembleOptions& options) {
    return run_ensemble(cfg, build_problem(cfg), options);
}

EnsembleResult run_ensemble(const ExperimentConfig& cfg, const ProblemInstance& problem,
                            const EnsembleOptions& options) {
    const std::size_t K = cfg.run.K;
    if (K == 0)
        throw std::invalid_argument("ensemble: K must be at least 1");
    const std::size_t p = problem.op->num_blocks();
    const StepRule rule = make_step_rule(cfg.step, *problem.op, problem.map, cfg.sampler.b);
    const StepCheck check = check_step_rule(rule, *problem.op, problem.map, cfg.sampler.b);
    if (!check.ok && cfg.step.strict)
        throw std::invalid_argument(check.message);

    EngineOptions eopt;
    eopt.enforce_step_hypotheses = cfg.step.strict;
    eopt.trace_every = cfg.output.trace_every;
    eopt.full_residual_every = cfg.output.full_residual_every;

    // resolve the default cap once instead of in each engine
    const StepRule resolved = resolve_step_rule(rule, *problem.op, problem.map);
    const NoisyData shared = corrupt(problem.base_y, cfg.noise.spec);

    std::vector<std::uint64_t> seeds(K);
    for (std::size_t k = 0; k < K; ++k)
        seeds[k] = cfg.run.same_seed ? cfg.run.master_seed : run_seed(cfg.run.master_seed, k);

    std::vector<RunTrace> traces(K);
    parallel_for(K, options.threads, [&](std::size_t k) {
        try {
            NoisyData noisy = shared;
            if (cfg.noise.fresh) {
                NoiseSpec ns = cfg.noise.spec;
                ns.seed = run_seed(ns.seed, k);
                noisy = corrupt(problem.base_y, ns);
            }
            MirrorDescent eng(problem.op, problem.map, resolved, make_sampler(cfg.sampler, p, seeds[k]),
                              problem.observe(noisy), eopt);
            traces[k] = eng.run(cfg.run.iters, cfg.run.stop, &problem.truth);
        } catch (const std::exception& e) {
            throw std::runtime_error("run " + std::to_string(k) + " (seed " + std::to_string(seeds[k]) +
                                     ") failed: " + e.what());
        }
    });

    std::vector<std::string> metrics = cfg.run.metrics;
    if (std::find(metrics.begin(), metrics.end(), problem.primary_metric) == metrics.end())
        metrics.push_back(problem.primary_metric);
    EnsembleResult res = aggregate(std::move(traces), metrics, options.keep_traces);
    res.seeds = std::move(seeds);
    res.primary_metric = problem.primary_metric;
    res.report = semiconvergence_report(res.n, res.means.at(res.primary_metric));
    if (!check.ok)
        res.step_warning = check.message;
    if (cfg.step.kind == "s3" && cfg.noise.spec.model == NoiseModel::gaussian && cfg.noise.spec.delta_rel > 0.0) {
        if (!res.step_warning.empty())
            res.step_warning += "; ";
        res.step_warning += "s3 with Gaussian noise: the levels delta_i do not bound the noise";
    }
    return res;
}

std::string ensemble_csv(const EnsembleResult& result) {
    std::ostringstream os;
    os << 'n';
    for (const auto& [name, v] : result.means)
        os << ",mean_" << name;
    os << '\n';
    for (std::size_t k = 0; k < result.n.size(); ++k) {
        os << result.n[k];
        for (const auto& [name, v] : result.means)
            os << ',' << format_double(v[k]);
        os << '\n';
    }
    return os.str();
}

std::size_t rate_iterations(double c, std::size_t p, std::size_t b, double delta) {
    if (!(delta > 0.0) || !(c > 0.0) || b == 0)
        throw std::invalid_argument("rate_iterations: need c > 0, b >= 1, delta > 0");
    return static_cast<std::size_t>(std::ceil(c * static_cast<double>(p) / (static_cast<double>(b) * delta)));
}

std::pair<double, double> loglog_fit(const std::vector<double>& delta, const std::vector<double>& err) {
    if (delta.size() != err.size() || delta.size() < 2)
        throw std::invalid_argument("loglog_fit: need at least two points");
    const double n = static_cast<double>(delta.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < delta.size(); ++k) {
        const double x = std::log(delta[k]), y = std::log(err[k]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return {slope, (sy - slope * sx) / n};
}

RateStudyResult rate_study(std::shared_ptr<const BlockOperator> op, const MirrorMap& map, const Vector& lambda_true,
                           const RateStudyOptions& options) {
    if (map.kind() != MirrorKind::quadratic)
        throw std::invalid_argument("rate_study: unsupported mirror map (no verified source condition)");
    if (options.K == 0 || options.deltas.size() < 2)
        throw std::invalid_argument("rate_study: need K >= 1 and at least two noise levels");
    const std::size_t p = op->num_blocks();
    const Vector x_true = map.solve(op->adjoint_all(lambda_true));
    const Vector y = op->apply_all(x_true);

    double t = options.t;
    if (!(t > 0.0)) {
        double mx = 0.0;
        for (std::size_t i = 0; i < p; ++i)
            mx = std::max(mx, induced_norm(*op, BatchIndexSet::single(i), map));
        t = 1.0 / (mx * mx);
    }
    const StepRule rule = StepRule::constant_step(t);
    Truth truth{x_true, {}, 0};

    auto run_once = [&](const Vector& data, std::size_t iters, std::uint64_t seed) {
        MirrorDescent eng(op, map, rule, Sampler::uniform(p, options.b, seed), Observations{data, {}});
        for (std::size_t n = 0; n < iters; ++n)
            eng.step();
        return (eng.x() - x_true).squaredNorm();
    };

    RateStudyResult res;
    std::vector<double> ds, es;
    for (std::size_t di = 0; di < options.deltas.size(); ++di) {
        const double delta = options.deltas[di];
        RateRow row;
        row.delta = delta;
        row.n_delta = rate_iterations(options.c, p, options.b, delta);
        const NoisyData shared = corrupt_absolute(y, op->block_dims(), delta, run_seed(options.master_seed, 1000 + di));
        std::vector<double> err(options.K);
        parallel_for(options.K, options.threads, [&](std::size_t k) {
            const std::uint64_t seed = run_seed(options.master_seed, (di + 1) * 100000 + k);
            const Vector data =
                options.fresh_noise ? corrupt_absolute(y, op->block_dims(), delta, seed ^ 0x9e3779b97f4a7c15ULL).y
                                    : shared.y;
            err[k] = run_once(data, row.n_delta, seed);
        });
        double mean = 0.0;
        for (double e : err)
            mean += e;
        row.mean_sq_error = mean / static_cast<double>(options.K);
        res.rows.push_back(row);
        ds.push_back(delta);
        es.push_back(row.mean_sq_error);
    }
    std::tie(res.slope, res.intercept) = loglog_fit(ds, es);
    return res;
}

RateInstance build_rate_instance(const RateSpec& spec) {
    RowMatrix A = random_ill_posed(spec.rows, spec.cols, spec.s_max, spec.s_min, spec.operator_seed);
    RateInstance inst;
    auto op = std::make_shared<DenseBlockOperator>(std::move(A));
    std::mt19937_64 rng(spec.operator_seed + 1);
    std::normal_distribution<double> normal;
    Vector lambda(static_cast<Eigen::Index>(spec.rows));
    for (Eigen::Index i = 0; i < lambda.size(); ++i)
        lambda[i] = normal(rng);
    const double scale = op->apply_all(op->adjoint_all(lambda)).norm();
    inst.lambda_true = lambda / scale;
    inst.map = MirrorMap::quadratic(spec.cols);
    inst.op = std::move(op);
    return inst;
}

}  // namespace smd
