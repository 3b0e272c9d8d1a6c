// Command-line front end: run, ensemble, equivalence-check, rate-study, problem-info.

#include "smd/config.hpp"
#include "smd/dual.hpp"
#include "smd/harness.hpp"
#include "smd/io.hpp"
#include "smd/trace.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit { ok = 0, criterion_failed = 1, config_error = 2, numerical_error = 3 };

struct Common {
    std::string config;
    std::vector<std::string> sets;
    std::string out;
    long long seed = -1;
    std::size_t threads = 1;
    bool gnuplot = false;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--config", c.config, "JSON experiment config");
    sub->add_option("--set", c.sets, "dotted-path override key=value (repeatable)");
    sub->add_option("--out", c.out, "output directory (overrides output.dir)");
    sub->add_option("--seed", c.seed, "master seed (overrides run.master_seed)");
    sub->add_option("--threads", c.threads, "worker threads for ensembles")->check(CLI::PositiveNumber);
    sub->add_flag("--gnuplot", c.gnuplot, "also write a whitespace-separated .dat file");
}

smd::ExperimentConfig load(const Common& c) {
    std::string text = "{}";
    if (!c.config.empty()) {
        try {
            text = smd::read_file(c.config);
        } catch (const std::exception&) {
            throw smd::ConfigError("cannot read config file '" + c.config + "'");
        }
    }
    std::vector<std::pair<std::string, std::string>> overrides;
    for (const auto& s : c.sets)
        overrides.push_back(smd::split_override(s));
    if (c.seed >= 0)
        overrides.emplace_back("run.master_seed", std::to_string(c.seed));
    smd::ExperimentConfig cfg = smd::parse_config(text, overrides);
    if (!c.out.empty())
        cfg.output.dir = c.out;
    return cfg;
}

json report_json(const smd::SemiconvergenceReport& r) {
    return {{"argmin", r.argmin}, {"min", r.min}, {"post_min_ratio", r.ratio}, {"final_over_min", r.final_over_min}};
}

const char* reason_name(smd::StopReason r) {
    switch (r) {
    case smd::StopReason::budget: return "budget";
    case smd::StopReason::fixed: return "fixed";
    case smd::StopReason::a_priori: return "a_priori";
    case smd::StopReason::discrepancy: return "discrepancy";
    }
    return "unknown";
}

int cmd_run(const Common& c, bool dump_noise) {
    smd::ExperimentConfig cfg;
    smd::ProblemInstance prob;
    std::unique_ptr<smd::MirrorDescent> eng;
    smd::NoisyData noisy;
    try {
        cfg = load(c);
        prob = smd::build_problem(cfg);
        const std::size_t p = prob.op->num_blocks();
        smd::StepRule rule = smd::make_step_rule(cfg.step, *prob.op, prob.map, cfg.sampler.b);
        noisy = smd::corrupt(prob.base_y, cfg.noise.spec);
        smd::EngineOptions eo;
        eo.enforce_step_hypotheses = cfg.step.strict;
        eo.trace_every = cfg.output.trace_every;
        eo.full_residual_every = cfg.output.full_residual_every;
        eng = std::make_unique<smd::MirrorDescent>(prob.op, prob.map, rule,
                                                   smd::make_sampler(cfg.sampler, p, cfg.run.master_seed),
                                                   prob.observe(noisy), eo);
    } catch (const smd::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_error;
    }
    try {
        smd::RunTrace trace = eng->run(cfg.run.iters, cfg.run.stop, &prob.truth);
        const fs::path dir = cfg.output.dir;
        smd::atomic_write(dir / "trace.csv", smd::trace_csv(trace));
        if (c.gnuplot)
            smd::atomic_write(dir / "trace.dat", smd::trace_gnuplot(trace));
        if (dump_noise) {
            std::ostringstream os;
            os << "block,y_delta,delta_i\n";
            for (Eigen::Index i = 0; i < noisy.y.size(); ++i)
                os << i << ',' << smd::format_double(noisy.y[i]) << ',' << smd::format_double(noisy.block_noise[i])
                   << '\n';
            smd::atomic_write(dir / "noise.csv", os.str());
        }
        json meta;
        meta["config"] = json::parse(smd::config_to_json(cfg));
        meta["seed"] = cfg.run.master_seed;
        meta["iterations"] = trace.iterations;
        meta["stop_reason"] = reason_name(trace.reason);
        meta["total_noise"] = noisy.total;
        meta["step_rule"] = {{"kind", smd::to_string(eng->rule().kind)}, {"mu1", eng->rule().mu1}};
        if (!eng->step_check().ok)
            meta["step_warning"] = eng->step_check().message;
        smd::atomic_write(dir / "meta.json", meta.dump(2) + "\n");
        const auto& last = trace.records.back();
        std::cout << "iterations " << trace.iterations << " (" << reason_name(trace.reason) << ")";
        if (!std::isnan(last.rel_err))
            std::cout << ", final rel_l2 " << smd::format_double(last.rel_err);
        std::cout << '\n';
    } catch (const std::exception& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return numerical_error;
    }
    return ok;
}

std::string ensemble_gnuplot(const smd::EnsembleResult& r) {
    std::ostringstream os;
    os << "# n";
    for (const auto& [name, v] : r.means)
        os << " mean_" << name;
    os << '\n';
    for (std::size_t k = 0; k < r.n.size(); ++k) {
        os << r.n[k];
        for (const auto& [name, v] : r.means)
            os << ' ' << (std::isnan(v[k]) ? std::string("NaN") : smd::format_double(v[k]));
        os << '\n';
    }
    return os.str();
}

int cmd_ensemble(const Common& c, bool keep_traces) {
    smd::ExperimentConfig cfg;
    smd::ProblemInstance prob;
    try {
        cfg = load(c);
        prob = smd::build_problem(cfg);
        smd::StepRule rule = smd::make_step_rule(cfg.step, *prob.op, prob.map, cfg.sampler.b);
        const smd::StepCheck chk = smd::check_step_rule(rule, *prob.op, prob.map, cfg.sampler.b);
        if (!chk.ok && cfg.step.strict)
            throw std::invalid_argument(chk.message);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_error;
    }
    try {
        smd::EnsembleResult res = smd::run_ensemble(cfg, prob, {c.threads, keep_traces});
        const fs::path dir = cfg.output.dir;
        smd::atomic_write(dir / "ensemble.csv", smd::ensemble_csv(res));
        if (c.gnuplot)
            smd::atomic_write(dir / "ensemble.dat", ensemble_gnuplot(res));
        for (std::size_t k = 0; k < res.traces.size(); ++k)
            smd::atomic_write(dir / ("trace_" + std::to_string(k) + ".csv"), smd::trace_csv(res.traces[k]));
        json side;
        side["config"] = json::parse(smd::config_to_json(cfg));
        side["seeds"] = res.seeds;
        side["primary_metric"] = res.primary_metric;
        side["semiconvergence"] = report_json(res.report);
        if (!res.step_warning.empty())
            side["warning"] = res.step_warning;
        smd::atomic_write(dir / "ensemble.json", side.dump(2) + "\n");
        std::cout << "K=" << cfg.run.K << " min mean " << res.primary_metric << ' ' << smd::format_double(res.report.min)
                  << " at n=" << res.report.argmin << ", post-min ratio " << smd::format_double(res.report.ratio)
                  << '\n';
    } catch (const std::exception& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return numerical_error;
    }
    return ok;
}

struct EquivOptions {
    std::size_t p = 20, m = 30, b = 3, iters = 200;
    std::uint64_t seed = 1;
    std::string map = "quadratic";
    double beta = 0.5;
    bool mismatch = false;
};

int cmd_equivalence(const EquivOptions& o) {
    std::shared_ptr<smd::DenseBlockOperator> op;
    smd::MirrorMap map = smd::MirrorMap::quadratic(1);
    smd::Vector y;
    std::vector<smd::BatchIndexSet> path;
    double t = 0.0;
    try {
        if (o.p == 0 || o.m == 0 || o.b == 0 || o.b > o.p || o.iters == 0)
            throw std::invalid_argument("need p, m, iters >= 1 and 1 <= b <= p");
        std::mt19937_64 rng(o.seed);
        std::normal_distribution<double> normal;
        smd::RowMatrix A(static_cast<Eigen::Index>(o.p), static_cast<Eigen::Index>(o.m));
        for (Eigen::Index i = 0; i < A.rows(); ++i)
            for (Eigen::Index j = 0; j < A.cols(); ++j)
                A(i, j) = normal(rng);
        smd::Vector xs(static_cast<Eigen::Index>(o.m));
        for (Eigen::Index j = 0; j < xs.size(); ++j)
            xs[j] = normal(rng);
        y = A * xs;
        const double max_row = A.rowwise().squaredNorm().maxCoeff();
        op = std::make_shared<smd::DenseBlockOperator>(std::move(A));
        if (o.map == "quadratic")
            map = smd::MirrorMap::quadratic(o.m);
        else if (o.map == "elastic_net")
            map = smd::MirrorMap::elastic_net(o.m, o.beta);
        else
            throw std::invalid_argument("map must be quadratic or elastic_net");
        // ||A_I||^2 <= b max_i ||A_i||^2, so t ||A_I||^2 <= 1 < 4 sigma
        t = 1.0 / (static_cast<double>(o.b) * max_row);
        smd::Sampler s = smd::Sampler::uniform(o.p, o.b, o.seed);
        for (std::size_t n = 0; n < o.iters; ++n)
            path.push_back(s.next(n));
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_error;
    }
    try {
        const smd::StepRule rule = smd::StepRule::constant_step(t);
        const smd::StepRule other = smd::StepRule::constant_step(t * 0.5);
        const auto rep = smd::check_equivalence(op, map, rule, path, y, o.iters, o.mismatch ? &other : nullptr);
        const bool pass = rep.relative() <= 1e-10;
        std::cout << "max_deviation " << smd::format_double(rep.max_deviation) << " relative "
                  << smd::format_double(rep.relative()) << " iterations " << rep.iterations << " seed " << o.seed
                  << ' ' << (pass ? "PASS" : "FAIL") << '\n';
        return pass ? ok : criterion_failed;
    } catch (const std::exception& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return numerical_error;
    }
}

int cmd_rate_study(const Common& c) {
    smd::ExperimentConfig cfg;
    smd::RateInstance inst;
    try {
        cfg = load(c);
        inst = smd::build_rate_instance(cfg.rate);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_error;
    }
    try {
        smd::RateStudyOptions ro;
        ro.b = cfg.rate.b;
        ro.t = cfg.rate.t;
        ro.deltas = cfg.rate.deltas;
        ro.c = cfg.rate.c;
        ro.K = cfg.rate.K;
        ro.master_seed = cfg.run.master_seed;
        ro.fresh_noise = cfg.rate.fresh_noise;
        ro.threads = c.threads;
        const smd::RateStudyResult res = smd::rate_study(inst.op, inst.map, inst.lambda_true, ro);
        const bool pass = res.slope >= cfg.rate.band_lo && res.slope <= cfg.rate.band_hi;

        std::ostringstream csv;
        csv << "delta,n_delta,mean_sq_error\n";
        std::cout << "delta            n_delta   mean_sq_error\n";
        for (const auto& r : res.rows) {
            csv << smd::format_double(r.delta) << ',' << r.n_delta << ',' << smd::format_double(r.mean_sq_error) << '\n';
            char line[128];
            std::snprintf(line, sizeof line, "%-16.6g %-9zu %.6g\n", r.delta, r.n_delta, r.mean_sq_error);
            std::cout << line;
        }
        std::cout << "slope " << smd::format_double(res.slope) << " band [" << cfg.rate.band_lo << ", "
                  << cfg.rate.band_hi << "] " << (pass ? "PASS" : "FAIL") << '\n';
        const fs::path dir = cfg.output.dir;
        smd::atomic_write(dir / "rate.csv", csv.str());
        json side;
        side["config"] = json::parse(smd::config_to_json(cfg));
        side["slope"] = res.slope;
        side["intercept"] = res.intercept;
        side["pass"] = pass;
        smd::atomic_write(dir / "rate.json", side.dump(2) + "\n");
        return pass ? ok : criterion_failed;
    } catch (const std::exception& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return numerical_error;
    }
}

int cmd_problem_info(const Common& c) {
    try {
        const smd::ExperimentConfig cfg = load(c);
        const smd::ProblemInstance prob = smd::build_problem(cfg);
        const auto& op = *prob.op;
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (std::size_t i = 0; i < op.num_blocks(); ++i) {
            const double n = smd::induced_norm(op, smd::BatchIndexSet::single(i), prob.map);
            lo = std::min(lo, n);
            hi = std::max(hi, n);
        }
        const char* storage = op.storage() == smd::StorageKind::dense    ? "dense"
                              : op.storage() == smd::StorageKind::sparse ? "sparse"
                                                                         : "composite";
        std::cout << "problem      " << prob.id << '\n'
                  << "blocks       " << op.num_blocks() << '\n'
                  << "input dim    " << op.input_dim() << '\n'
                  << "output dim   " << op.output_dim() << '\n'
                  << "storage      " << storage << '\n'
                  << "mirror       " << smd::to_string(prob.map.kind()) << '\n'
                  << "block norms  [" << smd::format_double(lo) << ", " << smd::format_double(hi) << "]\n"
                  << "|y|          " << smd::format_double(prob.base_y.norm()) << '\n';
        if (auto* sp = dynamic_cast<const smd::SparseBlockOperator*>(&op))
            std::cout << "nonzeros     " << sp->matrix().nonZeros() << '\n';
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_error;
    }
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stochastic mirror descent for linear ill-posed systems"};
    app.require_subcommand(1);

    Common run_opts, ens_opts, rate_opts, info_opts;
    bool dump_noise = false, keep_traces = false;
    auto* run = app.add_subcommand("run", "single run; writes trace.csv and meta.json");
    add_common(run, run_opts);
    run->add_flag("--dump-noise", dump_noise, "write noise.csv with y^delta and delta_i");

    auto* ens = app.add_subcommand("ensemble", "K runs; writes ensemble.csv and ensemble.json");
    add_common(ens, ens_opts);
    ens->add_flag("--keep-traces", keep_traces, "also write every run's trace");

    EquivOptions eq;
    auto* equiv = app.add_subcommand("equivalence-check", "primal/dual iterate equivalence on a random system");
    equiv->add_option("--p", eq.p, "blocks");
    equiv->add_option("--m", eq.m, "unknowns");
    equiv->add_option("--b", eq.b, "batch size");
    equiv->add_option("--iters", eq.iters, "iterations");
    equiv->add_option("--seed", eq.seed, "seed");
    equiv->add_option("--map", eq.map, "quadratic | elastic_net");
    equiv->add_option("--beta", eq.beta, "elastic net threshold");
    equiv->add_flag("--mismatch", eq.mismatch, "give the dual method a different step (negative control)");

    auto* rate = app.add_subcommand("rate-study", "convergence rate against the noise level");
    add_common(rate, rate_opts);

    auto* info = app.add_subcommand("problem-info", "print operator dimensions and norms");
    add_common(info, info_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : config_error;
    }

    if (run->parsed()) return cmd_run(run_opts, dump_noise);
    if (ens->parsed()) return cmd_ensemble(ens_opts, keep_traces);
    if (equiv->parsed()) return cmd_equivalence(eq);
    if (rate->parsed()) return cmd_rate_study(rate_opts);
    if (info->parsed()) return cmd_problem_info(info_opts);
    return config_error;
}
