// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "smd/dual.hpp"
#include "smd/harness.hpp"
#include "smd/noise.hpp"
#include "smd/problems.hpp"
#include "smd/tomography.hpp"

#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <functional>
#include <random>
#include <string>
#include <vector>

using namespace smd;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail) {
    std::printf("%s [%d] %s: %s\n", pass ? "PASS" : "FAIL", id, name, detail.c_str());
    std::fflush(stdout);
    if (!pass)
        ++failures;
}

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

// --- 1 ---------------------------------------------------------------------

void criterion_equivalence() {
    const auto t0 = Clock::now();
    const std::size_t p = 20, m = 30, iters = 200;
    std::mt19937_64 rng(11);
    std::normal_distribution<double> normal;
    RowMatrix A(p, m);
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            A(i, j) = normal(rng);
    Vector xs(m);
    for (auto& v : xs)
        v = normal(rng);
    const Vector y = A * xs;
    const double max_row = A.rowwise().squaredNorm().maxCoeff();
    auto op = std::make_shared<DenseBlockOperator>(A);

    double worst = 0.0;
    bool all = true;
    for (std::size_t b : {1u, 3u}) {
        for (int which = 0; which < 2; ++which) {
            MirrorMap map = which == 0 ? MirrorMap::quadratic(m) : MirrorMap::elastic_net(m, 0.5);
            // t ||A_I||^2 <= t b max ||A_i||^2 = 1 < 4 sigma
            const StepRule rule = StepRule::constant_step(1.0 / (static_cast<double>(b) * max_row));
            Sampler s = Sampler::uniform(p, b, 100 + b);
            std::vector<BatchIndexSet> path;
            for (std::size_t n = 0; n < iters; ++n)
                path.push_back(s.next(n));
            const auto rep = check_equivalence(op, map, rule, path, y, iters);
            worst = std::max(worst, rep.relative());
            all = all && rep.max_deviation <= 1e-10 * rep.max_xi;
        }
    }
    const double secs = seconds_since(t0);
    report(1, "primal/dual equivalence", all && secs < 5.0,
           "max_n |xi_n - A^T lambda_n|_inf / max_n |xi_n|_inf = " + fmt("%.3g", worst) + " (limit 1e-10), " +
               fmt("%.2f", secs) + " s (limit 5 s)");
}

// --- 2, 3, 4 ---------------------------------------------------------------

struct Ex51 {
    IntegralProblem prob = build_integral(KernelKind::convolution_61, 200);
    MirrorMap map = MirrorMap::quadratic(200, prob.weights);
    Truth truth{prob.x_true, prob.weights, 0};
};

const Ex51& ex51() {
    static const Ex51 e;
    return e;
}

// max over iterations of (Delta_{n+1} - Delta_n - allowance_n)
double worst_excess(const RunTrace& tr, const std::function<double(const RunRecord&)>& allowance) {
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < tr.records.size(); ++k) {
        const double inc = tr.records[k + 1].bregman - tr.records[k].bregman;
        worst = std::max(worst, inc - allowance(tr.records[k]));
    }
    return worst;
}

void criterion_exact_descent() {
    const auto& e = ex51();
    const std::size_t p = 200;
    std::vector<double> table(p);
    for (std::size_t i = 0; i < p; ++i) {
        const double n = induced_norm(*e.prob.op, BatchIndexSet::single(i), e.map);
        table[i] = 1.0 / (n * n);
    }
    double worst = -std::numeric_limits<double>::infinity();
    for (int r = 0; r < 2; ++r) {
        const StepRule rule = r == 0 ? StepRule::per_block(table) : StepRule::adaptive(1.0);
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            MirrorDescent eng(e.prob.op, e.map, rule, Sampler::uniform(p, 1, seed), Observations{e.prob.y, {}});
            const RunTrace tr = eng.run(10000, {}, &e.truth);
            worst = std::max(worst, worst_excess(tr, [](const RunRecord&) { return 0.0; }));
        }
    }
    report(2, "exact-data per-path descent", worst <= 1e-12,
           "convolution p=200, s1 and s2, 10 seeds x 1e4 steps: max(Delta_{n+1} - Delta_n) = " + fmt("%.3g", worst) +
               " (limit 1e-12)");
}

void criterion_noisy_bound() {
    const auto& e = ex51();
    const std::size_t p = 200;
    const NoisyData noisy = corrupt(e.prob.y, NoiseSpec{NoiseModel::uniform, 0.1, 5});
    const double mu0 = 1.0;
    const StepRule rule = resolve_step_rule(StepRule::adaptive(mu0), *e.prob.op, e.map);
    const double c0 = 1.0 - mu0 / (4.0 * e.map.sigma());
    double worst = -std::numeric_limits<double>::infinity();
    double tightest = std::numeric_limits<double>::infinity();
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        MirrorDescent eng(e.prob.op, e.map, rule, Sampler::uniform(p, 1, seed), Observations{noisy.y, noisy.block_noise});
        const RunTrace tr = eng.run(10000, {}, &e.truth);
        auto allowance = [&](const RunRecord& r) {
            const double d = batch_noise_level(noisy.block_noise, r.batch);
            return rule.mu1 * d * d / (4.0 * c0) + 1e-9;
        };
        worst = std::max(worst, worst_excess(tr, allowance));
        // the per-step form of the same chain, t_n delta_I^2 / (4 c0), is sharper
        auto sharp = [&](const RunRecord& r) {
            const double d = batch_noise_level(noisy.block_noise, r.batch);
            return r.step * d * d / (4.0 * c0);
        };
        tightest = std::min(tightest, -worst_excess(tr, sharp));
    }
    report(3, "noisy per-path bound", worst <= 0.0 && tightest >= -1e-9,
           "convolution p=200, delta_rel=0.1 uniform, s2, 10 seeds x 1e4 steps: max excess over mu1 delta_I^2/(4 c0) "
           "+ 1e-9 = " + fmt("%.3g", worst) + "; slack against t_n delta_I^2/(4 c0) = " + fmt("%.3g", tightest));
}

void criterion_gated_descent() {
    const auto& e = ex51();
    const std::size_t p = 200;
    const double sigma = e.map.sigma();
    const StepRule rule = StepRule::discrepancy(sigma, 2.0);
    double worst = -std::numeric_limits<double>::infinity();
    std::size_t zero_steps = 0, steps = 0;
    for (double rel : {0.5, 0.1}) {
        const NoisyData noisy = corrupt(e.prob.y, NoiseSpec{NoiseModel::uniform, rel, 9});
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            MirrorDescent eng(e.prob.op, e.map, rule, Sampler::uniform(p, 1, seed),
                              Observations{noisy.y, noisy.block_noise});
            const RunTrace tr = eng.run(10000, {}, &e.truth);
            worst = std::max(worst, worst_excess(tr, [](const RunRecord&) { return 0.0; }));
            for (const auto& r : tr.records)
                if (!r.batch.empty()) {
                    ++steps;
                    zero_steps += r.step == 0.0;
                }
        }
    }
    report(4, "discrepancy-gated monotonicity", worst <= 1e-12,
           "tau=2, mu0=sigma, delta_rel in {0.5, 0.1}, 10 seeds x 1e4 steps: max(Delta_{n+1} - Delta_n) = " +
               fmt("%.3g", worst) + " (limit 1e-12); gate closed on " + std::to_string(zero_steps) + "/" +
               std::to_string(steps) + " steps");
}

// --- 5 ---------------------------------------------------------------------

void criterion_rate() {
    const auto t0 = Clock::now();
    RateSpec spec;   // 30 x 40, singular values 1 .. 1e-3
    const RateInstance inst = build_rate_instance(spec);
    RateStudyOptions ro;
    ro.b = 1;
    ro.c = 1.0;
    ro.K = 20;
    ro.deltas = {1e-1, 1e-2, 1e-3, 1e-4};
    ro.master_seed = 3;
    const RateStudyResult res = rate_study(inst.op, inst.map, inst.lambda_true, ro);
    const double secs = seconds_since(t0);
    std::string table;
    for (const auto& r : res.rows)
        table += fmt(" %.0e", r.delta) + ":" + fmt("%.3g", r.mean_sq_error);
    report(5, "O(delta) rate", res.slope >= 0.7 && res.slope <= 1.3 && secs < 120.0,
           "slope " + fmt("%.3f", res.slope) + " (band [0.7, 1.3]), E|x - x*|^2 by delta" + table + ", " +
               fmt("%.1f", secs) + " s (limit 120 s)");
}

// --- 6 ---------------------------------------------------------------------

void criterion_batch_noise() {
    std::mt19937_64 rng(6);
    std::uniform_int_distribution<int> level(0, 9);
    bool exact = true;
    std::size_t cases = 0;
    for (std::size_t p = 1; p <= 8; ++p) {
        Vector d(p);
        for (auto& v : d)
            v = level(rng);
        for (std::size_t b = 1; b <= p; ++b) {
            // enumerate all subsets of size b with integer arithmetic
            long long sum = 0, count = 0;
            for (unsigned mask = 0; mask < (1u << p); ++mask) {
                if (static_cast<std::size_t>(__builtin_popcount(mask)) != b)
                    continue;
                ++count;
                for (std::size_t i = 0; i < p; ++i)
                    if (mask & (1u << i))
                        sum += static_cast<long long>(d[i] * d[i]);
            }
            const double oracle = static_cast<double>(sum) / static_cast<double>(count);
            exact = exact && expected_batch_noise(d, b) == oracle;
            ++cases;
        }
    }
    report(6, "batch-noise identity", exact,
           std::to_string(cases) + " (p, b) cases with p <= 8 compared against subset enumeration, exact equality");
}

// --- 7 ---------------------------------------------------------------------

void criterion_mirror_oracle() {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> wdist(0.3, 1.7);
    std::uniform_int_distribution<int> dim(1, 5);
    double worst = 0.0;
    int cases = 0;
    for (int kind = 0; kind < 4; ++kind) {
        for (int trial = 0; trial < 50; ++trial) {
            const int m = kind == 2 ? std::max(2, dim(rng)) : dim(rng);
            Vector w(m), xi(m);
            for (int j = 0; j < m; ++j) {
                w[j] = wdist(rng);
                xi[j] = 3.0 * normal(rng);
            }
            const bool weighted = trial % 2 == 1;
            MirrorMap map = kind == 0   ? MirrorMap::quadratic(m, weighted ? w : Vector())
                            : kind == 1 ? MirrorMap::nonneg_quadratic(m, weighted ? w : Vector())
                            : kind == 2 ? MirrorMap::entropy_simplex(weighted ? w : Vector(Vector::Ones(m)))
                                        : MirrorMap::elastic_net(m, 1.5, weighted ? w : Vector());
            const Vector x = map.solve(xi);
            const Vector ref = kind == 2 ? oracle::simplex_argmin(map.weights(), xi) : oracle::separable_argmin(map, xi);
            worst = std::max(worst, (x - ref).lpNorm<Eigen::Infinity>());
            ++cases;
        }
    }
    report(7, "mirror solve vs brute force", worst <= 1e-6,
           std::to_string(cases) + " cases (4 maps x 50, dim <= 5): max |solve - oracle|_inf = " + fmt("%.3g", worst) +
               " (limit 1e-6)");
}

// --- 8 ---------------------------------------------------------------------

void criterion_semiconvergence() {
    ExperimentConfig cfg = default_config("sparse");
    cfg.problem.p = 300;
    cfg.noise.spec = NoiseSpec{NoiseModel::uniform, 0.1, 2024};
    cfg.run.iters = 100000;
    cfg.run.K = 10;
    cfg.run.master_seed = 8;
    cfg.output.trace_every = 10;
    cfg.output.full_residual_every = std::numeric_limits<std::size_t>::max();
    cfg.step.mu0 = 2.0;
    cfg.step.strict = false;   // mu0 = 4 sigma, the setting of the reference experiment
    const ProblemInstance prob = build_problem(cfg);

    cfg.step.kind = "s2";
    const EnsembleResult s2 = run_ensemble(cfg, prob);
    cfg.step.kind = "s3";
    cfg.step.tau = 1.01;
    const EnsembleResult s3 = run_ensemble(cfg, prob);

    const bool pass = s3.report.ratio < s2.report.ratio && s3.report.final_over_min <= 2.0;
    report(8, "semi-convergence suppression", pass,
           "sparse p=300, delta_rel=0.1 uniform, 1e5 steps, K=10: post-min ratio s3 " + fmt("%.4g", s3.report.ratio) +
               " vs s2 " + fmt("%.4g", s2.report.ratio) + "; s3 final/min " + fmt("%.4g", s3.report.final_over_min) +
               " (limit 2); min mean rel err s3 " + fmt("%.3g", s3.report.min) + " at n=" +
               std::to_string(s3.report.argmin) + ", s2 " + fmt("%.3g", s2.report.min) + " at n=" +
               std::to_string(s2.report.argmin));
}

// --- 9 ---------------------------------------------------------------------

void criterion_tv_fidelity() {
    const std::size_t p = 100;
    const double beta = 0.05;
    IntegralProblem base = build_integral(KernelKind::gauss_0064, p, TruthKind::plateaus);
    const TVProblem tv = build_tv(base, beta);
    const NoisyData noisy = corrupt(base.y, NoiseSpec{NoiseModel::uniform, 0.05, 12});

    double max_norm = 0.0;
    for (std::size_t i = 0; i < p; ++i)
        max_norm = std::max(max_norm, induced_norm(*tv.op, BatchIndexSet::single(i), tv.map));
    const double t = 1.0 / (max_norm * max_norm);

    std::vector<BatchIndexSet> path;
    Sampler s = Sampler::uniform(p, 1, 99);
    const std::size_t steps = 10000;
    for (std::size_t n = 0; n < steps; ++n)
        path.push_back(s.next(n));

    MirrorDescent eng(tv.op, tv.map, StepRule::constant_step(t), Sampler::replay(path),
                      Observations{tv_stack_data(*tv.op, noisy.y), noisy.block_noise});

    // the three-line scheme written out directly
    const RowMatrix& A = base.op->matrix();
    const auto m = static_cast<Eigen::Index>(p);
    Vector x = Vector::Zero(m), eta = Vector::Zero(m - 1), z(m - 1), dz(m - 1), g(m);
    std::size_t mismatches = 0, first_bad = steps;
    for (std::size_t n = 0; n < steps; ++n) {
        for (Eigen::Index k = 0; k + 1 < m; ++k)
            z[k] = eta[k] > beta ? eta[k] - beta : eta[k] < -beta ? eta[k] + beta : 0.0;
        const auto i = static_cast<Eigen::Index>(path[n][0]);
        const double r = A.row(i).dot(x) - noisy.y[i];
        for (Eigen::Index k = 0; k + 1 < m; ++k)
            dz[k] = (x[k + 1] - x[k]) - z[k];
        g = r * A.row(i).transpose();
        g[0] += -dz[0];
        for (Eigen::Index j = 1; j + 1 < m; ++j)
            g[j] += dz[j - 1] - dz[j];
        g[m - 1] += dz[m - 2];
        x -= t * g;
        for (Eigen::Index k = 0; k + 1 < m; ++k)
            eta[k] = eta[k] - t * (-dz[k]);

        eng.step();
        const Vector& xi = eng.xi();
        const bool same = std::memcmp(xi.data(), x.data(), sizeof(double) * p) == 0 &&
                          std::memcmp(xi.data() + p, eta.data(), sizeof(double) * (p - 1)) == 0;
        if (!same) {
            ++mismatches;
            first_bad = std::min(first_bad, n);
        }
    }
    report(9, "TV scheme fidelity", mismatches == 0,
           "p=100, 1e4 steps on a shared path: " + std::to_string(mismatches) + " steps differ from the direct scheme" +
               (mismatches ? " (first at n=" + std::to_string(first_bad) + ")" : std::string(" (bit-identical)")));
}

// --- 10 --------------------------------------------------------------------

void criterion_tomography() {
    const auto t0 = Clock::now();
    const TomographyProblem tp = build_tomography(64, 30, 95);
    const std::size_t p = tp.op->num_blocks(), b = 50;
    const auto iters =
        static_cast<std::size_t>(std::ceil(600.0 * (400.0 / 29658.0) * static_cast<double>(p) / static_cast<double>(b)));
    const std::size_t m = 64 * 64;
    Truth truth{tp.phantom, {}, 0};
    int wins = 0;
    std::string detail;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const NoisyData noisy = corrupt(tp.y, NoiseSpec{NoiseModel::gaussian, 0.01, seed});
        double err[2];
        for (int k = 0; k < 2; ++k) {
            MirrorMap map = k == 0 ? MirrorMap::nonneg_quadratic(m) : MirrorMap::quadratic(m);
            MirrorDescent eng(tp.op, map, StepRule::adaptive(1.0), Sampler::uniform(p, b, seed),
                              Observations{noisy.y, noisy.block_noise});
            const RunTrace tr = eng.run(iters, {}, &truth);
            err[k] = tr.records.back().rel_err;
        }
        wins += err[0] < err[1];
        detail += fmt(" %.4f", err[0]) + "/" + fmt("%.4f", err[1]);
    }
    const double secs = seconds_since(t0);
    report(10, "tomography nonnegativity benefit", wins == 5 && secs < 180.0,
           "n=64, 30 angles, 95 rays (" + std::to_string(p) + " rows), b=50, " + std::to_string(iters) +
               " steps: final rel err nonneg/plain per seed" + detail + ", " + fmt("%.1f", secs) + " s (limit 180 s)");
}

}  // namespace

int main() {
    criterion_equivalence();
    criterion_exact_descent();
    criterion_noisy_bound();
    criterion_gated_descent();
    criterion_rate();
    criterion_batch_noise();
    criterion_mirror_oracle();
    criterion_semiconvergence();
    criterion_tv_fidelity();
    criterion_tomography();
    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
