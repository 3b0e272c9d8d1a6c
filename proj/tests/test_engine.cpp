#include "smd/engine.hpp"
#include "smd/noise.hpp"
#include "smd/trace.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace smd;

namespace {

std::shared_ptr<const DenseBlockOperator> random_op(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed,
                                                    std::vector<std::size_t> dims = {}) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    RowMatrix A(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
            A(i, j) = normal(rng);
    if (dims.empty())
        return std::make_shared<DenseBlockOperator>(A);
    return std::make_shared<DenseBlockOperator>(A, dims);
}

Vector random_vector(Eigen::Index n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Vector v(n);
    for (auto& x : v)
        x = normal(rng);
    return v;
}

std::vector<MirrorMap> maps_for(std::size_t m) {
    Vector w = Vector::LinSpaced(static_cast<Eigen::Index>(m), 0.5, 1.5);
    return {MirrorMap::quadratic(m), MirrorMap::quadratic(m, w), MirrorMap::nonneg_quadratic(m),
            MirrorMap::elastic_net(m, 0.3), MirrorMap::entropy_simplex(w / w.sum())};
}

// a truth in the range of the map, consistent data y = A x*
Vector truth_for(const MirrorMap& map, std::uint64_t seed) {
    return map.solve(2.0 * random_vector(static_cast<Eigen::Index>(map.dim()), seed));
}

}  // namespace

TEST(Engine, OneStepHand) {
    RowMatrix A(1, 2);
    A << 1, 0;
    auto op = std::make_shared<DenseBlockOperator>(A);
    Vector y(1);
    y << 2;
    MirrorDescent eng(op, MirrorMap::quadratic(2), StepRule::constant_step(0.5), Sampler::cyclic(1), {y, {}});
    const StepInfo info = eng.step();
    EXPECT_EQ(info.step, 0.5);
    EXPECT_EQ(info.batch_res, 2.0);
    EXPECT_EQ(eng.xi(), Vector::Unit(2, 0));
    EXPECT_EQ(eng.x(), Vector::Unit(2, 0));
    EXPECT_EQ(eng.iteration(), 1u);
}

TEST(Engine, ZeroResidualFixedPoint) {
    auto op = random_op(6, 4, 1);
    for (const auto& rule : {StepRule::constant_step(0.01), StepRule::adaptive(1.0), StepRule::discrepancy(1.0, 1.5)}) {
        MirrorDescent eng(op, MirrorMap::quadratic(4), rule, Sampler::uniform(6, 2, 3), {Vector::Zero(6), {}});
        for (int k = 0; k < 10; ++k) {
            eng.step();
            EXPECT_TRUE(eng.xi().isZero(0.0));
            EXPECT_TRUE(eng.x().isZero(0.0));
        }
    }
}

TEST(Engine, FullBatchIsLandweber) {
    auto op = random_op(8, 5, 2);
    const RowMatrix& A = op->matrix();
    const Vector y = random_vector(8, 3);
    const double t = 0.5 / A.squaredNorm();
    MirrorDescent eng(op, MirrorMap::quadratic(5), StepRule::constant_step(t), Sampler::uniform(8, 8, 4), {y, {}});
    Vector x = Vector::Zero(5);
    for (int n = 0; n < 200; ++n) {
        x -= t * (A.transpose() * (A * x - y));
        eng.step();
        EXPECT_LE((eng.x() - x).norm(), 1e-12 * (1.0 + x.norm()));
    }
}

TEST(Engine, BudgetZeroRejected) {
    auto op = random_op(3, 3, 5);
    MirrorDescent eng(op, MirrorMap::quadratic(3), StepRule::adaptive(1.0), Sampler::cyclic(3), {Vector::Ones(3), {}});
    EXPECT_THROW(eng.run(0), std::invalid_argument);
}

TEST(Engine, ConstructionErrors) {
    auto op = random_op(3, 3, 5);
    const Observations ok{Vector::Ones(3), {}};
    EXPECT_THROW(MirrorDescent(op, MirrorMap::quadratic(4), StepRule::adaptive(1.0), Sampler::cyclic(3), ok),
                 std::invalid_argument);
    EXPECT_THROW(MirrorDescent(op, MirrorMap::quadratic(3), StepRule::adaptive(1.0), Sampler::cyclic(3),
                               {Vector::Ones(2), {}}),
                 std::invalid_argument);
    EXPECT_THROW(MirrorDescent(op, MirrorMap::quadratic(3), StepRule::adaptive(1.0), Sampler::cyclic(4), ok),
                 std::invalid_argument);
}

TEST(Engine, HypothesisEnforcement) {
    auto op = random_op(4, 3, 6);
    const Observations data{Vector::Ones(4), {}};
    EXPECT_THROW(MirrorDescent(op, MirrorMap::quadratic(3), StepRule::adaptive(2.0), Sampler::cyclic(4), data),
                 std::invalid_argument);
    EngineOptions relaxed;
    relaxed.enforce_step_hypotheses = false;
    MirrorDescent eng(op, MirrorMap::quadratic(3), StepRule::adaptive(2.0), Sampler::cyclic(4), data, relaxed);
    EXPECT_FALSE(eng.step_check().ok);
    EXPECT_NE(eng.step_check().message.find("mu0"), std::string::npos);
    EXPECT_GT(eng.rule().mu1, 0.0);
}

TEST(Engine, StateInvariantExact) {
    auto op = random_op(10, 6, 7, {2, 3, 1, 4});
    const Vector y = random_vector(10, 8);
    for (const auto& map : maps_for(6)) {
        MirrorDescent eng(op, map, StepRule::adaptive(1.0), Sampler::uniform(4, 2, 9), {y, {}});
        EXPECT_TRUE(eng.xi().isZero(0.0));
        for (int k = 0; k < 100; ++k) {
            eng.step();
            EXPECT_EQ(eng.x(), map.solve(eng.xi())) << to_string(map.kind());
        }
    }
}

TEST(Engine, ExactDataDescentAllRules) {
    const std::size_t m = 12, p = 20;
    auto op = random_op(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(m), 10);
    for (const auto& map : maps_for(m)) {
        const Vector xt = truth_for(map, 11);
        const Vector y = op->apply_all(xt);
        const Truth truth{xt, {}, 0};
        std::vector<double> table(p);
        for (std::size_t i = 0; i < p; ++i) {
            const double n = induced_norm(*op, BatchIndexSet::single(i), map);
            table[i] = 1.5 / (n * n);
        }
        for (const auto& rule : {StepRule::per_block(table), StepRule::adaptive(1.5), StepRule::discrepancy(1.0, 1.0)}) {
            for (std::uint64_t seed = 1; seed <= 3; ++seed) {
                MirrorDescent eng(op, map, rule, Sampler::uniform(p, 1, seed), {y, {}});
                const RunTrace tr = eng.run(2000, {}, &truth);
                for (std::size_t k = 0; k + 1 < tr.records.size(); ++k)
                    ASSERT_LE(tr.records[k + 1].bregman, tr.records[k].bregman + 1e-12)
                        << to_string(map.kind()) << " " << to_string(rule.kind) << " n=" << k;
            }
        }
    }
}

TEST(Engine, GatedMonotonicityOnNoisyData) {
    const std::size_t m = 12, p = 20;
    auto op = random_op(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(m), 12);
    for (const auto& map : maps_for(m)) {
        const Vector xt = truth_for(map, 13);
        const NoisyData noisy = corrupt(op->apply_all(xt), NoiseSpec{NoiseModel::uniform, 0.2, 14});
        const Truth truth{xt, {}, 0};
        // 1 - 1/tau - mu0/(4 sigma) = 1 - 1/2 - 1/4 >= 0
        MirrorDescent eng(op, map, StepRule::discrepancy(0.5, 2.0), Sampler::uniform(p, 3, 15),
                          {noisy.y, noisy.block_noise});
        const RunTrace tr = eng.run(3000, {}, &truth);
        for (std::size_t k = 0; k + 1 < tr.records.size(); ++k)
            ASSERT_LE(tr.records[k + 1].bregman, tr.records[k].bregman + 1e-12) << to_string(map.kind());
    }
}

TEST(Engine, NoisyDescentBound) {
    const std::size_t m = 12, p = 20;
    auto op = random_op(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(m), 16);
    for (const auto& map : maps_for(m)) {
        const Vector xt = truth_for(map, 17);
        const NoisyData noisy = corrupt(op->apply_all(xt), NoiseSpec{NoiseModel::uniform, 0.3, 18});
        const Truth truth{xt, {}, 0};
        const double mu0 = 1.2, c0 = 1.0 - mu0 / (4.0 * map.sigma());
        MirrorDescent eng(op, map, StepRule::adaptive(mu0), Sampler::uniform(p, 2, 19), {noisy.y, noisy.block_noise});
        const RunTrace tr = eng.run(3000, {}, &truth);
        for (std::size_t k = 0; k + 1 < tr.records.size(); ++k) {
            const double d = batch_noise_level(noisy.block_noise, tr.records[k].batch);
            ASSERT_LE(tr.records[k + 1].bregman - tr.records[k].bregman, eng.rule().mu1 * d * d / (4 * c0) + 1e-9);
        }
    }
}

TEST(Engine, Reproducible) {
    auto op = random_op(15, 6, 20);
    const Vector y = random_vector(15, 21);
    const Truth truth{Vector::Ones(6), {}, 0};
    auto go = [&](std::uint64_t seed) {
        MirrorDescent eng(op, MirrorMap::elastic_net(6, 0.1), StepRule::adaptive(1.0), Sampler::uniform(15, 4, seed),
                          {y, {}});
        return trace_csv(eng.run(500, {}, &truth));
    };
    EXPECT_EQ(go(3), go(3));
    EXPECT_NE(go(3), go(4));
}

TEST(Engine, TraceLayout) {
    auto op = random_op(6, 3, 22);
    EngineOptions opt;
    opt.trace_every = 4;
    opt.full_residual_every = 8;
    MirrorDescent eng(op, MirrorMap::quadratic(3), StepRule::adaptive(1.0), Sampler::cyclic(6), {Vector::Ones(6), {}},
                      opt);
    const RunTrace tr = eng.run(18);
    std::vector<std::size_t> n;
    for (const auto& r : tr.records)
        n.push_back(r.n);
    EXPECT_EQ(n, (std::vector<std::size_t>{0, 4, 8, 12, 16, 18}));
    EXPECT_FALSE(std::isnan(tr.records[0].full_res));
    EXPECT_TRUE(std::isnan(tr.records[1].full_res));
    EXPECT_FALSE(std::isnan(tr.records[2].full_res));
    EXPECT_TRUE(tr.records.back().batch.empty());
    EXPECT_FALSE(std::isnan(tr.records.back().full_res));
    EXPECT_TRUE(std::isnan(tr.records[0].rel_err));
    EXPECT_EQ(tr.records[1].batch, BatchIndexSet::single(4));
    EXPECT_EQ(tr.iterations, 18u);
}

TEST(Engine, StoppingRules) {
    auto op = random_op(10, 4, 23);
    const Vector xt = random_vector(4, 24);
    const NoisyData noisy = corrupt(op->apply_all(xt), NoiseSpec{NoiseModel::uniform, 0.05, 25});
    const Observations data{noisy.y, noisy.block_noise};

    MirrorDescent a(op, MirrorMap::quadratic(4), StepRule::adaptive(1.0), Sampler::cyclic(10), data);
    auto tr = a.run(1000, StopSpec::fixed(37));
    EXPECT_EQ(tr.iterations, 37u);
    EXPECT_EQ(tr.reason, StopReason::fixed);

    MirrorDescent b(op, MirrorMap::quadratic(4), StepRule::adaptive(1.0), Sampler::cyclic(10), data);
    tr = b.run(100000, StopSpec::a_priori(2.0));
    EXPECT_EQ(tr.iterations, static_cast<std::size_t>(std::ceil(2.0 / noisy.total)));
    EXPECT_EQ(tr.reason, StopReason::a_priori);

    MirrorDescent c(op, MirrorMap::quadratic(4), StepRule::discrepancy(1.0, 2.0), Sampler::cyclic(10), data);
    tr = c.run(100000, StopSpec::discrepancy_all(2.0));
    EXPECT_EQ(tr.reason, StopReason::discrepancy);
    EXPECT_EQ(tr.iterations % 10, 0u);
    EXPECT_TRUE(c.discrepancy_met(2.0));

    MirrorDescent d(op, MirrorMap::quadratic(4), StepRule::adaptive(1.0), Sampler::cyclic(10), data);
    tr = d.run(5, StopSpec::fixed(50));
    EXPECT_EQ(tr.iterations, 5u);
    EXPECT_EQ(tr.reason, StopReason::budget);
}

TEST(Engine, ErrorMetrics) {
    const auto map = MirrorMap::quadratic(3);
    Vector x(3), xt(3), w(3);
    x << 1, 2, 3;
    xt << 1, 1, 1;
    w << 0.5, 1, 0.5;
    RunRecord r;
    fill_error_metrics(map, x, x, Truth{xt, w, 0}, r);
    EXPECT_DOUBLE_EQ(r.rel_err, (1.0 + 0.5 * 4) / 2.0);
    EXPECT_DOUBLE_EQ(r.l1_sq, (1.0 + 1.0) * (1.0 + 1.0));
    EXPECT_DOUBLE_EQ(r.bregman, 0.5 * 5);
    fill_error_metrics(map, x, x, Truth{xt, {}, 2}, r);
    EXPECT_DOUBLE_EQ(r.rel_err, 0.5);
}

TEST(Trace, CsvFormat) {
    RunTrace tr;
    RunRecord a;
    a.n = 0;
    a.batch = BatchIndexSet({1, 3});
    a.step = 0.1;
    a.batch_res = 2;
    RunRecord b;
    b.n = 1;
    tr.records = {a, b};
    const std::string csv = trace_csv(tr);
    std::istringstream is(csv);
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "n,indices,t,batch_res,full_res,rel_err,bregman,l1_sq");
    std::getline(is, line);
    EXPECT_EQ(line, "0,1;3,0.10000000000000001,2,,,,");
    std::getline(is, line);
    EXPECT_EQ(line, "1,,,,,,,");
}
