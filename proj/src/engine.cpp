#include "smd/engine.hpp"

#include <cmath>
#include <stdexcept>

namespace smd {

void fill_error_metrics(const MirrorMap& map, const Vector& xi, const Vector& x, const Truth& truth, RunRecord& rec) {
    const auto len = static_cast<Eigen::Index>(truth.prefix ? truth.prefix : static_cast<std::size_t>(truth.x.size()));
    const auto diff = x.head(len) - truth.x.head(len);
    const auto ref = truth.x.head(len);
    double num, den, l1;
    if (truth.weights.size()) {
        num = diff.cwiseAbs2().cwiseProduct(truth.weights).sum();
        den = ref.cwiseAbs2().cwiseProduct(truth.weights).sum();
        l1 = diff.cwiseAbs().cwiseProduct(truth.weights).sum();
    } else {
        num = diff.squaredNorm();
        den = ref.squaredNorm();
        l1 = diff.lpNorm<1>();
    }
    rec.rel_err = den > 0.0 ? num / den : num;
    rec.l1_sq = l1 * l1;
    rec.bregman = map.bregman(xi, x, truth.x);
}

MirrorDescent::MirrorDescent(std::shared_ptr<const BlockOperator> op, MirrorMap map, StepRule rule, Sampler sampler,
                             Observations data, EngineOptions options)
    : op_(std::move(op)), map_(std::move(map)), sampler_(std::move(sampler)), data_(std::move(data)),
      options_(options) {
    if (!op_)
        throw std::invalid_argument("engine: null operator");
    if (op_->input_dim() != map_.dim())
        throw std::invalid_argument("engine: operator input dimension differs from the mirror map dimension");
    if (static_cast<std::size_t>(data_.y.size()) != op_->output_dim())
        throw std::invalid_argument("engine: data length differs from the operator output dimension");
    if (data_.block_noise.size() && static_cast<std::size_t>(data_.block_noise.size()) != op_->num_blocks())
        throw std::invalid_argument("engine: one noise level per block expected");
    if (sampler_.num_blocks() > op_->num_blocks())
        throw std::invalid_argument("engine: sampler draws blocks the operator does not have");
    if (options_.trace_every == 0)
        throw std::invalid_argument("engine: trace_every must be positive");

    const std::size_t p = op_->num_blocks();
    const std::size_t b = sampler_.batch_size();
    check_ = check_step_rule(rule, *op_, map_, b);
    if (!check_.ok && options_.enforce_step_hypotheses)
        throw std::invalid_argument(check_.message);
    rule_ = resolve_step_rule(std::move(rule), *op_, map_);
    if (rule_.kind == StepKind::s3 && !data_.block_noise.size())
        data_.block_noise = Vector::Zero(static_cast<Eigen::Index>(p));

    sweep_ = (p + b - 1) / b;
    if (options_.full_residual_every == 0)
        options_.full_residual_every = sweep_;

    xi_ = Vector::Zero(static_cast<Eigen::Index>(map_.dim()));
    x_ = map_.solve(xi_);
}

Vector MirrorDescent::gather(const BatchIndexSet& I) const {
    Vector out(static_cast<Eigen::Index>(op_->batch_dim(I)));
    Eigen::Index k = 0;
    for (auto i : I) {
        const auto off = static_cast<Eigen::Index>(op_->block_offset(i));
        const auto d = static_cast<Eigen::Index>(op_->block_dim(i));
        out.segment(k, d) = data_.y.segment(off, d);
        k += d;
    }
    return out;
}

StepInfo MirrorDescent::step() {
    StepInfo info;
    info.batch = sampler_.next(n_);
    Vector r = op_->apply(info.batch, x_) - gather(info.batch);
    info.batch_res = r.norm();
    if (info.batch_res > 0.0) {
        Vector g = op_->adjoint(info.batch, r);
        const double delta_I =
            rule_.kind == StepKind::s3 ? batch_noise_level(data_.block_noise, info.batch) : 0.0;
        const double g_norm = rule_.kind == StepKind::s1 ? 0.0 : map_.dual_norm(g);
        info.step = compute_step(rule_, info.batch_res, g_norm, info.batch, delta_I);
        if (info.step > 0.0) {
            xi_ -= info.step * g;
            x_ = map_.solve(xi_);
        }
    } else {
        info.step = rule_.kind == StepKind::s1 ? rule_.table_step(info.batch) : 0.0;
    }
    ++n_;
    return info;
}

double MirrorDescent::full_residual() const {
    return (op_->apply_all(x_) - data_.y).norm();
}

bool MirrorDescent::discrepancy_met(double tau) const {
    const Vector r = op_->apply_all(x_) - data_.y;
    for (std::size_t i = 0; i < op_->num_blocks(); ++i) {
        const auto off = static_cast<Eigen::Index>(op_->block_offset(i));
        const auto d = static_cast<Eigen::Index>(op_->block_dim(i));
        const double delta = data_.block_noise.size() ? data_.block_noise[static_cast<Eigen::Index>(i)] : 0.0;
        if (r.segment(off, d).norm() > tau * delta)
            return false;
    }
    return true;
}

RunRecord MirrorDescent::observe(const Truth* truth, bool with_full_residual) const {
    RunRecord rec;
    rec.n = n_;
    if (with_full_residual)
        rec.full_res = full_residual();
    if (truth)
        fill_error_metrics(map_, xi_, x_, *truth, rec);
    return rec;
}

std::size_t MirrorDescent::stop_target(std::size_t budget, const StopSpec& stop) const {
    switch (stop.kind) {
    case StopKind::fixed: return stop.n ? std::min(stop.n, budget) : budget;
    case StopKind::a_priori: {
        const double delta = data_.total_noise();
        if (!(delta > 0.0))
            return budget;
        const double n = std::ceil(stop.c * std::pow(delta, -stop.exponent));
        if (!(n < static_cast<double>(budget)))
            return budget;
        return static_cast<std::size_t>(n);
    }
    case StopKind::discrepancy_all: return budget;
    }
    return budget;
}

RunTrace MirrorDescent::run(std::size_t budget, const StopSpec& stop, const Truth* truth) {
    if (budget == 0)
        throw std::invalid_argument("run: budget must be at least 1");
    if (truth && static_cast<std::size_t>(truth->x.size()) != map_.dim())
        throw std::invalid_argument("run: truth length differs from the primal dimension");

    RunTrace trace;
    const std::size_t start = n_;
    const std::size_t target = start + stop_target(budget, stop);
    trace.reason = StopReason::budget;
    if (stop.kind == StopKind::fixed && target - start < budget)
        trace.reason = StopReason::fixed;
    if (stop.kind == StopKind::a_priori && target - start < budget)
        trace.reason = StopReason::a_priori;

    while (n_ < target) {
        const std::size_t k = n_ - start;
        if (stop.kind == StopKind::discrepancy_all && k % sweep_ == 0 && discrepancy_met(stop.tau)) {
            trace.reason = StopReason::discrepancy;
            break;
        }
        const bool record = k % options_.trace_every == 0;
        RunRecord rec;
        if (record)
            rec = observe(truth, k % options_.full_residual_every == 0);
        StepInfo info = step();
        if (record) {
            rec.batch = std::move(info.batch);
            rec.step = info.step;
            rec.batch_res = info.batch_res;
            trace.records.push_back(std::move(rec));
        }
    }
    trace.iterations = n_ - start;
    if (trace.records.empty() || trace.records.back().n != n_)
        trace.records.push_back(observe(truth, true));
    return trace;
}

}  // namespace smd
