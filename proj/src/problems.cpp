#include "smd/problems.hpp"

#include <Eigen/QR>

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace smd {

namespace {

struct KernelSpec {
    double a, b;
    std::function<double(double, double)> k;
};

KernelSpec kernel_spec(KernelKind kind) {
    using std::numbers::pi;
    switch (kind) {
    case KernelKind::convolution_61:
        return {-6.0, 6.0, [](double s, double t) {
                    const double d = s - t;
                    return std::abs(d) < 3.0 ? 1.0 + std::cos(pi * d / 3.0) : 0.0;
                }};
    case KernelKind::gauss_0064:
        return {0.0, 1.0, [](double s, double t) { return 4.0 * std::exp(-(s - t) * (s - t) / 0.0064); }};
    case KernelKind::power_kernel:
        return {0.0, 1.0, [](double s, double t) { return std::pow(0.01 + (s - t) * (s - t), -1.5); }};
    case KernelKind::constant: return {0.0, 1.0, [](double, double) { return 1.0; }};
    }
    throw std::invalid_argument("unknown kernel");
}

double truth_value(TruthKind kind, double t) {
    using std::numbers::pi;
    auto in = [t](double lo, double hi) { return t >= lo && t <= hi ? 1.0 : 0.0; };
    auto half_open = [t](double lo, double hi) { return t >= lo && t < hi ? 1.0 : 0.0; };
    switch (kind) {
    case TruthKind::sines: return std::sin(pi * t / 12.0) + std::sin(pi * t / 3.0) + t * t * (1.0 - t) / 200.0;
    case TruthKind::density: return std::exp(-60.0 * (t - 0.3) * (t - 0.3)) + 0.3 * std::exp(-40.0 * (t - 0.8) * (t - 0.8));
    case TruthKind::spikes: return in(0.19, 0.22) - in(0.50, 0.52) + 0.5 * in(0.78, 0.80);
    case TruthKind::plateaus:
        return 0.6 * half_open(0.1, 0.3) + half_open(0.3, 0.55) + 0.3 * half_open(0.7, 0.9);
    case TruthKind::zero: return 0.0;
    }
    throw std::invalid_argument("unknown truth");
}

void trapezoid(double a, double b, std::size_t p, Vector& nodes, Vector& weights) {
    if (p < 2)
        throw std::invalid_argument("integral problem: p must be at least 2");
    const auto n = static_cast<Eigen::Index>(p);
    const double h = (b - a) / static_cast<double>(p - 1);
    nodes.resize(n);
    weights.setConstant(n, h);
    for (Eigen::Index i = 0; i < n; ++i)
        nodes[i] = a + static_cast<double>(i) * h;
    nodes[n - 1] = b;
    weights[0] = weights[n - 1] = h / 2.0;
}

IntegralProblem assemble(const std::function<double(double, double)>& kernel, double a, double b, std::size_t p,
                         const std::function<Vector(const Vector&, const Vector&)>& truth) {
    IntegralProblem prob;
    prob.a = a;
    prob.b = b;
    prob.p = p;
    trapezoid(a, b, p, prob.nodes, prob.weights);
    const auto n = static_cast<Eigen::Index>(p);
    RowMatrix rows(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            rows(i, j) = kernel(prob.nodes[i], prob.nodes[j]) * prob.weights[j];
    prob.op = std::make_shared<DenseBlockOperator>(std::move(rows));
    prob.x_true = truth(prob.nodes, prob.weights);
    prob.y = prob.op->apply_all(prob.x_true);
    return prob;
}

}  // namespace

KernelKind parse_kernel(const std::string& name) {
    if (name == "convolution_61") return KernelKind::convolution_61;
    if (name == "gauss_0064") return KernelKind::gauss_0064;
    if (name == "power_kernel") return KernelKind::power_kernel;
    if (name == "constant") return KernelKind::constant;
    throw std::invalid_argument("unknown kernel '" + name + "'");
}

std::string to_string(KernelKind kind) {
    switch (kind) {
    case KernelKind::convolution_61: return "convolution_61";
    case KernelKind::gauss_0064: return "gauss_0064";
    case KernelKind::power_kernel: return "power_kernel";
    case KernelKind::constant: return "constant";
    }
    return "unknown";
}

TruthKind parse_truth(const std::string& name) {
    if (name == "sines") return TruthKind::sines;
    if (name == "density") return TruthKind::density;
    if (name == "spikes") return TruthKind::spikes;
    if (name == "plateaus") return TruthKind::plateaus;
    if (name == "zero") return TruthKind::zero;
    throw std::invalid_argument("unknown truth '" + name + "'");
}

std::string to_string(TruthKind kind) {
    switch (kind) {
    case TruthKind::sines: return "sines";
    case TruthKind::density: return "density";
    case TruthKind::spikes: return "spikes";
    case TruthKind::plateaus: return "plateaus";
    case TruthKind::zero: return "zero";
    }
    return "unknown";
}

TruthKind default_truth(KernelKind kind) {
    switch (kind) {
    case KernelKind::convolution_61: return TruthKind::sines;
    case KernelKind::gauss_0064: return TruthKind::density;
    case KernelKind::power_kernel: return TruthKind::spikes;
    case KernelKind::constant: return TruthKind::zero;
    }
    return TruthKind::zero;
}

Vector sample_truth(TruthKind truth, const Vector& nodes, const Vector& weights) {
    Vector x(nodes.size());
    for (Eigen::Index j = 0; j < nodes.size(); ++j)
        x[j] = truth_value(truth, nodes[j]);
    if (truth == TruthKind::density)
        x /= weights.dot(x);
    return x;
}

IntegralProblem build_integral(KernelKind kind, std::size_t p) {
    return build_integral(kind, p, default_truth(kind));
}

IntegralProblem build_integral(KernelKind kind, std::size_t p, TruthKind truth) {
    const KernelSpec spec = kernel_spec(kind);
    return assemble(spec.k, spec.a, spec.b, p,
                    [truth](const Vector& nodes, const Vector& w) { return sample_truth(truth, nodes, w); });
}

IntegralProblem build_integral(const std::function<double(double, double)>& kernel, double a, double b,
                               const std::function<double(double)>& truth, std::size_t p) {
    if (!(b > a))
        throw std::invalid_argument("integral problem: need a < b");
    return assemble(kernel, a, b, p, [&truth](const Vector& nodes, const Vector&) {
        Vector x(nodes.size());
        for (Eigen::Index j = 0; j < nodes.size(); ++j)
            x[j] = truth ? truth(nodes[j]) : 0.0;
        return x;
    });
}

// ---------------------------------------------------------------------------

TVOperator::TVOperator(std::shared_ptr<const DenseBlockOperator> base)
    : BlockOperator(base ? 2 * base->input_dim() - 1 : 0,
                    std::vector<std::size_t>(base ? base->num_blocks() : 0, base ? base->input_dim() : 0)),
      base_(std::move(base)) {
    if (!base_)
        throw std::invalid_argument("tv: null base operator");
    for (std::size_t i = 0; i < base_->num_blocks(); ++i)
        if (base_->block_dim(i) != 1)
            throw std::invalid_argument("tv: base blocks must be single rows");
    m_ = base_->input_dim();
    if (m_ < 2)
        throw std::invalid_argument("tv: signal needs at least 2 samples");
}

void TVOperator::apply_block(std::size_t i, const Vector& x, std::span<double> out) const {
    const auto m = static_cast<Eigen::Index>(m_);
    out[0] = base_->matrix().row(static_cast<Eigen::Index>(i)).dot(x.head(m));
    for (Eigen::Index k = 0; k + 1 < m; ++k)
        out[static_cast<std::size_t>(k) + 1] = (x[k + 1] - x[k]) - x[m + k];
}

void TVOperator::adjoint_block_add(std::size_t i, std::span<const double> u, Vector& out) const {
    const auto m = static_cast<Eigen::Index>(m_);
    const double* s = u.data() + 1;
    out.head(m) += u[0] * base_->matrix().row(static_cast<Eigen::Index>(i)).transpose();
    // D^T s: (D^T s)_j = s_{j-1} - s_j with s_{-1} = s_{m-1} = 0
    out[0] += -s[0];
    for (Eigen::Index j = 1; j + 1 < m; ++j)
        out[j] += s[j - 1] - s[j];
    out[m - 1] += s[m - 2];
    for (Eigen::Index k = 0; k + 1 < m; ++k)
        out[m + k] -= s[k];
}

Vector forward_difference(const Vector& x) {
    if (x.size() < 2)
        return Vector();
    Vector d(x.size() - 1);
    for (Eigen::Index k = 0; k + 1 < x.size(); ++k)
        d[k] = x[k + 1] - x[k];
    return d;
}

Vector tv_stack_data(const TVOperator& op, const Vector& base_y) {
    if (static_cast<std::size_t>(base_y.size()) != op.num_blocks())
        throw std::invalid_argument("tv: one datum per block expected");
    Vector y = Vector::Zero(static_cast<Eigen::Index>(op.output_dim()));
    for (std::size_t i = 0; i < op.num_blocks(); ++i)
        y[static_cast<Eigen::Index>(op.block_offset(i))] = base_y[static_cast<Eigen::Index>(i)];
    return y;
}

TVProblem build_tv(const IntegralProblem& base, double beta) {
    if (!(beta > 0.0))
        throw std::invalid_argument("tv: beta must be positive");
    TVProblem tv;
    auto op = std::make_shared<TVOperator>(base.op);
    const std::size_t m = op->signal_dim();
    std::vector<MirrorMap> parts{MirrorMap::quadratic(m), MirrorMap::elastic_net(m - 1, beta)};
    tv.map = MirrorMap::product(std::move(parts));
    tv.x_true.resize(static_cast<Eigen::Index>(2 * m - 1));
    tv.x_true << base.x_true, forward_difference(base.x_true);
    tv.y = tv_stack_data(*op, base.y);
    tv.op = std::move(op);
    return tv;
}

RowMatrix random_ill_posed(std::size_t rows, std::size_t cols, double s_max, double s_min, std::uint64_t seed) {
    if (rows == 0 || cols == 0)
        throw std::invalid_argument("random_ill_posed: empty shape");
    if (!(s_max >= s_min) || !(s_min > 0.0))
        throw std::invalid_argument("random_ill_posed: need s_max >= s_min > 0");
    const auto r = static_cast<Eigen::Index>(rows);
    const auto c = static_cast<Eigen::Index>(cols);
    const Eigen::Index k = std::min(r, c);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    auto gaussian = [&](Eigen::Index n, Eigen::Index m) {
        Eigen::MatrixXd g(n, m);
        for (Eigen::Index j = 0; j < m; ++j)
            for (Eigen::Index i = 0; i < n; ++i)
                g(i, j) = normal(rng);
        return g;
    };
    const Eigen::MatrixXd U = Eigen::HouseholderQR<Eigen::MatrixXd>(gaussian(r, k)).householderQ() *
                              Eigen::MatrixXd::Identity(r, k);
    const Eigen::MatrixXd V = Eigen::HouseholderQR<Eigen::MatrixXd>(gaussian(c, k)).householderQ() *
                              Eigen::MatrixXd::Identity(c, k);
    Vector s(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        const double frac = k > 1 ? static_cast<double>(i) / static_cast<double>(k - 1) : 0.0;
        s[i] = s_max * std::pow(s_min / s_max, frac);
    }
    return U * s.asDiagonal() * V.transpose();
}

}  // namespace smd
