#pragma once

#include "smd/mirror.hpp"
#include "smd/operators.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <string>

namespace smd {

enum class KernelKind {
    convolution_61,  // phi(s - t), phi(s) = (1 + cos(pi s / 3)) on |s| < 3, on [-6, 6]
    gauss_0064,      // 4 exp(-(s - t)^2 / 0.0064) on [0, 1]
    power_kernel,    // (0.1^2 + (s - t)^2)^(-3/2) on [0, 1]
    constant,        // k = 1 on [0, 1] (quadrature checks)
};

enum class TruthKind {
    sines,      // sin(pi t / 12) + sin(pi t / 3) + t^2 (1 - t) / 200
    density,    // c (exp(-60 (t - 0.3)^2) + 0.3 exp(-40 (t - 0.8)^2)), integral 1
    spikes,     // chi[0.19, 0.22] - chi[0.50, 0.52] + 0.5 chi[0.78, 0.80]
    plateaus,   // 0.6 chi[0.1, 0.3) + chi[0.3, 0.55) + 0.3 chi[0.7, 0.9)
    zero,
};

KernelKind parse_kernel(const std::string& name);
std::string to_string(KernelKind kind);
TruthKind parse_truth(const std::string& name);
std::string to_string(TruthKind kind);

// the truth each kernel is paired with by default
TruthKind default_truth(KernelKind kind);

struct IntegralProblem {
    double a = 0.0;
    double b = 1.0;
    std::size_t p = 0;
    Vector nodes;     // s_i = t_i = a + i h
    Vector weights;   // trapezoid: h inside, h / 2 at the ends
    std::shared_ptr<const DenseBlockOperator> op;   // row i: k(s_i, t_j) w_j
    Vector x_true;
    Vector y;         // exact data A x_true
};

IntegralProblem build_integral(KernelKind kind, std::size_t p);
IntegralProblem build_integral(KernelKind kind, std::size_t p, TruthKind truth);
IntegralProblem build_integral(const std::function<double(double, double)>& kernel, double a, double b,
                               const std::function<double(double)>& truth, std::size_t p);

// Trapezoid-weighted samples of the truth, with the density normalized to
// integrate to 1 under the same weights.
Vector sample_truth(TruthKind truth, const Vector& nodes, const Vector& weights);

//
// z = D x augmented system: block i maps (x, z) to (A_i x, D x - z), where D
// is the (m - 1) x m forward difference.
//
class TVOperator final : public BlockOperator {
public:
    explicit TVOperator(std::shared_ptr<const DenseBlockOperator> base);

    StorageKind storage() const noexcept override { return StorageKind::composite; }
    std::size_t signal_dim() const noexcept { return m_; }
    const DenseBlockOperator& base() const noexcept { return *base_; }

    void apply_block(std::size_t i, const Vector& x, std::span<double> out) const override;
    void adjoint_block_add(std::size_t i, std::span<const double> u, Vector& out) const override;

private:
    std::shared_ptr<const DenseBlockOperator> base_;
    std::size_t m_;
};

struct TVProblem {
    std::shared_ptr<const TVOperator> op;
    MirrorMap map = MirrorMap::quadratic(1);   // quadratic on x times elastic net on z
    Vector x_true;    // (x*, D x*)
    Vector y;         // exact composite data (y_i, 0)
};

TVProblem build_tv(const IntegralProblem& base, double beta);

// composite data blocks (y_i, 0) from base data
Vector tv_stack_data(const TVOperator& op, const Vector& base_y);

// forward differences (Dx)_k = x_{k+1} - x_k
Vector forward_difference(const Vector& x);

// rows x cols matrix U diag(s) V^T with orthonormal random U, V and singular
// values log-spaced from s_max down to s_min
RowMatrix random_ill_posed(std::size_t rows, std::size_t cols, double s_max, double s_min, std::uint64_t seed);

}  // namespace smd
