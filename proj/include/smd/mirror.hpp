#pragma once

#include "smd/operators.hpp"

#include <limits>
#include <string>
#include <vector>

namespace smd {

enum class MirrorKind { quadratic, nonneg_quadratic, entropy_simplex, elastic_net, product };

std::string to_string(MirrorKind kind);

// Norm the map is strongly convex in.
enum class Geometry {
    weighted_l2,  // ||x||^2 = sum w_j x_j^2 (w = 1 gives the Euclidean norm)
    weighted_l1,  // ||x|| = sum w_j |x_j|
    mixed,        // product whose components disagree
};

/**
 * A strongly convex regularizer R on R^m paired with its dual through the
 * Euclidean pairing <xi, x> = sum xi_j x_j.
 *
 * Base maps carry optional quadrature weights w (empty = all ones):
 *
 *   quadratic        R(x) = 1/2 sum w x^2                      solve: xi / w
 *   nonneg_quadratic R(x) = 1/2 sum w x^2 + indicator(x >= 0)   solve: max(xi / w, 0)
 *   elastic_net      R(x) = sum w (beta |x| + x^2 / 2)          solve: soft(xi / w, beta)
 *   entropy_simplex  R(x) = sum w x log x + indicator(simplex)  solve: e^{xi/w} / <w, e^{xi/w}>
 *
 * With quadrature weights, xi / w is the dual element in function-space
 * coordinates, so the closed forms agree with their continuous
 * counterparts. All maps have modulus of convexity 1/2 in their own norm
 * (see geometry()).
 *
 * A product map stacks components over consecutive coordinate ranges.
 */
class MirrorMap {
public:
    static MirrorMap quadratic(std::size_t dim, Vector weights = {});
    static MirrorMap nonneg_quadratic(std::size_t dim, Vector weights = {});
    static MirrorMap elastic_net(std::size_t dim, double beta, Vector weights = {});
    static MirrorMap entropy_simplex(Vector weights);
    static MirrorMap product(std::vector<MirrorMap> components);

    MirrorKind kind() const noexcept { return kind_; }
    std::size_t dim() const noexcept { return dim_; }
    double sigma() const noexcept { return sigma_; }
    double beta() const noexcept { return beta_; }

    // quadrature weights, empty when unit
    const Vector& weights() const noexcept { return weights_; }

    const std::vector<MirrorMap>& components() const noexcept { return components_; }

    Geometry geometry() const noexcept;

    // Weights of the l2 geometry over all coordinates (ones where unit);
    // only valid when geometry() == weighted_l2.
    Vector l2_weights() const;
    bool unit_weighted() const;

    // argmin_x { R(x) - <xi, x> }; throws std::invalid_argument on bad length or non-finite input
    Vector solve(const Vector& xi) const;

    // R(x); +infinity outside the domain
    double evaluate(const Vector& x) const;

    // D^xi(x_ref, x) = R(x_ref) - R(x) - <xi, x_ref - x>, with xi in dR(x)
    double bregman(const Vector& xi, const Vector& x, const Vector& x_ref) const;

    // R*(xi) = <xi, x^> - R(x^), x^ = solve(xi)
    double conjugate_value(const Vector& xi) const;

    double primal_norm(const Vector& x) const;
    double dual_norm(const Vector& xi) const;

    static constexpr double simplex_tolerance = 1e-9;

private:
    MirrorMap() = default;

    void check_length(const Vector& v, const char* what) const;
    Vector solve_unchecked(const Vector& xi) const;
    double bregman_terms(const Vector& xi, const Vector& x, const Vector& x_ref) const;

    MirrorKind kind_ = MirrorKind::quadratic;
    std::size_t dim_ = 0;
    double sigma_ = 0.5;
    double beta_ = 0.0;
    Vector weights_;
    std::vector<MirrorMap> components_;
    std::vector<std::size_t> offsets_;
};

}  // namespace smd
