#include "smd/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace smd {

const std::vector<Ellipse>& shepp_logan_ellipses() {
    static const std::vector<Ellipse> e{
        {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},
        {-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0},
        {-0.2, 0.11, 0.31, 0.22, 0.0, -18.0},
        {-0.2, 0.16, 0.41, -0.22, 0.0, 18.0},
        {0.1, 0.21, 0.25, 0.0, 0.35, 0.0},
        {0.1, 0.046, 0.046, 0.0, 0.1, 0.0},
        {0.1, 0.046, 0.046, 0.0, -0.1, 0.0},
        {0.1, 0.046, 0.023, -0.08, -0.605, 0.0},
        {0.1, 0.023, 0.023, 0.0, -0.606, 0.0},
        {0.1, 0.023, 0.046, 0.06, -0.605, 0.0},
    };
    return e;
}

Vector rasterize(std::size_t n, const std::vector<Ellipse>& ellipses) {
    const double half = static_cast<double>(n) / 2.0;
    Vector img = Vector::Zero(static_cast<Eigen::Index>(n * n));
    for (std::size_t j = 0; j < n; ++j) {
        const double X = (static_cast<double>(j) + 0.5 - half) / half;
        for (std::size_t i = 0; i < n; ++i) {
            const double Y = (half - static_cast<double>(i) - 0.5) / half;
            double v = 0.0;
            for (const auto& e : ellipses) {
                const double phi = e.phi_deg * std::numbers::pi / 180.0;
                const double c = std::cos(phi), s = std::sin(phi);
                const double u = (X - e.x0) * c + (Y - e.y0) * s;
                const double w = -(X - e.x0) * s + (Y - e.y0) * c;
                if (u * u / (e.a * e.a) + w * w / (e.b * e.b) <= 1.0)
                    v += e.value;
            }
            img[static_cast<Eigen::Index>(j * n + i)] = std::max(v, 0.0);
        }
    }
    return img;
}

Vector shepp_logan(std::size_t n) {
    return rasterize(n, shepp_logan_ellipses());
}

std::vector<double> default_angles(std::size_t n_angles) {
    std::vector<double> a(n_angles);
    for (std::size_t k = 0; k < n_angles; ++k)
        a[k] = 1.0 + 180.0 * static_cast<double>(k) / static_cast<double>(n_angles);
    return a;
}

RayMatrix parallel_beam(std::size_t n, const std::vector<double>& angles_deg, std::size_t n_rays) {
    if (n < 8)
        throw std::invalid_argument("tomography: grid side must be at least 8");
    if (angles_deg.empty() || n_rays == 0)
        throw std::invalid_argument("tomography: need at least one angle and one ray");
    const double N = static_cast<double>(n);
    const double half = N / 2.0;
    const double d = std::sqrt(2.0) * N;
    constexpr double eps = 1e-12;

    std::vector<Eigen::Triplet<double, std::int64_t>> trips;
    RayMatrix out;
    std::int64_t row = 0;
    std::vector<double> alphas;
    alphas.reserve(2 * (n + 1) + 2);

    for (std::size_t ia = 0; ia < angles_deg.size(); ++ia) {
        const double th = angles_deg[ia] * std::numbers::pi / 180.0;
        double ux = std::sin(th), uy = -std::cos(th);
        if (std::abs(ux) < eps) ux = 0.0;
        if (std::abs(uy) < eps) uy = 0.0;
        const double nx = std::cos(th), ny = std::sin(th);
        for (std::size_t ir = 0; ir < n_rays; ++ir) {
            const double s = n_rays > 1 ? -d / 2.0 + d * static_cast<double>(ir) / static_cast<double>(n_rays - 1) : 0.0;
            const double px = s * nx, py = s * ny;

            // parameter interval inside the square [-half, half]^2
            double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
            auto clip = [&](double p0, double u) {
                if (u == 0.0) {
                    if (p0 < -half || p0 > half) { lo = 1.0; hi = 0.0; }
                    return;
                }
                double a0 = (-half - p0) / u, a1 = (half - p0) / u;
                if (a0 > a1) std::swap(a0, a1);
                lo = std::max(lo, a0);
                hi = std::min(hi, a1);
            };
            clip(px, ux);
            clip(py, uy);
            if (!(hi - lo > eps))
                continue;

            alphas.clear();
            alphas.push_back(lo);
            alphas.push_back(hi);
            for (std::size_t k = 0; k <= n; ++k) {
                const double g = -half + static_cast<double>(k);
                if (ux != 0.0) {
                    const double a = (g - px) / ux;
                    if (a > lo && a < hi) alphas.push_back(a);
                }
                if (uy != 0.0) {
                    const double a = (g - py) / uy;
                    if (a > lo && a < hi) alphas.push_back(a);
                }
            }
            std::sort(alphas.begin(), alphas.end());

            bool any = false;
            for (std::size_t k = 0; k + 1 < alphas.size(); ++k) {
                const double len = alphas[k + 1] - alphas[k];
                if (len < eps)
                    continue;
                const double am = 0.5 * (alphas[k] + alphas[k + 1]);
                const double x = px + am * ux, y = py + am * uy;
                const auto j = static_cast<std::int64_t>(std::floor(x + half));
                const auto i = static_cast<std::int64_t>(std::floor(half - y));
                if (j < 0 || i < 0 || j >= static_cast<std::int64_t>(n) || i >= static_cast<std::int64_t>(n))
                    continue;
                trips.emplace_back(row, j * static_cast<std::int64_t>(n) + i, len);
                any = true;
            }
            if (any) {
                out.angle_of.push_back(ia);
                out.ray_of.push_back(ir);
                ++row;
            }
        }
    }
    out.rows.resize(row, static_cast<std::int64_t>(n * n));
    out.rows.setFromTriplets(trips.begin(), trips.end());
    out.rows.makeCompressed();
    return out;
}

TomographyProblem build_tomography(std::size_t n, std::size_t n_angles, std::size_t n_rays) {
    TomographyProblem prob;
    prob.n = n;
    prob.n_angles = n_angles;
    prob.n_rays = n_rays;
    RayMatrix rm = parallel_beam(n, default_angles(n_angles), n_rays);
    prob.op = std::make_shared<SparseBlockOperator>(std::move(rm.rows));
    prob.phantom = shepp_logan(n);
    prob.y = prob.op->apply_all(prob.phantom);
    return prob;
}

}  // namespace smd
