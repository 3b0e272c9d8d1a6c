#pragma once

#include "smd/operators.hpp"

#include <memory>
#include <vector>

namespace smd {

//
// 2D parallel-beam geometry on an n x n grid of unit pixels centred at the
// origin. Angle theta (degrees) sends rays along (sin theta, -cos theta) at
// offsets s * (cos theta, sin theta), s equispaced over [-d/2, d/2] with
// d = sqrt(2) n, so 90 degrees gives horizontal rays. Pixel (row i from the
// top, column j) has index j n + i (columns stacked).
//
struct Ellipse {
    double value, a, b, x0, y0, phi_deg;
};

// modified (high contrast) Shepp-Logan ellipses on [-1, 1]^2
const std::vector<Ellipse>& shepp_logan_ellipses();

// pixel-centre rasterization, column-stacked, clamped to be nonnegative
Vector rasterize(std::size_t n, const std::vector<Ellipse>& ellipses);
Vector shepp_logan(std::size_t n);

struct RayMatrix {
    SparseRowMatrix rows;               // intersection lengths, zero rows removed
    std::vector<std::size_t> angle_of;  // angle index of each retained row
    std::vector<std::size_t> ray_of;    // ray index of each retained row
};

// n >= 8
RayMatrix parallel_beam(std::size_t n, const std::vector<double>& angles_deg, std::size_t n_rays);

// 1 + 180 k / n_angles degrees, k = 0 .. n_angles - 1 (90 angles: 1, 3, ..., 179)
std::vector<double> default_angles(std::size_t n_angles);

struct TomographyProblem {
    std::size_t n = 0, n_angles = 0, n_rays = 0;
    std::shared_ptr<const SparseBlockOperator> op;
    Vector phantom;
    Vector y;
};

TomographyProblem build_tomography(std::size_t n, std::size_t n_angles, std::size_t n_rays);

}  // namespace smd
