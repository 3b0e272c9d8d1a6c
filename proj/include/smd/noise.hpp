#pragma once

#include "smd/operators.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace smd {

enum class NoiseModel { gaussian, uniform };

std::string to_string(NoiseModel model);

struct NoiseSpec {
    NoiseModel model = NoiseModel::gaussian;
    double delta_rel = 0.0;
    std::uint64_t seed = 0;
};

struct NoisyData {
    Vector y;
    Vector block_noise;   // delta_i
    double total = 0.0;   // sqrt(sum delta_i^2)
};

// y^delta_j = y_j + delta_rel |y_j| eps_j with eps standard normal or uniform
// on [-1, 1]. A block's level is the Euclidean norm of delta_rel |y_j| over its
// entries (delta_rel |y_i| for scalar blocks).
NoisyData corrupt(const Vector& y, const std::vector<std::size_t>& block_dims, const NoiseSpec& spec);

// scalar blocks
NoisyData corrupt(const Vector& y, const NoiseSpec& spec);

// Gaussian direction scaled to total norm exactly `delta`; delta_i = |e_i| per scalar entry
// aggregated over blocks.
NoisyData corrupt_absolute(const Vector& y, const std::vector<std::size_t>& block_dims, double delta,
                           std::uint64_t seed);

// E[delta_I^2] = (b / p) delta^2 for uniformly drawn size-b batches
double expected_batch_noise(const Vector& block_noise, std::size_t b);

}  // namespace smd
