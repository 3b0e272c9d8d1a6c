#include "smd/noise.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace smd {

std::string to_string(NoiseModel model) {
    return model == NoiseModel::gaussian ? "gaussian" : "uniform";
}

namespace {

Vector block_levels(const Vector& per_entry_sq, const std::vector<std::size_t>& block_dims) {
    const std::size_t total = std::accumulate(block_dims.begin(), block_dims.end(), std::size_t{0});
    if (total != static_cast<std::size_t>(per_entry_sq.size()))
        throw std::invalid_argument("noise: block dimensions do not match the data length");
    Vector levels(static_cast<Eigen::Index>(block_dims.size()));
    Eigen::Index off = 0;
    for (std::size_t i = 0; i < block_dims.size(); ++i) {
        const auto d = static_cast<Eigen::Index>(block_dims[i]);
        levels[static_cast<Eigen::Index>(i)] = std::sqrt(per_entry_sq.segment(off, d).sum());
        off += d;
    }
    return levels;
}

}  // namespace

NoisyData corrupt(const Vector& y, const std::vector<std::size_t>& block_dims, const NoiseSpec& spec) {
    if (!(spec.delta_rel >= 0.0))
        throw std::invalid_argument("noise: delta_rel must be nonnegative");
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unif(-1.0, 1.0);

    NoisyData out;
    out.y = y;
    Vector sq(y.size());
    for (Eigen::Index j = 0; j < y.size(); ++j) {
        const double level = spec.delta_rel * std::abs(y[j]);
        const double eps = spec.model == NoiseModel::gaussian ? normal(rng) : unif(rng);
        out.y[j] += level * eps;
        sq[j] = level * level;
    }
    out.block_noise = block_levels(sq, block_dims);
    out.total = out.block_noise.norm();
    return out;
}

NoisyData corrupt(const Vector& y, const NoiseSpec& spec) {
    return corrupt(y, std::vector<std::size_t>(static_cast<std::size_t>(y.size()), 1), spec);
}

NoisyData corrupt_absolute(const Vector& y, const std::vector<std::size_t>& block_dims, double delta,
                           std::uint64_t seed) {
    if (!(delta >= 0.0))
        throw std::invalid_argument("noise: delta must be nonnegative");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Vector e(y.size());
    for (Eigen::Index j = 0; j < e.size(); ++j)
        e[j] = normal(rng);
    const double nrm = e.norm();
    if (nrm > 0.0)
        e *= delta / nrm;
    NoisyData out;
    out.y = y + e;
    out.block_noise = block_levels(e.cwiseAbs2(), block_dims);
    out.total = out.block_noise.norm();
    return out;
}

double expected_batch_noise(const Vector& block_noise, std::size_t b) {
    const auto p = static_cast<std::size_t>(block_noise.size());
    if (b == 0 || b > p)
        throw std::invalid_argument("expected_batch_noise: batch size must satisfy 1 <= b <= p");
    return static_cast<double>(b) * block_noise.squaredNorm() / static_cast<double>(p);
}

}  // namespace smd
