#pragma once

#include "smd/operators.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace smd {

enum class SamplerKind { uniform, cyclic, replay };

// Batch selection for iteration n.
//
//   uniform: every size-b subset of {0..p-1} with probability 1/C(p,b)
//            (partial Fisher-Yates over a persistent permutation, then sort)
//   cyclic : {n mod p}
//   replay : the n-th entry of a recorded path
class Sampler {
public:
    static Sampler uniform(std::size_t p, std::size_t b, std::uint64_t seed);
    static Sampler cyclic(std::size_t p);
    static Sampler replay(std::vector<BatchIndexSet> path);

    SamplerKind kind() const noexcept { return kind_; }
    std::size_t num_blocks() const noexcept { return p_; }
    std::size_t batch_size() const noexcept { return b_; }

    BatchIndexSet next(std::size_t n);

private:
    Sampler() = default;

    SamplerKind kind_ = SamplerKind::uniform;
    std::size_t p_ = 0;
    std::size_t b_ = 1;
    std::mt19937_64 rng_;
    std::vector<std::size_t> perm_;
    std::vector<BatchIndexSet> path_;
};

}  // namespace smd
