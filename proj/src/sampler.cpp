#include "smd/sampler.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace smd {

Sampler Sampler::uniform(std::size_t p, std::size_t b, std::uint64_t seed) {
    if (p == 0)
        throw std::invalid_argument("sampler: p must be positive");
    if (b == 0 || b > p)
        throw std::invalid_argument("sampler: batch size must satisfy 1 <= b <= p");
    Sampler s;
    s.kind_ = SamplerKind::uniform;
    s.p_ = p;
    s.b_ = b;
    s.rng_.seed(seed);
    s.perm_.resize(p);
    std::iota(s.perm_.begin(), s.perm_.end(), std::size_t{0});
    return s;
}

Sampler Sampler::cyclic(std::size_t p) {
    if (p == 0)
        throw std::invalid_argument("sampler: p must be positive");
    Sampler s;
    s.kind_ = SamplerKind::cyclic;
    s.p_ = p;
    s.b_ = 1;
    return s;
}

Sampler Sampler::replay(std::vector<BatchIndexSet> path) {
    if (path.empty())
        throw std::invalid_argument("sampler: empty replay path");
    Sampler s;
    s.kind_ = SamplerKind::replay;
    s.b_ = path.front().size();
    for (const auto& I : path)
        s.p_ = std::max(s.p_, I.indices().back() + 1);
    s.path_ = std::move(path);
    return s;
}

BatchIndexSet Sampler::next(std::size_t n) {
    switch (kind_) {
    case SamplerKind::cyclic: return BatchIndexSet::single(n % p_);
    case SamplerKind::replay:
        if (n >= path_.size())
            throw std::out_of_range("sampler: replay path exhausted");
        return path_[n];
    case SamplerKind::uniform: break;
    }
    if (b_ == p_)
        return BatchIndexSet::all(p_);
    // the first b slots of a partial shuffle are a uniform b-subset whatever
    // order the permutation was left in by earlier draws
    for (std::size_t k = 0; k < b_; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, p_ - 1);
        std::swap(perm_[k], perm_[pick(rng_)]);
    }
    std::vector<std::size_t> chosen(perm_.begin(), perm_.begin() + static_cast<std::ptrdiff_t>(b_));
    std::sort(chosen.begin(), chosen.end());
    return BatchIndexSet(std::move(chosen));
}

}  // namespace smd
