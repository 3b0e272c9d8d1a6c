#include "smd/operators.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>

namespace smd {

BatchIndexSet::BatchIndexSet(std::vector<std::size_t> indices) : indices_(std::move(indices)) {
    if (indices_.empty())
        throw std::invalid_argument("BatchIndexSet: empty index set");
    for (std::size_t k = 1; k < indices_.size(); ++k)
        if (indices_[k] <= indices_[k - 1])
            throw std::invalid_argument("BatchIndexSet: indices must be strictly increasing");
}

BatchIndexSet BatchIndexSet::all(std::size_t p) {
    std::vector<std::size_t> idx(p);
    for (std::size_t i = 0; i < p; ++i)
        idx[i] = i;
    return BatchIndexSet(std::move(idx));
}

bool BatchIndexSet::contains(std::size_t i) const {
    return std::binary_search(indices_.begin(), indices_.end(), i);
}

BlockOperator::BlockOperator(std::size_t input_dim, std::vector<std::size_t> block_dims)
    : input_dim_(input_dim), block_dims_(std::move(block_dims)) {
    if (block_dims_.empty())
        throw std::invalid_argument("BlockOperator: at least one block required");
    offsets_.resize(block_dims_.size() + 1, 0);
    for (std::size_t i = 0; i < block_dims_.size(); ++i) {
        if (block_dims_[i] == 0)
            throw std::invalid_argument("BlockOperator: block dimension must be positive");
        offsets_[i + 1] = offsets_[i] + block_dims_[i];
    }
}

void BlockOperator::check_batch(const BatchIndexSet& I) const {
    if (I.empty())
        throw std::invalid_argument("empty batch");
    if (I.indices().back() >= num_blocks())
        throw std::invalid_argument("batch index " + std::to_string(I.indices().back()) + " out of range (p = " +
                                    std::to_string(num_blocks()) + ")");
}

std::size_t BlockOperator::batch_dim(const BatchIndexSet& I) const {
    check_batch(I);
    std::size_t d = 0;
    for (auto i : I)
        d += block_dims_[i];
    return d;
}

Vector BlockOperator::apply(const BatchIndexSet& I, const Vector& x) const {
    if (static_cast<std::size_t>(x.size()) != input_dim_)
        throw std::invalid_argument("apply: input has length " + std::to_string(x.size()) + ", expected " +
                                    std::to_string(input_dim_));
    Vector out(static_cast<Eigen::Index>(batch_dim(I)));
    std::size_t pos = 0;
    for (auto i : I) {
        apply_block(i, x, std::span<double>(out.data() + pos, block_dims_[i]));
        pos += block_dims_[i];
    }
    return out;
}

Vector BlockOperator::adjoint(const BatchIndexSet& I, const Vector& u) const {
    if (static_cast<std::size_t>(u.size()) != batch_dim(I))
        throw std::invalid_argument("adjoint: data vector has length " + std::to_string(u.size()) + ", expected " +
                                    std::to_string(batch_dim(I)));
    Vector out = Vector::Zero(static_cast<Eigen::Index>(input_dim_));
    std::size_t pos = 0;
    for (auto i : I) {
        adjoint_block_add(i, std::span<const double>(u.data() + pos, block_dims_[i]), out);
        pos += block_dims_[i];
    }
    return out;
}

Vector BlockOperator::apply_all(const Vector& x) const {
    return apply(BatchIndexSet::all(num_blocks()), x);
}

Vector BlockOperator::adjoint_all(const Vector& u) const {
    return adjoint(BatchIndexSet::all(num_blocks()), u);
}

Vector BlockOperator::column_norms(const BatchIndexSet& I) const {
    Vector norms(static_cast<Eigen::Index>(input_dim_));
    Vector e = Vector::Zero(static_cast<Eigen::Index>(input_dim_));
    for (std::size_t j = 0; j < input_dim_; ++j) {
        e[j] = 1.0;
        norms[j] = apply(I, e).norm();
        e[j] = 0.0;
    }
    return norms;
}

namespace {

std::uint64_t fingerprint(const Vector& w) {
    // FNV-1a over the raw bytes; empty vector maps to 0
    if (w.size() == 0)
        return 0;
    std::uint64_t h = 1469598103934665603ull;
    const auto* bytes = reinterpret_cast<const unsigned char*>(w.data());
    for (std::size_t k = 0; k < static_cast<std::size_t>(w.size()) * sizeof(double); ++k) {
        h ^= bytes[k];
        h *= 1099511628211ull;
    }
    return h | 1u;
}

}  // namespace

NormEstimate BlockOperator::estimate_norm(const BatchIndexSet& I, double tol, std::size_t max_iters,
                                          const Vector& primal_weights) const {
    if (!(tol > 0.0))
        throw std::invalid_argument("estimate_norm: tol must be positive");
    check_batch(I);
    const bool weighted = primal_weights.size() != 0;
    if (weighted && static_cast<std::size_t>(primal_weights.size()) != input_dim_)
        throw std::invalid_argument("estimate_norm: weight vector has wrong length");

    CacheKey key{I.indices(), fingerprint(primal_weights), tol, max_iters};
    {
        std::lock_guard lock(cache_mutex_);
        if (auto it = norm_cache_.find(key); it != norm_cache_.end())
            return it->second;
    }

    Vector inv_sqrt_w;
    if (weighted)
        inv_sqrt_w = primal_weights.cwiseSqrt().cwiseInverse();

    std::mt19937_64 rng(0x5eed5eedull);
    std::normal_distribution<double> normal;
    Vector v(static_cast<Eigen::Index>(input_dim_));
    for (auto& vi : v)
        vi = normal(rng);
    v.normalize();

    NormEstimate est;
    double prev = -1.0;
    bool converged = false;
    for (std::size_t k = 0; k < max_iters; ++k) {
        Vector scaled = weighted ? Vector(v.cwiseProduct(inv_sqrt_w)) : v;
        Vector u = apply(I, scaled);
        const double root = u.norm();  // ||A v|| with ||v|| = 1
        est.iterations = k + 1;
        if (root == 0.0) {
            // v lies in the null space; A_I is zero unless v was unlucky, which
            // the fixed start makes reproducible either way
            prev = 0.0;
            converged = true;
            break;
        }
        Vector w = adjoint(I, u);
        if (weighted)
            w = w.cwiseProduct(inv_sqrt_w);
        if (prev >= 0.0 && std::abs(root - prev) <= 1e-2 * tol * root) {
            prev = root;
            converged = true;
            break;
        }
        prev = root;
        const double wn = w.norm();
        if (wn == 0.0) {
            converged = true;
            break;
        }
        v = w / wn;
    }
    est.value = (1.0 + tol) * std::max(prev, 0.0);
    est.stale = !converged;

    std::lock_guard lock(cache_mutex_);
    norm_cache_.emplace(std::move(key), est);
    return est;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::size_t> unit_blocks(Eigen::Index rows) {
    return std::vector<std::size_t>(static_cast<std::size_t>(rows), 1);
}

void check_row_total(const std::vector<std::size_t>& dims, Eigen::Index rows) {
    std::size_t total = 0;
    for (auto d : dims)
        total += d;
    if (total != static_cast<std::size_t>(rows))
        throw std::invalid_argument("block dimensions do not sum to the number of rows");
}

}  // namespace

DenseBlockOperator::DenseBlockOperator(RowMatrix rows)
    : DenseBlockOperator(std::move(rows), {}) {}

DenseBlockOperator::DenseBlockOperator(RowMatrix rows, std::vector<std::size_t> block_dims)
    : BlockOperator(static_cast<std::size_t>(rows.cols()),
                    block_dims.empty() ? unit_blocks(rows.rows()) : block_dims),
      rows_(std::move(rows)) {
    check_row_total(this->block_dims(), rows_.rows());
}

void DenseBlockOperator::apply_block(std::size_t i, const Vector& x, std::span<double> out) const {
    const auto off = static_cast<Eigen::Index>(block_offset(i));
    for (std::size_t r = 0; r < out.size(); ++r)
        out[r] = rows_.row(off + static_cast<Eigen::Index>(r)).dot(x);
}

void DenseBlockOperator::adjoint_block_add(std::size_t i, std::span<const double> u, Vector& out) const {
    const auto off = static_cast<Eigen::Index>(block_offset(i));
    for (std::size_t r = 0; r < u.size(); ++r)
        out += u[r] * rows_.row(off + static_cast<Eigen::Index>(r)).transpose();
}

Vector DenseBlockOperator::column_norms(const BatchIndexSet& I) const {
    check_batch(I);
    Vector sq = Vector::Zero(rows_.cols());
    for (auto i : I) {
        const auto off = static_cast<Eigen::Index>(block_offset(i));
        for (std::size_t r = 0; r < block_dim(i); ++r)
            sq += rows_.row(off + static_cast<Eigen::Index>(r)).transpose().cwiseAbs2();
    }
    return sq.cwiseSqrt();
}

SparseBlockOperator::SparseBlockOperator(SparseRowMatrix rows)
    : SparseBlockOperator(std::move(rows), {}) {}

SparseBlockOperator::SparseBlockOperator(SparseRowMatrix rows, std::vector<std::size_t> block_dims)
    : BlockOperator(static_cast<std::size_t>(rows.cols()),
                    block_dims.empty() ? unit_blocks(rows.rows()) : block_dims),
      rows_(std::move(rows)) {
    check_row_total(this->block_dims(), rows_.rows());
    rows_.makeCompressed();
}

void SparseBlockOperator::apply_block(std::size_t i, const Vector& x, std::span<double> out) const {
    const auto off = static_cast<Eigen::Index>(block_offset(i));
    for (std::size_t r = 0; r < out.size(); ++r) {
        double s = 0.0;
        for (SparseRowMatrix::InnerIterator it(rows_, off + static_cast<Eigen::Index>(r)); it; ++it)
            s += it.value() * x[it.col()];
        out[r] = s;
    }
}

void SparseBlockOperator::adjoint_block_add(std::size_t i, std::span<const double> u, Vector& out) const {
    const auto off = static_cast<Eigen::Index>(block_offset(i));
    for (std::size_t r = 0; r < u.size(); ++r)
        for (SparseRowMatrix::InnerIterator it(rows_, off + static_cast<Eigen::Index>(r)); it; ++it)
            out[it.col()] += u[r] * it.value();
}

Vector SparseBlockOperator::column_norms(const BatchIndexSet& I) const {
    check_batch(I);
    Vector sq = Vector::Zero(rows_.cols());
    for (auto i : I) {
        const auto off = static_cast<Eigen::Index>(block_offset(i));
        for (std::size_t r = 0; r < block_dim(i); ++r)
            for (SparseRowMatrix::InnerIterator it(rows_, off + static_cast<Eigen::Index>(r)); it; ++it)
                sq[it.col()] += it.value() * it.value();
    }
    return sq.cwiseSqrt();
}

// ---------------------------------------------------------------------------
// Binary container

namespace {

constexpr char kMagic[8] = {'S', 'M', 'D', 'O', 'P', '0', '1', '\0'};

static_assert(std::endian::native == std::endian::little, "operator container assumes a little-endian host");

template <typename T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is)
        throw std::runtime_error("load_operator: truncated file");
    return v;
}

}  // namespace

void save_operator(const BlockOperator& op, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os)
        throw std::runtime_error("save_operator: cannot open " + path.string());
    os.write(kMagic, sizeof(kMagic));
    put<std::uint64_t>(os, op.num_blocks());
    put<std::uint64_t>(os, op.input_dim());
    put<std::uint8_t>(os, static_cast<std::uint8_t>(op.storage()));
    for (auto d : op.block_dims())
        put<std::uint64_t>(os, d);

    if (const auto* dense = dynamic_cast<const DenseBlockOperator*>(&op)) {
        const auto& M = dense->matrix();
        os.write(reinterpret_cast<const char*>(M.data()),
                 static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(M.size())));
    } else if (const auto* sparse = dynamic_cast<const SparseBlockOperator*>(&op)) {
        const auto& M = sparse->matrix();
        put<std::uint64_t>(os, static_cast<std::uint64_t>(M.nonZeros()));
        for (Eigen::Index r = 0; r <= M.rows(); ++r)
            put<std::uint64_t>(os, static_cast<std::uint64_t>(M.outerIndexPtr()[r]));
        for (Eigen::Index k = 0; k < M.nonZeros(); ++k)
            put<std::uint64_t>(os, static_cast<std::uint64_t>(M.innerIndexPtr()[k]));
        os.write(reinterpret_cast<const char*>(M.valuePtr()),
                 static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(M.nonZeros())));
    } else {
        throw std::invalid_argument("save_operator: only dense and sparse operators are serializable");
    }
    if (!os)
        throw std::runtime_error("save_operator: write failed for " + path.string());
}

std::unique_ptr<BlockOperator> load_operator(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw std::runtime_error("load_operator: cannot open " + path.string());
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(magic)) != 0)
        throw std::runtime_error("load_operator: bad magic in " + path.string());
    const auto p = get<std::uint64_t>(is);
    const auto m = get<std::uint64_t>(is);
    const auto kind = static_cast<StorageKind>(get<std::uint8_t>(is));
    std::vector<std::size_t> dims(p);
    std::uint64_t rows = 0;
    for (auto& d : dims) {
        d = get<std::uint64_t>(is);
        rows += d;
    }

    if (kind == StorageKind::dense) {
        RowMatrix M(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(m));
        is.read(reinterpret_cast<char*>(M.data()),
                static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(M.size())));
        if (!is)
            throw std::runtime_error("load_operator: truncated dense payload");
        return std::make_unique<DenseBlockOperator>(std::move(M), std::move(dims));
    }
    if (kind == StorageKind::sparse) {
        const auto nnz = get<std::uint64_t>(is);
        std::vector<std::uint64_t> outer(rows + 1), inner(nnz);
        for (auto& o : outer)
            o = get<std::uint64_t>(is);
        for (auto& c : inner)
            c = get<std::uint64_t>(is);
        std::vector<double> values(nnz);
        is.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(sizeof(double) * nnz));
        if (!is)
            throw std::runtime_error("load_operator: truncated sparse payload");
        std::vector<Eigen::Triplet<double, std::int64_t>> trip;
        trip.reserve(nnz);
        for (std::uint64_t r = 0; r < rows; ++r)
            for (auto k = outer[r]; k < outer[r + 1]; ++k)
                trip.emplace_back(static_cast<std::int64_t>(r), static_cast<std::int64_t>(inner[k]), values[k]);
        SparseRowMatrix M(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(m));
        M.setFromTriplets(trip.begin(), trip.end());
        return std::make_unique<SparseBlockOperator>(std::move(M), std::move(dims));
    }
    throw std::runtime_error("load_operator: unsupported storage kind");
}

}  // namespace smd
