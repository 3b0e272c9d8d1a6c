#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

namespace smd {

using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, std::int64_t>;

//
// A sorted set of distinct block indices (0-based).
//
class BatchIndexSet {
public:
    BatchIndexSet() = default;

    // throws std::invalid_argument unless indices are non-empty and strictly increasing
    explicit BatchIndexSet(std::vector<std::size_t> indices);

    static BatchIndexSet single(std::size_t i) { return BatchIndexSet({i}); }
    static BatchIndexSet all(std::size_t p);

    std::size_t size() const noexcept { return indices_.size(); }
    bool empty() const noexcept { return indices_.empty(); }
    std::size_t operator[](std::size_t k) const { return indices_[k]; }
    const std::vector<std::size_t>& indices() const noexcept { return indices_; }

    auto begin() const noexcept { return indices_.begin(); }
    auto end() const noexcept { return indices_.end(); }

    bool contains(std::size_t i) const;

    friend bool operator==(const BatchIndexSet&, const BatchIndexSet&) = default;
    friend auto operator<=>(const BatchIndexSet& a, const BatchIndexSet& b) { return a.indices_ <=> b.indices_; }

private:
    std::vector<std::size_t> indices_;
};

struct NormEstimate {
    double value = 0.0;   // (1 + tol) * converged Rayleigh root
    std::size_t iterations = 0;
    bool stale = false;   // max_iters exhausted before tol was met
};

enum class StorageKind : std::uint8_t { dense = 0, sparse = 1, composite = 2 };

//
// Stacked forward map A = (A_1, ..., A_p), A_i : R^m -> R^{d_i}.
//
// Immutable after construction apart from the norm memo, which is guarded
// by a mutex so one operator can be shared by concurrent engines.
//
class BlockOperator {
public:
    BlockOperator(std::size_t input_dim, std::vector<std::size_t> block_dims);
    virtual ~BlockOperator() = default;

    BlockOperator(const BlockOperator&) = delete;
    BlockOperator& operator=(const BlockOperator&) = delete;

    std::size_t num_blocks() const noexcept { return block_dims_.size(); }
    std::size_t input_dim() const noexcept { return input_dim_; }
    std::size_t block_dim(std::size_t i) const { return block_dims_.at(i); }
    std::size_t block_offset(std::size_t i) const { return offsets_.at(i); }
    const std::vector<std::size_t>& block_dims() const noexcept { return block_dims_; }

    // total output dimension, sum of all d_i
    std::size_t output_dim() const noexcept { return offsets_.back(); }

    // sum of d_i over i in I
    std::size_t batch_dim(const BatchIndexSet& I) const;

    virtual StorageKind storage() const noexcept = 0;

    // (A_i x)_{i in I}, concatenated in index order
    Vector apply(const BatchIndexSet& I, const Vector& x) const;

    // sum_{i in I} A_i^T u_i
    Vector adjoint(const BatchIndexSet& I, const Vector& u) const;

    // full forward map over all blocks
    Vector apply_all(const Vector& x) const;
    Vector adjoint_all(const Vector& u) const;

    // Upper estimate of ||A_I|| from (R^m, weighted l2) to Euclidean R^{d_I}.
    // An empty weight vector means the plain Euclidean norm on R^m.
    NormEstimate estimate_norm(const BatchIndexSet& I, double tol = 1e-6, std::size_t max_iters = 2000,
                               const Vector& primal_weights = {}) const;

    // ||A_I e_j||_2 for every column j
    virtual Vector column_norms(const BatchIndexSet& I) const;

    // Block-level kernels; `out`/`u` are views with exactly d_i entries.
    virtual void apply_block(std::size_t i, const Vector& x, std::span<double> out) const = 0;
    virtual void adjoint_block_add(std::size_t i, std::span<const double> u, Vector& out) const = 0;

protected:
    void check_batch(const BatchIndexSet& I) const;

private:
    std::size_t input_dim_;
    std::vector<std::size_t> block_dims_;
    std::vector<std::size_t> offsets_;

    struct CacheKey {
        std::vector<std::size_t> indices;
        std::uint64_t weights_hash;
        double tol;
        std::size_t max_iters;
        auto operator<=>(const CacheKey&) const = default;
    };
    mutable std::mutex cache_mutex_;
    mutable std::map<CacheKey, NormEstimate> norm_cache_;
};

//
// Dense blocks formed by consecutive rows of one row-major matrix.
//
class DenseBlockOperator final : public BlockOperator {
public:
    // One block per row.
    explicit DenseBlockOperator(RowMatrix rows);
    DenseBlockOperator(RowMatrix rows, std::vector<std::size_t> block_dims);

    StorageKind storage() const noexcept override { return StorageKind::dense; }
    const RowMatrix& matrix() const noexcept { return rows_; }

    void apply_block(std::size_t i, const Vector& x, std::span<double> out) const override;
    void adjoint_block_add(std::size_t i, std::span<const double> u, Vector& out) const override;
    Vector column_norms(const BatchIndexSet& I) const override;

private:
    RowMatrix rows_;
};

//
// Sparse row storage (row triples); used for tomography.
//
class SparseBlockOperator final : public BlockOperator {
public:
    explicit SparseBlockOperator(SparseRowMatrix rows);
    SparseBlockOperator(SparseRowMatrix rows, std::vector<std::size_t> block_dims);

    StorageKind storage() const noexcept override { return StorageKind::sparse; }
    const SparseRowMatrix& matrix() const noexcept { return rows_; }

    void apply_block(std::size_t i, const Vector& x, std::span<double> out) const override;
    void adjoint_block_add(std::size_t i, std::span<const double> u, Vector& out) const override;
    Vector column_norms(const BatchIndexSet& I) const override;

private:
    SparseRowMatrix rows_;
};

// Binary container; layout in docs/operator_format.md.
void save_operator(const BlockOperator& op, const std::filesystem::path& path);
std::unique_ptr<BlockOperator> load_operator(const std::filesystem::path& path);

}  // namespace smd
