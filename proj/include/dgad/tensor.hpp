#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace dgad {

inline constexpr double kMasked = -std::numeric_limits<double>::infinity();

namespace detail {

struct Node {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;
    std::vector<double> grad;  // allocated iff requires_grad
    bool requires_grad = false;
    std::uint64_t seq = 0;     // creation order; reverse order is a valid replay order
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn;  // empty for leaves

    bool is_leaf() const { return !backward_fn; }
};

}  // namespace detail

/// Dense row-major matrix of doubles that records the operations producing it
/// so that gradients can be replayed in reverse.
///
/// Every tensor is two-dimensional: scalars are 1x1, vectors are 1xk rows.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(std::size_t rows, std::size_t cols, bool requires_grad = false);
    static Tensor full(std::size_t rows, std::size_t cols, double value, bool requires_grad = false);
    static Tensor from(std::size_t rows, std::size_t cols, std::vector<double> values,
                       bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);
    static Tensor row(std::vector<double> values, bool requires_grad = false);
    /// Additive attention mask; every entry must be 0 or kMasked.
    static Tensor mask(std::size_t rows, std::size_t cols, std::vector<double> values);

    bool defined() const { return node_ != nullptr; }
    std::size_t rows() const { return node_->rows; }
    std::size_t cols() const { return node_->cols; }
    std::size_t size() const { return node_->data.size(); }
    std::vector<std::size_t> shape() const { return {rows(), cols()}; }
    std::string shape_str() const;

    std::span<const double> data() const { return node_->data; }
    /// Direct write access; only for leaves (parameters, optimizer updates).
    std::span<double> mutable_data();
    double at(std::size_t r, std::size_t c) const { return node_->data[r * cols() + c]; }
    double item() const;

    bool requires_grad() const { return node_->requires_grad; }
    std::span<const double> grad() const { return node_->grad; }
    std::span<double> mutable_grad() { return node_->grad; }
    void zero_grad();

    /// Reverse-mode sweep from this scalar; accumulates into leaf grads.
    void backward() const;

    /// Same values, no history, no grad.
    Tensor detach() const;

    const std::shared_ptr<detail::Node>& node() const { return node_; }
    explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

private:
    std::shared_ptr<detail::Node> node_;
};

/// Reverse-topological record of the operations reachable from a scalar root.
class Tape {
public:
    static Tape record(const Tensor& root);

    /// Seeds d(root)/d(root) = 1 and runs every recorded adjoint once.
    void replay() const;

    std::size_t size() const { return order_.size(); }
    /// Creation sequence numbers in replay order (strictly decreasing).
    std::vector<std::uint64_t> replay_sequence() const;

private:
    Tensor root_;
    std::vector<std::shared_ptr<detail::Node>> order_;
};

/// Disables history recording on the current thread while alive.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

bool grad_enabled();

/// Gives the nodes built on this thread creation numbers from a private range.
/// Graphs built concurrently inside reserved blocks replay in block order, so
/// gradient accumulation does not depend on thread scheduling.
class SequenceBlock {
public:
    static constexpr std::uint64_t kSize = std::uint64_t{1} << 32;
    /// Reserves `count` consecutive blocks above every number issued so far;
    /// returns the first number of the first block.
    static std::uint64_t reserve(std::size_t count);

    explicit SequenceBlock(std::uint64_t first);
    ~SequenceBlock();
    SequenceBlock(const SequenceBlock&) = delete;
    SequenceBlock& operator=(const SequenceBlock&) = delete;

private:
    std::uint64_t next_;
    std::uint64_t* previous_;
};

// Primitives. Shape conventions are given per function; violations throw
// std::invalid_argument naming the primitive and both shapes. Non-finite
// results throw std::domain_error.

/// [m x k] * [k x n] -> [m x n]
Tensor matmul(const Tensor& a, const Tensor& b);
/// [n x m] -> [m x n]
Tensor transpose(const Tensor& a);
/// Same shape, or b is a [1 x n] row broadcast over a's rows.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
/// Elementwise product, same shape.
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double value);
Tensor neg(const Tensor& a);
/// Concatenation along columns; all parts share a row count.
Tensor concat_cols(std::span<const Tensor> parts);
/// Concatenation along rows; all parts share a column count.
Tensor concat_rows(std::span<const Tensor> parts);
Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t count);
/// out[r] = a[index[r]]
Tensor gather_rows(const Tensor& a, std::span<const std::size_t> index);
/// Row softmax after adding `mask` (same shape, entries 0 or kMasked). An
/// undefined mask means no masking.
Tensor row_softmax(const Tensor& a, const Tensor& mask = Tensor());
/// Per-row normalization followed by gamma * xhat + beta; gamma, beta are [1 x n].
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-9);
Tensor relu(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor expm1(const Tensor& a);
/// Clamps into [lo, hi]; gradient is zero where clamped.
Tensor clamp(const Tensor& a, double lo, double hi);
/// Sum of all entries -> [1 x 1]
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
/// Sum of squares of all entries -> [1 x 1]
Tensor squared_norm(const Tensor& a);
/// Cosine of two same-shape tensors viewed as flat vectors -> [1 x 1]. A
/// zero-norm operand yields 0.
Tensor cosine_similarity(const Tensor& a, const Tensor& b);
/// [m x k], [m x k] -> [m x 1] of per-row dot products
Tensor rowwise_dot(const Tensor& a, const Tensor& b);
/// Softmax of an [m x 1] column within groups given by `segment` (values < count).
Tensor segment_softmax(const Tensor& logits, std::span<const std::size_t> segment,
                       std::size_t count);
/// out[segment[r]] += x[r]  -> [count x k]
Tensor segment_sum(const Tensor& x, std::span<const std::size_t> segment, std::size_t count);
/// Multiplies row r of x [m x k] by w[r] ([m x 1]).
Tensor scale_rows(const Tensor& x, const Tensor& w);

}  // namespace dgad
