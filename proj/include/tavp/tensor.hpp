#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "tavp/common.hpp"
#include "tavp/rng.hpp"

namespace tavp {

using Shape = std::vector<int64_t>;

int64_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

/// One value node of the autograd graph. Holds the forward buffer and, after
/// backward, the accumulated adjoint. Parents + backward_fn form the tape.
struct Node {
    Shape shape;
    std::vector<double> data;
    bool requires_grad = false;
    std::vector<double> grad; // same length as data once touched
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn; // reads grad, accumulates into parents
    bool backward_done = false;
    const char* op = "leaf";

    int64_t numel() const { return static_cast<int64_t>(data.size()); }
    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
    }
};

} // namespace detail

/// Dense n-dimensional array (row-major) with reverse-mode autodiff.
/// Value-semantics handle: copying a Tensor shares the underlying node.
/// Forward ops never mutate their inputs; gradients accumulate only during a
/// single-threaded backward pass.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor from_vector(Shape shape, std::vector<double> values, bool requires_grad = false);
    static Tensor randn(Shape shape, Rng& rng, double stddev = 1.0, bool requires_grad = false);
    static Tensor rand_uniform(Shape shape, Rng& rng, double lo, double hi, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    int64_t dim() const { return static_cast<int64_t>(node_->shape.size()); }
    int64_t size(int64_t axis) const;
    int64_t numel() const { return node_->numel(); }

    std::span<const double> data() const { return node_->data; }
    /// Direct write access to a leaf's buffer (parameter updates between
    /// graph executions). Must not be called on op outputs.
    std::span<double> mutable_data();

    double item() const;
    double at(std::initializer_list<int64_t> idx) const;

    bool requires_grad() const { return node_->requires_grad; }
    Tensor& set_requires_grad(bool flag);

    bool has_grad() const { return node_ && !node_->grad.empty(); }
    std::span<const double> grad_data() const;
    Tensor grad() const; // copy of the gradient as a plain tensor
    void zero_grad();

    /// Leaf copy of the values, detached from the graph.
    Tensor detach() const;

    const char* op_name() const { return node_->op; }

    std::shared_ptr<detail::Node> node() const { return node_; }
    explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

private:
    std::shared_ptr<detail::Node> node_;
};

/// Run reverse-mode accumulation from a scalar root. Visits each node exactly
/// once in reverse topological order. Calling it a second time on the same
/// graph (without re-running the forward) raises NumericError.
void backward(const Tensor& root);

// ---- shape / layout ops -------------------------------------------------

Tensor reshape(const Tensor& x, Shape new_shape);
Tensor permute(const Tensor& x, const std::vector<int64_t>& axes);
Tensor transpose(const Tensor& x, int64_t axis_a, int64_t axis_b);
Tensor slice(const Tensor& x, int64_t axis, int64_t start, int64_t length);
Tensor concat(const std::vector<Tensor>& parts, int64_t axis);

// ---- elementwise ---------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b); // numpy-style broadcasting
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add_scalar(const Tensor& x, double c);
Tensor mul_scalar(const Tensor& x, double c);
Tensor neg(const Tensor& x);
Tensor abs(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor relu(const Tensor& x);
/// GELU, tanh approximation:
///   0.5 * x * (1 + tanh(sqrt(2/pi) * (x + 0.044715 * x^3)))
/// with sqrt(2/pi) = 0.7978845608028654.
Tensor gelu(const Tensor& x);
/// Elementwise Smooth-L1 of (a - b): 0.5*d^2 for |d| < 1, |d| - 0.5 otherwise.
Tensor smooth_l1(const Tensor& a, const Tensor& b);

Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(const Tensor& a, const Tensor& b);

// ---- reductions ----------------------------------------------------------

Tensor sum_all(const Tensor& x);
Tensor mean_all(const Tensor& x);
Tensor sum_axis(const Tensor& x, int64_t axis);  // removes the axis
Tensor mean_axis(const Tensor& x, int64_t axis); // removes the axis

// ---- linear algebra ------------------------------------------------------

/// Batched matrix product a[..., m, k] * b[..., k, n] -> [..., m, n].
/// Leading batch extents broadcast.
Tensor matmul(const Tensor& a, const Tensor& b);

// ---- convolution / pooling ----------------------------------------------

/// Cross-correlation convention (no kernel flip).
/// x: [B, Cin, H, W], k: [Cout, Cin, kh, kw] -> [B, Cout, H', W']
/// H' = floor((H + 2p - kh) / stride) + 1.
Tensor conv2d(const Tensor& x, const Tensor& k, int64_t stride, int64_t padding);

/// Adjoint of conv2d with the same parameters.
/// x: [B, Cin, h, w], k: [Cin, Cout, kh, kw] -> [B, Cout, Ho, Wo]
/// Ho = (h - 1) * stride - 2p + kh.
Tensor conv_transpose2d(const Tensor& x, const Tensor& k, int64_t stride, int64_t padding);

Tensor avg_pool2d(const Tensor& x, int64_t kernel, int64_t stride);

// ---- normalization / attention math ---------------------------------------

/// Numerically stabilized softmax along `axis` (max subtraction mandatory).
Tensor softmax(const Tensor& x, int64_t axis);

/// Softmax along the last axis where entries with mask == 0 get probability
/// exactly 0. `mask` has a shape broadcastable against trailing dims of x.
/// Masked positions never enter the normalization, so no non-finite value is
/// ever stored.
Tensor masked_softmax(const Tensor& x, const Tensor& mask);

/// Layer normalization over `axis`, then affine with gamma/beta (1-d tensors
/// of the axis extent). Mean/variance use the biased 1/n estimator; eps sits
/// inside the square root.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  int64_t axis, double eps = 1e-5);

} // namespace tavp
