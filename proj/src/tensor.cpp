#include "tavp/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "tensor_internal.hpp"

namespace tavp {

namespace {

Dtype g_scalar_mode = Dtype::Float64;
bool g_grad_enabled = true;

} // namespace

Dtype scalar_mode() { return g_scalar_mode; }
void set_scalar_mode(Dtype mode) { g_scalar_mode = mode; }

NoGradGuard::NoGradGuard() : saved_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = saved_; }
bool grad_enabled() { return g_grad_enabled; }

int64_t shape_numel(const Shape& shape) {
    int64_t n = 1;
    for (int64_t e : shape) n *= e;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ",";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

namespace detail {

std::vector<int64_t> strides_of(const Shape& shape) {
    std::vector<int64_t> strides(shape.size());
    int64_t acc = 1;
    for (int64_t i = static_cast<int64_t>(shape.size()) - 1; i >= 0; --i) {
        strides[static_cast<size_t>(i)] = acc;
        acc *= shape[static_cast<size_t>(i)];
    }
    return strides;
}

void validate_shape(const Shape& shape) {
    for (int64_t e : shape) {
        if (e <= 0) throw ShapeError("tensor extents must be positive, got " + shape_str(shape));
    }
}

std::shared_ptr<Node> new_node(Shape shape, const char* op) {
    validate_shape(shape);
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->data.resize(static_cast<size_t>(shape_numel(node->shape)));
    node->op = op;
    return node;
}

// Rounds through float in Float32 mode and rejects non-finite results. Every
// op output passes through here before becoming visible.
void finalize(Node& node, const char* op) {
    if (g_scalar_mode == Dtype::Float32) {
        for (double& v : node.data) v = static_cast<double>(static_cast<float>(v));
    }
    for (double v : node.data) {
        if (!std::isfinite(v)) {
            throw NumericError(std::string("non-finite value produced by op '") + op + "'");
        }
    }
}

void attach(const std::shared_ptr<Node>& out, std::vector<std::shared_ptr<Node>> parents,
            std::function<void(Node&)> backward_fn) {
    finalize(*out, out->op);
    bool needs_grad = false;
    for (const auto& p : parents) {
        if (p->requires_grad) needs_grad = true;
    }
    if (g_grad_enabled && needs_grad) {
        out->requires_grad = true;
        out->parents = std::move(parents);
        out->backward_fn = std::move(backward_fn);
    }
}

} // namespace detail

using detail::attach;
using detail::new_node;
using detail::Node;
using detail::strides_of;

// ---- Tensor handle --------------------------------------------------------

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    auto node = new_node(std::move(shape), "leaf");
    node->requires_grad = g_grad_enabled && requires_grad;
    return Tensor(std::move(node));
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    auto node = new_node(std::move(shape), "leaf");
    std::fill(node->data.begin(), node->data.end(), value);
    detail::finalize(*node, "leaf");
    node->requires_grad = g_grad_enabled && requires_grad;
    return Tensor(std::move(node));
}

Tensor Tensor::from_vector(Shape shape, std::vector<double> values, bool requires_grad) {
    if (shape_numel(shape) != static_cast<int64_t>(values.size())) {
        throw ShapeError("from_vector: " + shape_str(shape) + " needs " +
                         std::to_string(shape_numel(shape)) + " values, got " +
                         std::to_string(values.size()));
    }
    auto node = new_node(std::move(shape), "leaf");
    node->data = std::move(values);
    detail::finalize(*node, "leaf");
    node->requires_grad = g_grad_enabled && requires_grad;
    return Tensor(std::move(node));
}

Tensor Tensor::randn(Shape shape, Rng& rng, double stddev, bool requires_grad) {
    auto node = new_node(std::move(shape), "leaf");
    for (double& v : node->data) v = rng.normal(0.0, stddev);
    detail::finalize(*node, "leaf");
    node->requires_grad = g_grad_enabled && requires_grad;
    return Tensor(std::move(node));
}

Tensor Tensor::rand_uniform(Shape shape, Rng& rng, double lo, double hi, bool requires_grad) {
    auto node = new_node(std::move(shape), "leaf");
    for (double& v : node->data) v = rng.uniform(lo, hi);
    detail::finalize(*node, "leaf");
    node->requires_grad = g_grad_enabled && requires_grad;
    return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return full(Shape{1}, value, requires_grad);
}

int64_t Tensor::size(int64_t axis) const {
    int64_t d = dim();
    if (axis < 0) axis += d;
    if (axis < 0 || axis >= d) throw ShapeError("size: axis out of range for " + shape_str(shape()));
    return node_->shape[static_cast<size_t>(axis)];
}

std::span<double> Tensor::mutable_data() {
    if (!node_->parents.empty() || node_->backward_fn) {
        throw NumericError("mutable_data is only valid on leaf tensors");
    }
    return node_->data;
}

double Tensor::item() const {
    if (numel() != 1) throw ShapeError("item: tensor " + shape_str(shape()) + " is not a scalar");
    return node_->data[0];
}

double Tensor::at(std::initializer_list<int64_t> idx) const {
    if (static_cast<int64_t>(idx.size()) != dim()) {
        throw ShapeError("at: rank mismatch for " + shape_str(shape()));
    }
    auto strides = strides_of(node_->shape);
    int64_t off = 0;
    size_t i = 0;
    for (int64_t v : idx) {
        if (v < 0 || v >= node_->shape[i]) throw ShapeError("at: index out of range");
        off += v * strides[i];
        ++i;
    }
    return node_->data[static_cast<size_t>(off)];
}

Tensor& Tensor::set_requires_grad(bool flag) {
    if (!node_->parents.empty() || node_->backward_fn) {
        throw NumericError("set_requires_grad is only valid on leaf tensors");
    }
    node_->requires_grad = flag;
    return *this;
}

std::span<const double> Tensor::grad_data() const {
    if (node_->grad.empty()) throw NumericError("tensor has no gradient (backward not run?)");
    return node_->grad;
}

Tensor Tensor::grad() const {
    if (node_->grad.empty()) throw NumericError("tensor has no gradient (backward not run?)");
    Tensor g = Tensor::zeros(node_->shape);
    std::copy(node_->grad.begin(), node_->grad.end(), g.node()->data.begin());
    return g;
}

void Tensor::zero_grad() { node_->grad.clear(); }

Tensor Tensor::detach() const {
    auto node = new_node(node_->shape, "leaf");
    node->data = node_->data;
    return Tensor(std::move(node));
}

// ---- backward -------------------------------------------------------------

void backward(const Tensor& root) {
    auto root_node = root.node();
    if (!root_node) throw NumericError("backward on undefined tensor");
    if (root_node->numel() != 1) {
        throw ShapeError("backward root must be scalar, got " + shape_str(root_node->shape));
    }
    if (!root_node->requires_grad) {
        throw NumericError("backward: root does not require grad");
    }
    if (root_node->backward_done) {
        throw NumericError("backward called twice on the same graph without re-running forward");
    }

    // Iterative post-order DFS. `seen` is a sorted pointer set.
    std::vector<Node*> topo;
    std::vector<std::pair<Node*, size_t>> stack;
    std::vector<Node*> seen_sorted;
    auto seen_insert = [&seen_sorted](Node* n) {
        auto it = std::lower_bound(seen_sorted.begin(), seen_sorted.end(), n);
        if (it != seen_sorted.end() && *it == n) return false;
        seen_sorted.insert(it, n);
        return true;
    };

    stack.emplace_back(root_node.get(), 0);
    seen_insert(root_node.get());
    while (!stack.empty()) {
        auto& [node, next_child] = stack.back();
        if (next_child < node->parents.size()) {
            Node* parent = node->parents[next_child].get();
            ++next_child;
            if (parent->requires_grad && seen_insert(parent)) {
                stack.emplace_back(parent, 0);
            }
        } else {
            topo.push_back(node);
            stack.pop_back();
        }
    }

    root_node->ensure_grad();
    std::fill(root_node->grad.begin(), root_node->grad.end(), 1.0);

    // topo is post-order: parents precede children, so walk back to front.
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        Node* node = *it;
        if (!node->backward_fn) continue;
        if (node->backward_done) {
            throw NumericError("backward called twice on the same graph without re-running forward");
        }
        if (node->grad.empty()) node->ensure_grad();
        node->backward_fn(*node);
        node->backward_done = true;
    }
}

// ---- shape / layout ops ----------------------------------------------------

Tensor reshape(const Tensor& x, Shape new_shape) {
    if (shape_numel(new_shape) != x.numel()) {
        throw ShapeError("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(new_shape));
    }
    auto out = new_node(std::move(new_shape), "reshape");
    out->data = std::vector<double>(x.data().begin(), x.data().end());
    auto xn = x.node();
    attach(out, {xn}, [xn](Node& o) {
        xn->ensure_grad();
        for (size_t i = 0; i < o.grad.size(); ++i) xn->grad[i] += o.grad[i];
    });
    return Tensor(out);
}

Tensor permute(const Tensor& x, const std::vector<int64_t>& axes) {
    int64_t d = x.dim();
    if (static_cast<int64_t>(axes.size()) != d) {
        throw ShapeError("permute: need " + std::to_string(d) + " axes for " + shape_str(x.shape()));
    }
    std::vector<bool> used(static_cast<size_t>(d), false);
    Shape out_shape(static_cast<size_t>(d));
    for (size_t i = 0; i < axes.size(); ++i) {
        int64_t a = axes[i];
        if (a < 0 || a >= d || used[static_cast<size_t>(a)]) {
            throw ShapeError("permute: invalid axis list");
        }
        used[static_cast<size_t>(a)] = true;
        out_shape[i] = x.shape()[static_cast<size_t>(a)];
    }
    auto out = new_node(out_shape, "permute");

    auto in_strides = strides_of(x.shape());
    // stride in the input for each output axis
    std::vector<int64_t> gather(static_cast<size_t>(d));
    for (size_t i = 0; i < axes.size(); ++i) gather[i] = in_strides[static_cast<size_t>(axes[i])];

    const auto src = x.data();
    std::vector<int64_t> idx(static_cast<size_t>(d), 0);
    int64_t src_off = 0;
    const int64_t n = x.numel();
    for (int64_t lin = 0; lin < n; ++lin) {
        out->data[static_cast<size_t>(lin)] = src[static_cast<size_t>(src_off)];
        for (int64_t a = d - 1; a >= 0; --a) {
            auto ai = static_cast<size_t>(a);
            if (++idx[ai] < out_shape[ai]) {
                src_off += gather[ai];
                break;
            }
            src_off -= gather[ai] * (out_shape[ai] - 1);
            idx[ai] = 0;
        }
    }

    auto xn = x.node();
    auto gather_copy = gather;
    auto out_shape_copy = out_shape;
    attach(out, {xn}, [xn, gather_copy, out_shape_copy, d](Node& o) {
        xn->ensure_grad();
        std::vector<int64_t> ix(static_cast<size_t>(d), 0);
        int64_t off = 0;
        const int64_t count = o.numel();
        for (int64_t lin = 0; lin < count; ++lin) {
            xn->grad[static_cast<size_t>(off)] += o.grad[static_cast<size_t>(lin)];
            for (int64_t a = d - 1; a >= 0; --a) {
                auto ai = static_cast<size_t>(a);
                if (++ix[ai] < out_shape_copy[ai]) {
                    off += gather_copy[ai];
                    break;
                }
                off -= gather_copy[ai] * (out_shape_copy[ai] - 1);
                ix[ai] = 0;
            }
        }
    });
    return Tensor(out);
}

Tensor transpose(const Tensor& x, int64_t axis_a, int64_t axis_b) {
    int64_t d = x.dim();
    if (axis_a < 0) axis_a += d;
    if (axis_b < 0) axis_b += d;
    if (axis_a < 0 || axis_a >= d || axis_b < 0 || axis_b >= d) {
        throw ShapeError("transpose: axis out of range for " + shape_str(x.shape()));
    }
    std::vector<int64_t> axes(static_cast<size_t>(d));
    for (int64_t i = 0; i < d; ++i) axes[static_cast<size_t>(i)] = i;
    std::swap(axes[static_cast<size_t>(axis_a)], axes[static_cast<size_t>(axis_b)]);
    return permute(x, axes);
}

Tensor slice(const Tensor& x, int64_t axis, int64_t start, int64_t length) {
    int64_t d = x.dim();
    if (axis < 0) axis += d;
    if (axis < 0 || axis >= d) throw ShapeError("slice: axis out of range for " + shape_str(x.shape()));
    int64_t extent = x.shape()[static_cast<size_t>(axis)];
    if (start < 0 || length <= 0 || start + length > extent) {
        throw ShapeError("slice: range [" + std::to_string(start) + "," +
                         std::to_string(start + length) + ") out of bounds for axis " +
                         std::to_string(axis) + " of " + shape_str(x.shape()));
    }
    Shape out_shape = x.shape();
    out_shape[static_cast<size_t>(axis)] = length;
    auto out = new_node(out_shape, "slice");

    int64_t inner = 1;
    for (int64_t a = axis + 1; a < d; ++a) inner *= x.shape()[static_cast<size_t>(a)];
    int64_t outer = x.numel() / (extent * inner);

    const auto src = x.data();
    for (int64_t o = 0; o < outer; ++o) {
        const double* sp = src.data() + (o * extent + start) * inner;
        double* dp = out->data.data() + o * length * inner;
        std::copy(sp, sp + length * inner, dp);
    }

    auto xn = x.node();
    attach(out, {xn}, [xn, outer, extent, inner, start, length](Node& o) {
        xn->ensure_grad();
        for (int64_t ou = 0; ou < outer; ++ou) {
            double* gp = xn->grad.data() + (ou * extent + start) * inner;
            const double* op = o.grad.data() + ou * length * inner;
            for (int64_t i = 0; i < length * inner; ++i) gp[i] += op[i];
        }
    });
    return Tensor(out);
}

Tensor concat(const std::vector<Tensor>& parts, int64_t axis) {
    if (parts.empty()) throw ShapeError("concat: no inputs");
    if (parts.size() == 1) {
        // still a fresh node so the result owns its buffer
        return reshape(parts[0], parts[0].shape());
    }
    int64_t d = parts[0].dim();
    if (axis < 0) axis += d;
    if (axis < 0 || axis >= d) throw ShapeError("concat: axis out of range");
    Shape out_shape = parts[0].shape();
    int64_t total = 0;
    for (const auto& p : parts) {
        if (p.dim() != d) throw ShapeError("concat: rank mismatch");
        for (int64_t a = 0; a < d; ++a) {
            if (a != axis && p.shape()[static_cast<size_t>(a)] != out_shape[static_cast<size_t>(a)]) {
                throw ShapeError("concat: shape mismatch " + shape_str(p.shape()) + " vs " +
                                 shape_str(parts[0].shape()));
            }
        }
        total += p.shape()[static_cast<size_t>(axis)];
    }
    out_shape[static_cast<size_t>(axis)] = total;
    auto out = new_node(out_shape, "concat");

    int64_t inner = 1;
    for (int64_t a = axis + 1; a < d; ++a) inner *= out_shape[static_cast<size_t>(a)];
    int64_t outer = shape_numel(out_shape) / (total * inner);

    int64_t offset = 0;
    std::vector<int64_t> extents;
    extents.reserve(parts.size());
    for (const auto& p : parts) {
        int64_t ext = p.shape()[static_cast<size_t>(axis)];
        extents.push_back(ext);
        const auto src = p.data();
        for (int64_t o = 0; o < outer; ++o) {
            const double* sp = src.data() + o * ext * inner;
            double* dp = out->data.data() + (o * total + offset) * inner;
            std::copy(sp, sp + ext * inner, dp);
        }
        offset += ext;
    }

    std::vector<std::shared_ptr<Node>> parents;
    parents.reserve(parts.size());
    for (const auto& p : parts) parents.push_back(p.node());
    attach(out, parents, [parents, extents, outer, total, inner](Node& o) {
        int64_t off = 0;
        for (size_t pi = 0; pi < parents.size(); ++pi) {
            auto& pn = parents[pi];
            int64_t ext = extents[pi];
            if (pn->requires_grad) {
                pn->ensure_grad();
                for (int64_t ou = 0; ou < outer; ++ou) {
                    const double* op = o.grad.data() + (ou * total + off) * inner;
                    double* gp = pn->grad.data() + ou * ext * inner;
                    for (int64_t i = 0; i < ext * inner; ++i) gp[i] += op[i];
                }
            }
            off += ext;
        }
    });
    return Tensor(out);
}

// ---- elementwise ------------------------------------------------------------

namespace {

Shape broadcast_shapes(const Shape& a, const Shape& b, const char* op) {
    size_t d = std::max(a.size(), b.size());
    Shape out(d);
    for (size_t i = 0; i < d; ++i) {
        int64_t ea = i < d - a.size() ? 1 : a[i - (d - a.size())];
        int64_t eb = i < d - b.size() ? 1 : b[i - (d - b.size())];
        if (ea != eb && ea != 1 && eb != 1) {
            throw ShapeError(std::string(op) + ": shapes " + shape_str(a) + " and " + shape_str(b) +
                             " are not broadcast-compatible");
        }
        out[i] = std::max(ea, eb);
    }
    return out;
}

// Strides of `from` aligned to the broadcast shape `to` (0 on broadcast axes).
std::vector<int64_t> aligned_strides(const Shape& from, const Shape& to) {
    auto fs = strides_of(from);
    std::vector<int64_t> out(to.size(), 0);
    size_t shift = to.size() - from.size();
    for (size_t i = 0; i < from.size(); ++i) {
        out[shift + i] = from[i] == 1 && to[shift + i] != 1 ? 0 : fs[i];
    }
    return out;
}

// Odometer walk over `shape` maintaining offsets for two strided operands.
template <typename Fn>
void for_each_broadcast(const Shape& shape, const std::vector<int64_t>& sa,
                        const std::vector<int64_t>& sb, Fn&& fn) {
    int64_t n = shape_numel(shape);
    size_t d = shape.size();
    std::vector<int64_t> idx(d, 0);
    int64_t oa = 0, ob = 0;
    for (int64_t lin = 0; lin < n; ++lin) {
        fn(static_cast<size_t>(lin), static_cast<size_t>(oa), static_cast<size_t>(ob));
        for (int64_t a = static_cast<int64_t>(d) - 1; a >= 0; --a) {
            auto ai = static_cast<size_t>(a);
            if (++idx[ai] < shape[ai]) {
                oa += sa[ai];
                ob += sb[ai];
                break;
            }
            oa -= sa[ai] * (shape[ai] - 1);
            ob -= sb[ai] * (shape[ai] - 1);
            idx[ai] = 0;
        }
    }
}

template <typename FwdFn, typename BwdFn>
Tensor binary_broadcast_op(const char* name, const Tensor& a, const Tensor& b, FwdFn fwd, BwdFn bwd) {
    Shape out_shape = broadcast_shapes(a.shape(), b.shape(), name);
    auto out = new_node(out_shape, name);
    auto sa = aligned_strides(a.shape(), out_shape);
    auto sb = aligned_strides(b.shape(), out_shape);
    const auto da = a.data();
    const auto db = b.data();
    for_each_broadcast(out_shape, sa, sb, [&](size_t lin, size_t oa, size_t ob) {
        out->data[lin] = fwd(da[oa], db[ob]);
    });
    auto an = a.node();
    auto bn = b.node();
    attach(out, {an, bn}, [an, bn, sa, sb, out_shape, bwd](Node& o) {
        if (an->requires_grad) an->ensure_grad();
        if (bn->requires_grad) bn->ensure_grad();
        for_each_broadcast(out_shape, sa, sb, [&](size_t lin, size_t oa, size_t ob) {
            double go = o.grad[lin];
            auto [ga, gb] = bwd(an->data[oa], bn->data[ob], go);
            if (an->requires_grad) an->grad[oa] += ga;
            if (bn->requires_grad) bn->grad[ob] += gb;
        });
    });
    return Tensor(out);
}

template <typename FwdFn, typename BwdFn>
Tensor unary_op(const char* name, const Tensor& x, FwdFn fwd, BwdFn bwd) {
    auto out = new_node(x.shape(), name);
    const auto dx = x.data();
    for (size_t i = 0; i < dx.size(); ++i) out->data[i] = fwd(dx[i]);
    auto xn = x.node();
    attach(out, {xn}, [xn, bwd](Node& o) {
        xn->ensure_grad();
        for (size_t i = 0; i < o.grad.size(); ++i) {
            xn->grad[i] += bwd(xn->data[i], o.data[i]) * o.grad[i];
        }
    });
    return Tensor(out);
}

constexpr double kGeluC = 0.7978845608028654; // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

} // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    return binary_broadcast_op(
        "add", a, b, [](double x, double y) { return x + y; },
        [](double, double, double go) { return std::pair<double, double>(go, go); });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return binary_broadcast_op(
        "sub", a, b, [](double x, double y) { return x - y; },
        [](double, double, double go) { return std::pair<double, double>(go, -go); });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return binary_broadcast_op(
        "mul", a, b, [](double x, double y) { return x * y; },
        [](double x, double y, double go) { return std::pair<double, double>(go * y, go * x); });
}

Tensor smooth_l1(const Tensor& a, const Tensor& b) {
    return binary_broadcast_op(
        "smooth_l1", a, b,
        [](double x, double y) {
            double d = x - y;
            double ad = std::fabs(d);
            return ad < 1.0 ? 0.5 * d * d : ad - 0.5;
        },
        [](double x, double y, double go) {
            double d = x - y;
            double g = std::fabs(d) < 1.0 ? d : (d > 0.0 ? 1.0 : -1.0);
            return std::pair<double, double>(go * g, -go * g);
        });
}

Tensor add_scalar(const Tensor& x, double c) {
    return unary_op(
        "add_scalar", x, [c](double v) { return v + c; }, [](double, double) { return 1.0; });
}

Tensor mul_scalar(const Tensor& x, double c) {
    return unary_op(
        "mul_scalar", x, [c](double v) { return v * c; }, [c](double, double) { return c; });
}

Tensor neg(const Tensor& x) { return mul_scalar(x, -1.0); }

Tensor abs(const Tensor& x) {
    return unary_op(
        "abs", x, [](double v) { return std::fabs(v); },
        [](double v, double) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Tensor sigmoid(const Tensor& x) {
    return unary_op(
        "sigmoid", x,
        [](double v) { return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v)); },
        [](double, double y) { return y * (1.0 - y); });
}

Tensor relu(const Tensor& x) {
    return unary_op(
        "relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
        [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor gelu(const Tensor& x) {
    return unary_op(
        "gelu", x,
        [](double v) {
            double t = std::tanh(kGeluC * (v + kGeluA * v * v * v));
            return 0.5 * v * (1.0 + t);
        },
        [](double v, double) {
            double inner = kGeluC * (v + kGeluA * v * v * v);
            double t = std::tanh(inner);
            double dinner = kGeluC * (1.0 + 3.0 * kGeluA * v * v);
            return 0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * dinner;
        });
}

Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }

// ---- reductions ---------------------------------------------------------------

Tensor sum_all(const Tensor& x) {
    auto out = new_node(Shape{1}, "sum");
    double acc = 0.0;
    for (double v : x.data()) acc += v;
    out->data[0] = acc;
    auto xn = x.node();
    attach(out, {xn}, [xn](Node& o) {
        xn->ensure_grad();
        double g = o.grad[0];
        for (double& v : xn->grad) v += g;
    });
    return Tensor(out);
}

Tensor mean_all(const Tensor& x) {
    double inv = 1.0 / static_cast<double>(x.numel());
    return mul_scalar(sum_all(x), inv);
}

Tensor sum_axis(const Tensor& x, int64_t axis) {
    int64_t d = x.dim();
    if (axis < 0) axis += d;
    if (axis < 0 || axis >= d) throw ShapeError("sum_axis: axis out of range for " + shape_str(x.shape()));
    int64_t extent = x.shape()[static_cast<size_t>(axis)];
    int64_t inner = 1;
    for (int64_t a = axis + 1; a < d; ++a) inner *= x.shape()[static_cast<size_t>(a)];
    int64_t outer = x.numel() / (extent * inner);

    Shape out_shape;
    for (int64_t a = 0; a < d; ++a) {
        if (a != axis) out_shape.push_back(x.shape()[static_cast<size_t>(a)]);
    }
    if (out_shape.empty()) out_shape.push_back(1);
    auto out = new_node(out_shape, "sum_axis");

    const auto src = x.data();
    for (int64_t o = 0; o < outer; ++o) {
        for (int64_t i = 0; i < inner; ++i) {
            double acc = 0.0;
            for (int64_t e = 0; e < extent; ++e) acc += src[static_cast<size_t>((o * extent + e) * inner + i)];
            out->data[static_cast<size_t>(o * inner + i)] = acc;
        }
    }
    auto xn = x.node();
    attach(out, {xn}, [xn, outer, extent, inner](Node& o) {
        xn->ensure_grad();
        for (int64_t ou = 0; ou < outer; ++ou) {
            for (int64_t i = 0; i < inner; ++i) {
                double g = o.grad[static_cast<size_t>(ou * inner + i)];
                for (int64_t e = 0; e < extent; ++e) {
                    xn->grad[static_cast<size_t>((ou * extent + e) * inner + i)] += g;
                }
            }
        }
    });
    return Tensor(out);
}

Tensor mean_axis(const Tensor& x, int64_t axis) {
    int64_t d = x.dim();
    int64_t ax = axis < 0 ? axis + d : axis;
    if (ax < 0 || ax >= d) throw ShapeError("mean_axis: axis out of range for " + shape_str(x.shape()));
    double inv = 1.0 / static_cast<double>(x.shape()[static_cast<size_t>(ax)]);
    return mul_scalar(sum_axis(x, ax), inv);
}

} // namespace tavp
