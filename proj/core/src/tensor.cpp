#include "rtraj/tensor.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace rtraj {

namespace {

thread_local bool g_recording = true;

using EigenRowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const EigenRowMat>;
using MutMap = Eigen::Map<EigenRowMat>;

}  // namespace

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) os << ',';
        os << s[i];
    }
    os << ']';
    return os.str();
}

std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (auto d : s) n *= d;
    return n;
}

void detail::TensorNode::accumulate(std::span<const double> g) {
    if (grad.empty()) grad.assign(value.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) grad[i] += g[i];
}

NoGradGuard::NoGradGuard() : prev_(g_recording) { g_recording = false; }
NoGradGuard::~NoGradGuard() { g_recording = prev_; }
bool NoGradGuard::recording_enabled() { return g_recording; }

Tensor::Tensor(Shape shape, std::vector<double> values) {
    if (shape_numel(shape) != values.size()) {
        throw ShapeError("tensor init: shape " + shape_str(shape) + " wants " +
                         std::to_string(shape_numel(shape)) + " values, got " +
                         std::to_string(values.size()));
    }
    node_ = std::make_shared<detail::TensorNode>();
    node_->shape = std::move(shape);
    node_->value = std::move(values);
}

Tensor Tensor::zeros(Shape shape) {
    const std::size_t n = shape_numel(shape);
    return Tensor(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tensor::full(Shape shape, double v) {
    const std::size_t n = shape_numel(shape);
    return Tensor(std::move(shape), std::vector<double>(n, v));
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

double Tensor::item() const {
    if (size() != 1) {
        throw ShapeError("item() needs a scalar, got shape " + shape_str(shape()));
    }
    return node_->value[0];
}

std::span<const double> Tensor::grad() const {
    if (node_->grad.empty()) {
        throw NumericError("tensor has no gradient; call backward() first");
    }
    return node_->grad;
}

Tensor Tensor::detach() const {
    return Tensor(node_->shape, node_->value);
}

// Central constructor for op results. Records the node (parents + backward
// rule) only when recording is enabled and some input needs gradients.
Tensor make_op_result(Shape shape, std::vector<double> value, std::vector<Tensor> inputs,
                      std::function<void(detail::TensorNode&)> backward_fn) {
    Tensor out(std::move(shape), std::move(value));
    bool needs = false;
    if (NoGradGuard::recording_enabled()) {
        for (const auto& in : inputs) {
            if (in.node()->needs_grad()) {
                needs = true;
                break;
            }
        }
    }
    if (needs) {
        auto* node = out.node();
        node->parents.reserve(inputs.size());
        node->parent_needs.reserve(inputs.size());
        for (auto& in : inputs) {
            node->parents.push_back(in.handle());
            node->parent_needs.push_back(in.node()->needs_grad());
        }
        node->backward_fn = std::move(backward_fn);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Graph schedule
// ---------------------------------------------------------------------------

Graph Graph::build(const Tensor& root) {
    Graph g;
    if (!root.node()->recorded()) return g;
    // Iterative post-order DFS: children (inputs) are emitted before users.
    std::unordered_set<const detail::TensorNode*> visited;
    struct Frame {
        detail::TensorNode* node;
        std::size_t next_parent;
    };
    std::vector<Frame> stack;
    stack.push_back({root.node(), 0});
    visited.insert(root.node());
    while (!stack.empty()) {
        Frame& top = stack.back();
        if (top.next_parent < top.node->parents.size()) {
            detail::TensorNode* p = top.node->parents[top.next_parent++].get();
            if (p->recorded() && !visited.count(p)) {
                visited.insert(p);
                stack.push_back({p, 0});
            }
        } else {
            g.order_.push_back(top.node);
            stack.pop_back();
        }
    }
    return g;
}

void Graph::run_backward(detail::TensorNode* root) {
    // Interior grads (root included) are scratch space for this sweep;
    // leaves keep accumulating across sweeps.
    for (auto* n : order_) {
        n->grad.assign(n->value.size(), 0.0);
    }
    root->grad[0] = 1.0;
    for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
        (*it)->backward_fn(**it);
    }
}

void Tensor::backward() const {
    if (size() != 1) {
        throw ShapeError("backward() needs a scalar loss, got shape " + shape_str(shape()));
    }
    if (!node_->recorded()) {
        // A bare leaf: d(loss)/d(loss) = 1.
        if (requires_grad()) node_->accumulate(std::vector<double>{1.0});
        return;
    }
    Graph g = Graph::build(*this);
    g.run_backward(node_.get());
}

// ---------------------------------------------------------------------------
// Broadcasting (suffix rule)
// ---------------------------------------------------------------------------

namespace {

struct BroadcastPlan {
    Shape out_shape;
    std::size_t a_n = 0, b_n = 0;  // numel of each operand
    bool a_small = false, b_small = false;
};

bool is_suffix(const Shape& small, const Shape& big) {
    if (small.size() > big.size()) return false;
    const std::size_t off = big.size() - small.size();
    for (std::size_t i = 0; i < small.size(); ++i) {
        if (small[i] != big[off + i]) return false;
    }
    return true;
}

BroadcastPlan plan_broadcast(const char* op, const Tensor& a, const Tensor& b) {
    BroadcastPlan p;
    p.a_n = a.size();
    p.b_n = b.size();
    if (a.shape() == b.shape()) {
        p.out_shape = a.shape();
        return p;
    }
    if (is_suffix(b.shape(), a.shape())) {
        p.out_shape = a.shape();
        p.b_small = true;
        return p;
    }
    if (is_suffix(a.shape(), b.shape())) {
        p.out_shape = b.shape();
        p.a_small = true;
        return p;
    }
    throw ShapeError(std::string(op) + ": shapes not broadcast-compatible: " +
                     shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

// Sum a full-size gradient down to a suffix-broadcast operand.
void reduce_to_suffix(detail::TensorNode& dst, std::span<const double> g, double sign) {
    const std::size_t n = dst.value.size();
    std::vector<double> acc(n, 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) acc[i % n] += sign * g[i];
    dst.accumulate(acc);
}

void push_signed(detail::TensorNode& dst, std::span<const double> g, double sign,
                 bool small_operand) {
    if (small_operand) {
        reduce_to_suffix(dst, g, sign);
    } else if (sign == 1.0) {
        dst.accumulate(g);
    } else {
        std::vector<double> neg(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) neg[i] = sign * g[i];
        dst.accumulate(neg);
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Elementwise ops
// ---------------------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
    const auto p = plan_broadcast("add", a, b);
    const std::size_t n = shape_numel(p.out_shape);
    std::vector<double> out(n);
    const auto& av = a.values();
    const auto& bv = b.values();
    for (std::size_t i = 0; i < n; ++i) out[i] = av[i % p.a_n] + bv[i % p.b_n];
    return make_op_result(p.out_shape, std::move(out), {a, b},
                          [p](detail::TensorNode& self) {
                              auto& pa = *self.parents[0];
                              auto& pb = *self.parents[1];
                              if (self.parent_needs[0]) push_signed(pa, self.grad, 1.0, p.a_small);
                              if (self.parent_needs[1]) push_signed(pb, self.grad, 1.0, p.b_small);
                          });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    const auto p = plan_broadcast("sub", a, b);
    const std::size_t n = shape_numel(p.out_shape);
    std::vector<double> out(n);
    const auto& av = a.values();
    const auto& bv = b.values();
    for (std::size_t i = 0; i < n; ++i) out[i] = av[i % p.a_n] - bv[i % p.b_n];
    return make_op_result(p.out_shape, std::move(out), {a, b},
                          [p](detail::TensorNode& self) {
                              auto& pa = *self.parents[0];
                              auto& pb = *self.parents[1];
                              if (self.parent_needs[0]) push_signed(pa, self.grad, 1.0, p.a_small);
                              if (self.parent_needs[1]) push_signed(pb, self.grad, -1.0, p.b_small);
                          });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    const auto p = plan_broadcast("mul", a, b);
    const std::size_t n = shape_numel(p.out_shape);
    std::vector<double> out(n);
    const auto& av = a.values();
    const auto& bv = b.values();
    for (std::size_t i = 0; i < n; ++i) out[i] = av[i % p.a_n] * bv[i % p.b_n];
    return make_op_result(
        p.out_shape, std::move(out), {a, b}, [p, n](detail::TensorNode& self) {
            auto& pa = *self.parents[0];
            auto& pb = *self.parents[1];
            if (self.parent_needs[0]) {
                std::vector<double> g(n);
                for (std::size_t i = 0; i < n; ++i)
                    g[i] = self.grad[i] * self.parents[1]->value[i % p.b_n];
                push_signed(pa, g, 1.0, p.a_small);
            }
            if (self.parent_needs[1]) {
                std::vector<double> g(n);
                for (std::size_t i = 0; i < n; ++i)
                    g[i] = self.grad[i] * self.parents[0]->value[i % p.a_n];
                push_signed(pb, g, 1.0, p.b_small);
            }
        });
}

namespace {

template <typename Fwd, typename Bwd>
Tensor unary_op(const Tensor& a, Fwd fwd, Bwd bwd_from_xy) {
    const std::size_t n = a.size();
    std::vector<double> out(n);
    const auto& av = a.values();
    for (std::size_t i = 0; i < n; ++i) out[i] = fwd(av[i]);
    return make_op_result(a.shape(), std::move(out), {a},
                          [bwd_from_xy, n](detail::TensorNode& self) {
                              auto& pa = *self.parents[0];
                              if (!self.parent_needs[0]) return;
                              std::vector<double> g(n);
                              for (std::size_t i = 0; i < n; ++i)
                                  g[i] = self.grad[i] * bwd_from_xy(pa.value[i], self.value[i]);
                              pa.accumulate(g);
                          });
}

double stable_sigmoid(double x) {
    if (x >= 0.0) {
        const double z = std::exp(-x);
        return 1.0 / (1.0 + z);
    }
    const double z = std::exp(x);
    return z / (1.0 + z);
}

}  // namespace

Tensor tanh(const Tensor& a) {
    return unary_op(a, [](double x) { return std::tanh(x); },
                    [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
    return unary_op(a, stable_sigmoid, [](double, double y) { return y * (1.0 - y); });
}

Tensor exp(const Tensor& a) {
    return unary_op(a, [](double x) { return std::exp(x); },
                    [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
    for (double v : a.values()) {
        if (!(v > 0.0)) {
            throw NumericError("log: non-positive input " + std::to_string(v));
        }
    }
    return unary_op(a, [](double x) { return std::log(x); },
                    [](double x, double) { return 1.0 / x; });
}

Tensor relu(const Tensor& a) {
    return unary_op(a, [](double x) { return x > 0.0 ? x : 0.0; },
                    [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor clamp_min(const Tensor& a, double lo) {
    return unary_op(a, [lo](double x) { return x < lo ? lo : x; },
                    [lo](double x, double) { return x > lo ? 1.0 : 0.0; });
}

Tensor scale(const Tensor& a, double c) {
    return unary_op(a, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

Tensor add_const(const Tensor& a, double c) {
    return unary_op(a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

// ---------------------------------------------------------------------------
// Linear algebra
// ---------------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2) {
        throw ShapeError("matmul: rank-2 tensors required, got " + shape_str(a.shape()) +
                         " and " + shape_str(b.shape()));
    }
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    if (b.rows() != k) {
        throw ShapeError("matmul: inner dimensions differ: " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
    }
    std::vector<double> out(m * n);
    {
        ConstMap ma(a.values().data(), m, k);
        ConstMap mb(b.values().data(), k, n);
        MutMap mo(out.data(), m, n);
        mo.noalias() = ma * mb;
    }
    return make_op_result(
        {m, n}, std::move(out), {a, b}, [m, k, n](detail::TensorNode& self) {
            ConstMap gc(self.grad.data(), m, n);
            auto& pa = *self.parents[0];
            auto& pb = *self.parents[1];
            if (self.parent_needs[0]) {
                std::vector<double> ga(m * k);
                ConstMap mb(pb.value.data(), k, n);
                MutMap m_ga(ga.data(), m, k);
                m_ga.noalias() = gc * mb.transpose();
                pa.accumulate(ga);
            }
            if (self.parent_needs[1]) {
                std::vector<double> gb(k * n);
                ConstMap ma(pa.value.data(), m, k);
                MutMap m_gb(gb.data(), k, n);
                m_gb.noalias() = ma.transpose() * gc;
                pb.accumulate(gb);
            }
        });
}

Tensor transpose(const Tensor& a) {
    if (a.rank() != 2) {
        throw ShapeError("transpose: rank-2 tensor required, got " + shape_str(a.shape()));
    }
    const std::size_t m = a.rows(), n = a.cols();
    std::vector<double> out(m * n);
    const auto& av = a.values();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[j * m + i] = av[i * n + j];
    return make_op_result({n, m}, std::move(out), {a}, [m, n](detail::TensorNode& self) {
        auto& pa = *self.parents[0];
        if (!self.parent_needs[0]) return;
        std::vector<double> g(m * n);
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i < m; ++i) g[i * n + j] = self.grad[j * m + i];
        pa.accumulate(g);
    });
}

// ---------------------------------------------------------------------------
// Shape ops
// ---------------------------------------------------------------------------

Tensor reshape(const Tensor& a, Shape shape) {
    if (shape_numel(shape) != a.size()) {
        throw ShapeError("reshape: " + shape_str(a.shape()) + " -> " + shape_str(shape) +
                         " changes element count");
    }
    std::vector<double> out(a.values().begin(), a.values().end());
    return make_op_result(std::move(shape), std::move(out), {a}, [](detail::TensorNode& self) {
        auto& pa = *self.parents[0];
        if (self.parent_needs[0]) pa.accumulate(self.grad);
    });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
    if (parts.empty()) throw ShapeError("concat: no inputs");
    const std::size_t rank = parts[0].rank();
    if (axis >= rank) {
        throw ShapeError("concat: axis " + std::to_string(axis) + " out of range for rank " +
                         std::to_string(rank));
    }
    if (rank > 2) throw ShapeError("concat: rank-1 or rank-2 tensors only");
    for (const auto& t : parts) {
        if (t.rank() != rank) throw ShapeError("concat: mixed ranks");
        for (std::size_t d = 0; d < rank; ++d) {
            if (d != axis && t.shape()[d] != parts[0].shape()[d]) {
                throw ShapeError("concat: incompatible shapes " + shape_str(parts[0].shape()) +
                                 " vs " + shape_str(t.shape()));
            }
        }
    }

    Shape out_shape = parts[0].shape();
    out_shape[axis] = 0;
    for (const auto& t : parts) out_shape[axis] += t.shape()[axis];

    std::vector<double> out(shape_numel(out_shape));
    std::vector<std::size_t> extents(parts.size());
    for (std::size_t i = 0; i < parts.size(); ++i) extents[i] = parts[i].shape()[axis];

    if (rank == 1 || axis == 0) {
        std::size_t off = 0;
        for (const auto& t : parts) {
            std::copy(t.values().begin(), t.values().end(), out.begin() + off);
            off += t.size();
        }
    } else {  // rank 2, axis 1
        const std::size_t rows = out_shape[0], total_cols = out_shape[1];
        std::size_t col_off = 0;
        for (const auto& t : parts) {
            const std::size_t c = t.cols();
            const auto& tv = t.values();
            for (std::size_t r = 0; r < rows; ++r)
                std::copy(tv.begin() + r * c, tv.begin() + (r + 1) * c,
                          out.begin() + r * total_cols + col_off);
            col_off += c;
        }
    }

    std::vector<Tensor> inputs = parts;
    const std::size_t total_cols = rank == 2 ? out_shape[1] : 0;
    const std::size_t rows = rank == 2 ? out_shape[0] : 0;
    const bool col_concat = (rank == 2 && axis == 1);
    return make_op_result(
        out_shape, std::move(out), std::move(inputs),
        [extents, col_concat, rows, total_cols](detail::TensorNode& self) {
            if (!col_concat) {
                std::size_t off = 0;
                for (std::size_t i = 0; i < self.parents.size(); ++i) {
                    auto& p = *self.parents[i];
                    const std::size_t sz = p.value.size();
                    if (self.parent_needs[i])
                        p.accumulate(std::span<const double>(self.grad.data() + off, sz));
                    off += sz;
                }
            } else {
                std::size_t col_off = 0;
                for (std::size_t i = 0; i < self.parents.size(); ++i) {
                    auto& p = *self.parents[i];
                    const std::size_t c = extents[i];
                    if (self.parent_needs[i]) {
                        std::vector<double> g(rows * c);
                        for (std::size_t r = 0; r < rows; ++r)
                            for (std::size_t j = 0; j < c; ++j)
                                g[r * c + j] = self.grad[r * total_cols + col_off + j];
                        p.accumulate(g);
                    }
                    col_off += c;
                }
            }
        });
}

Tensor gather_rows(const Tensor& a, std::vector<std::size_t> indices) {
    if (a.rank() != 2) {
        throw ShapeError("gather_rows: rank-2 tensor required, got " + shape_str(a.shape()));
    }
    const std::size_t c = a.cols();
    for (auto i : indices) {
        if (i >= a.rows()) {
            throw ShapeError("gather_rows: row " + std::to_string(i) + " out of range for " +
                             shape_str(a.shape()));
        }
    }
    std::vector<double> out(indices.size() * c);
    const auto& av = a.values();
    for (std::size_t r = 0; r < indices.size(); ++r)
        std::copy(av.begin() + indices[r] * c, av.begin() + (indices[r] + 1) * c,
                  out.begin() + r * c);
    return make_op_result({indices.size(), c}, std::move(out), {a},
                          [indices, c](detail::TensorNode& self) {
                              auto& pa = *self.parents[0];
                              if (!self.parent_needs[0]) return;
                              std::vector<double> g(pa.value.size(), 0.0);
                              for (std::size_t r = 0; r < indices.size(); ++r)
                                  for (std::size_t j = 0; j < c; ++j)
                                      g[indices[r] * c + j] += self.grad[r * c + j];
                              pa.accumulate(g);
                          });
}

// ---------------------------------------------------------------------------
// Reductions
// ---------------------------------------------------------------------------

Tensor sum(const Tensor& a) {
    double s = 0.0;
    for (double v : a.values()) s += v;
    return make_op_result({1}, {s}, {a}, [](detail::TensorNode& self) {
        auto& pa = *self.parents[0];
        if (!self.parent_needs[0]) return;
        std::vector<double> g(pa.value.size(), self.grad[0]);
        pa.accumulate(g);
    });
}

Tensor mean(const Tensor& a) {
    const std::size_t n = a.size();
    double s = 0.0;
    for (double v : a.values()) s += v;
    return make_op_result({1}, {s / static_cast<double>(n)}, {a},
                          [n](detail::TensorNode& self) {
                              auto& pa = *self.parents[0];
                              if (!self.parent_needs[0]) return;
                              std::vector<double> g(n, self.grad[0] / static_cast<double>(n));
                              pa.accumulate(g);
                          });
}

Tensor max_over_axis(const Tensor& a, std::size_t axis) {
    const auto& sh = a.shape();
    if (axis >= sh.size()) {
        throw ShapeError("max_over_axis: axis " + std::to_string(axis) +
                         " out of range for shape " + shape_str(sh));
    }
    std::size_t outer = 1, inner = 1;
    for (std::size_t d = 0; d < axis; ++d) outer *= sh[d];
    for (std::size_t d = axis + 1; d < sh.size(); ++d) inner *= sh[d];
    const std::size_t len = sh[axis];

    Shape out_shape;
    for (std::size_t d = 0; d < sh.size(); ++d)
        if (d != axis) out_shape.push_back(sh[d]);
    if (out_shape.empty()) out_shape.push_back(1);

    std::vector<double> out(outer * inner);
    std::vector<std::size_t> argmax(outer * inner);
    const auto& av = a.values();
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t i = 0; i < inner; ++i) {
            std::size_t best = o * len * inner + i;
            double best_v = av[best];
            for (std::size_t k = 1; k < len; ++k) {
                const std::size_t idx = (o * len + k) * inner + i;
                if (av[idx] > best_v) {  // strict: ties keep the lowest index
                    best_v = av[idx];
                    best = idx;
                }
            }
            out[o * inner + i] = best_v;
            argmax[o * inner + i] = best;
        }
    }
    return make_op_result(std::move(out_shape), std::move(out), {a},
                          [argmax](detail::TensorNode& self) {
                              auto& pa = *self.parents[0];
                              if (!self.parent_needs[0]) return;
                              std::vector<double> g(pa.value.size(), 0.0);
                              for (std::size_t i = 0; i < argmax.size(); ++i)
                                  g[argmax[i]] += self.grad[i];
                              pa.accumulate(g);
                          });
}

Tensor l2_norm(const Tensor& a) {
    double sq = 0.0;
    for (double v : a.values()) sq += v * v;
    const double norm = std::sqrt(sq);
    return make_op_result({1}, {norm}, {a}, [norm](detail::TensorNode& self) {
        auto& pa = *self.parents[0];
        if (!self.parent_needs[0]) return;
        std::vector<double> g(pa.value.size(), 0.0);
        if (norm > 0.0) {
            for (std::size_t i = 0; i < g.size(); ++i)
                g[i] = self.grad[0] * pa.value[i] / norm;
        }
        pa.accumulate(g);
    });
}

}  // namespace rtraj
