#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "rtraj/errors.hpp"

namespace rtraj {

/// Dense 64-bit float tensors with reverse-mode automatic differentiation.
///
/// A Tensor is a shared handle onto a graph node holding a row-major value
/// buffer, an optional gradient buffer of identical shape, and (for results
/// of recorded operations) the backward rule plus references to its inputs.
/// Operations are free functions; any op whose inputs require gradients is
/// recorded, and Tensor::backward() on a scalar loss replays the recorded
/// subgraph in reverse topological order.
///
/// Conventions:
///  - scalars have shape {1};
///  - binary elementwise ops broadcast only when one operand's shape is a
///    suffix of the other's (leading-dimension expansion); anything else
///    needs an explicit reshape;
///  - repeated backward() calls without zero_grad() accumulate additively
///    into leaf gradients;
///  - gradient routing is captured when an op is recorded: toggling a leaf's
///    requires_grad afterwards does not affect graphs already built (this is
///    what makes scoped parameter freezing reliable);
///  - one graph is single-threaded; independent graphs may live on separate
///    threads as long as shared leaves are not mutated and keep
///    requires_grad == false while shared.

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& s);
std::size_t shape_numel(const Shape& s);

namespace detail {

struct TensorNode {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;  // empty until first accumulation
    std::atomic<bool> requires_grad{false};
    std::vector<std::shared_ptr<TensorNode>> parents;
    // Whether each parent wanted gradients when this op was recorded.
    // Captured at record time, so freezing a parameter while building a
    // graph excludes it from that graph's backward pass for good.
    std::vector<bool> parent_needs;
    // Consumes this node's grad and accumulates into parents' grads.
    std::function<void(TensorNode&)> backward_fn;

    bool recorded() const { return static_cast<bool>(backward_fn); }
    bool needs_grad() const { return recorded() || requires_grad.load(std::memory_order_relaxed); }
    void accumulate(std::span<const double> g);
};

}  // namespace detail

/// Disables graph recording for its scope (thread-local). Forward passes in
/// evaluation loops run under a NoGradGuard to skip node bookkeeping.
class NoGradGuard {
  public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;
    static bool recording_enabled();

  private:
    bool prev_;
};

class Tensor {
  public:
    Tensor() = default;
    Tensor(Shape shape, std::vector<double> values);

    static Tensor zeros(Shape shape);
    static Tensor full(Shape shape, double v);
    static Tensor scalar(double v);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::size_t size() const { return node_->value.size(); }
    std::size_t rank() const { return node_->shape.size(); }
    /// Row/column counts for rank-2 tensors.
    std::size_t rows() const { return node_->shape.at(0); }
    std::size_t cols() const { return node_->shape.at(1); }

    std::span<const double> values() const { return node_->value; }
    /// Mutable view of a leaf's buffer (parameter updates, attack iterates).
    /// Mutating invalidates gradients of graphs already built from this leaf.
    std::span<double> values_mut() { return node_->value; }

    double item() const;
    double at(std::size_t i) const { return node_->value.at(i); }

    bool requires_grad() const { return node_->requires_grad.load(std::memory_order_relaxed); }
    Tensor& set_requires_grad(bool on) {
        node_->requires_grad.store(on, std::memory_order_relaxed);
        return *this;
    }

    bool has_grad() const { return !node_->grad.empty(); }
    std::span<const double> grad() const;
    void zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }
    void clear_grad() { node_->grad.clear(); }

    /// Reverse-mode sweep from a scalar loss. Gradients accumulate into every
    /// requires-grad leaf reachable from this node.
    void backward() const;

    /// Value copy detached from any recorded graph.
    Tensor detach() const;

    detail::TensorNode* node() const { return node_.get(); }
    const std::shared_ptr<detail::TensorNode>& handle() const { return node_; }

  private:
    friend Tensor make_op_result(Shape, std::vector<double>, std::vector<Tensor>,
                                 std::function<void(detail::TensorNode&)>);
    std::shared_ptr<detail::TensorNode> node_;
};

/// One backward schedule: the recorded operation nodes reachable from a root,
/// ordered so every record's inputs precede it. backward() builds one per
/// call and visits each record exactly once, in reverse.
class Graph {
  public:
    static Graph build(const Tensor& root);
    const std::vector<detail::TensorNode*>& records() const { return order_; }
    std::size_t size() const { return order_.size(); }
    void run_backward(detail::TensorNode* root);

  private:
    std::vector<detail::TensorNode*> order_;
};

// ---- elementwise ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor clamp_min(const Tensor& a, double lo);

// ---- scalar-constant forms ----
Tensor scale(const Tensor& a, double c);
Tensor add_const(const Tensor& a, double c);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator*(const Tensor& a, double c) { return scale(a, c); }
inline Tensor operator*(double c, const Tensor& a) { return scale(a, c); }
inline Tensor operator+(const Tensor& a, double c) { return add_const(a, c); }

// ---- linear algebra ----
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

// ---- shape ----
Tensor reshape(const Tensor& a, Shape shape);
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
Tensor gather_rows(const Tensor& a, std::vector<std::size_t> indices);

// ---- reductions ----
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
/// Reduces one axis; ties route the gradient to the lowest index.
Tensor max_over_axis(const Tensor& a, std::size_t axis);
/// Euclidean norm of the flattened tensor; gradient at the origin is the
/// zero vector (subgradient).
Tensor l2_norm(const Tensor& a);

}  // namespace rtraj
