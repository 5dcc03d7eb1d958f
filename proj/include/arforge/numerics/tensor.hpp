#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace arforge::numerics {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape &shape);
std::size_t shape_size(const Shape &shape);

/// Raised when a primitive receives operands of incompatible shapes.
class ShapeError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

namespace detail {

struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad; // allocated iff requires_grad
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    // Reads this node's grad and accumulates into the parents' grads.
    std::function<void(Node &)> backward_fn;
};

} // namespace detail

/// Dense row-major float64 tensor. Copies share the underlying node; results
/// of primitives record a differentiation node whenever an input requires
/// gradients.
class Tensor {
  public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor from_values(Shape shape, std::vector<double> values, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const Shape &shape() const { return node_->shape; }
    std::size_t rank() const { return node_->shape.size(); }
    std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
    std::size_t size() const { return node_->value.size(); }

    std::span<const double> values() const { return node_->value; }
    std::span<double> mutable_values() { return node_->value; }
    double item() const;

    bool requires_grad() const { return node_->requires_grad; }
    /// Gradient accumulated by the last backward(); empty when !requires_grad.
    std::span<const double> grad() const { return node_->grad; }
    std::span<double> mutable_grad() { return node_->grad; }
    void zero_grad();

    /// Value copy with no graph attachment.
    Tensor detach() const;

    /// Internal: wraps a freshly computed value, wiring it into the graph when
    /// any input requires gradients.
    static Tensor make_result(Shape shape, std::vector<double> value,
                              std::initializer_list<const Tensor *> inputs,
                              std::function<void(detail::Node &)> backward_fn);

    detail::Node *node() const { return node_.get(); }

  private:
    explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

    std::shared_ptr<detail::Node> node_;
};

/// While alive, primitives on this thread record no graph (evaluation mode).
class NoGradGuard {
  public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard &) = delete;
    NoGradGuard &operator=(const NoGradGuard &) = delete;

    static bool active();

  private:
    bool previous_;
};

/// Reverse-mode sweep from a scalar loss. Populates grad of every reachable
/// tensor that requires gradients (accumulating into existing values).
void backward(const Tensor &loss);

} // namespace arforge::numerics
