#include "arforge/numerics/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

namespace arforge::numerics {

std::string shape_string(const Shape &shape) {
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out << ", ";
        out << shape[i];
    }
    out << ']';
    return out.str();
}

std::size_t shape_size(const Shape &shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

namespace {
thread_local bool no_grad = false;
}

NoGradGuard::NoGradGuard() : previous_(no_grad) { no_grad = true; }
NoGradGuard::~NoGradGuard() { no_grad = previous_; }
bool NoGradGuard::active() { return no_grad; }

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    const std::size_t n = shape_size(shape);
    return from_values(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::from_values(Shape shape, std::vector<double> values, bool requires_grad) {
    for (auto d : shape)
        if (d == 0) throw ShapeError("tensor: zero-sized dimension in shape " + shape_string(shape));
    if (shape_size(shape) != values.size())
        throw ShapeError("tensor: shape " + shape_string(shape) + " does not hold " +
                         std::to_string(values.size()) + " values");
    auto node = std::make_shared<detail::Node>();
    node->shape = std::move(shape);
    node->value = std::move(values);
    node->requires_grad = requires_grad;
    if (requires_grad) node->grad.assign(node->value.size(), 0.0);
    return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return from_values({1}, {value}, requires_grad);
}

double Tensor::item() const {
    if (size() != 1) throw ShapeError("item: tensor of shape " + shape_string(shape()) + " is not a scalar");
    return node_->value[0];
}

void Tensor::zero_grad() {
    std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tensor::detach() const {
    return from_values(node_->shape, node_->value, false);
}

Tensor Tensor::make_result(Shape shape, std::vector<double> value,
                           std::initializer_list<const Tensor *> inputs,
                           std::function<void(detail::Node &)> backward_fn) {
    auto node = std::make_shared<detail::Node>();
    node->shape = std::move(shape);
    node->value = std::move(value);
    for (const Tensor *input : inputs) {
        if (!no_grad && input && input->defined() && input->requires_grad()) node->requires_grad = true;
    }
    if (node->requires_grad) {
        node->grad.assign(node->value.size(), 0.0);
        for (const Tensor *input : inputs)
            if (input && input->defined()) node->parents.push_back(input->node_);
        node->backward_fn = std::move(backward_fn);
    }
    return Tensor(std::move(node));
}

void backward(const Tensor &loss) {
    if (!loss.defined() || loss.size() != 1)
        throw ShapeError("backward: loss must be a scalar, got shape " +
                         (loss.defined() ? shape_string(loss.shape()) : std::string("<undefined>")));
    detail::Node *root = loss.node();
    if (!root->requires_grad) return;

    // Iterative post-order DFS gives a topological order.
    std::vector<detail::Node *> order;
    std::unordered_set<detail::Node *> seen;
    std::vector<std::pair<detail::Node *, std::size_t>> stack{{root, 0}};
    seen.insert(root);
    while (!stack.empty()) {
        auto &[node, next] = stack.back();
        if (next < node->parents.size()) {
            detail::Node *parent = node->parents[next++].get();
            if (parent->requires_grad && seen.insert(parent).second) stack.emplace_back(parent, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    root->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        detail::Node *node = *it;
        if (node->backward_fn) node->backward_fn(*node);
    }
}

} // namespace arforge::numerics
