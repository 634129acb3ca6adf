#ifndef BDEKIT_TENSOR_HPP
#define BDEKIT_TENSOR_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <vector>

#include "bdekit/errors.hpp"

namespace bdekit::nn {

struct Shape4 {
    int n = 0, c = 0, h = 0, w = 0;

    size_t numel() const {
        return static_cast<size_t>(n) * c * h * w;
    }
    bool operator==(const Shape4&) const = default;
    std::string str() const {
        return "(" + std::to_string(n) + "," + std::to_string(c) + "," +
               std::to_string(h) + "," + std::to_string(w) + ")";
    }
};

namespace detail {

template <typename T>
struct Node {
    Shape4 shape;
    std::vector<T> value;
    std::vector<T> grad; // allocated on first accumulation
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    // reads this node's grad and accumulates into the parents'
    std::function<void(Node&)> backprop;

    void ensure_grad() {
        if (grad.empty()) grad.assign(value.size(), T(0));
    }
};

} // namespace detail

/// Reverse-mode autodiff tensor: a shared handle to one graph node holding
/// an NCHW value, its gradient, and the edge back to its inputs.
template <typename T>
class Tensor4 {
public:
    using Node = detail::Node<T>;

    Tensor4() = default;
    explicit Tensor4(std::shared_ptr<Node> node) : node_(std::move(node)) {}

    static Tensor4 zeros(Shape4 shape, bool requires_grad = false) {
        auto node = std::make_shared<Node>();
        node->shape = shape;
        node->value.assign(shape.numel(), T(0));
        node->requires_grad = requires_grad;
        return Tensor4(std::move(node));
    }

    static Tensor4 from_vector(Shape4 shape, std::vector<T> values,
                               bool requires_grad = false) {
        if (values.size() != shape.numel())
            throw ShapeError("tensor data length does not match shape " +
                             shape.str());
        auto node = std::make_shared<Node>();
        node->shape = shape;
        node->value = std::move(values);
        node->requires_grad = requires_grad;
        return Tensor4(std::move(node));
    }

    static Tensor4 scalar(T v, bool requires_grad = false) {
        return from_vector({1, 1, 1, 1}, {v}, requires_grad);
    }

    bool defined() const { return node_ != nullptr; }
    const Shape4& shape() const { return node_->shape; }
    size_t numel() const { return node_->shape.numel(); }
    bool requires_grad() const { return node_->requires_grad; }

    std::vector<T>& values() { return node_->value; }
    const std::vector<T>& values() const { return node_->value; }

    bool has_grad() const { return !node_->grad.empty(); }
    const std::vector<T>& grad() const {
        if (node_->grad.empty())
            throw InternalError("tensor has no gradient; run backward first");
        return node_->grad;
    }
    std::vector<T>& grad() {
        if (node_->grad.empty())
            throw InternalError("tensor has no gradient; run backward first");
        return node_->grad;
    }

    void zero_grad() {
        if (!node_->grad.empty())
            node_->grad.assign(node_->value.size(), T(0));
    }

    /// Value of a 1-element tensor.
    T item() const {
        if (numel() != 1)
            throw ShapeError("item() requires a 1-element tensor, shape " +
                             shape().str());
        return node_->value[0];
    }

    std::shared_ptr<Node> node() const { return node_; }

private:
    std::shared_ptr<Node> node_;
};

/// Reverse-mode accumulation from a scalar graph root. Every reachable
/// tensor with requires_grad receives d(loss)/d(tensor); parameters not in
/// the graph are simply left without a gradient.
template <typename T>
void backward(const Tensor4<T>& loss) {
    if (loss.numel() != 1)
        throw ShapeError("backward requires a scalar loss, shape " +
                         loss.shape().str());
    using Node = detail::Node<T>;

    // iterative post-order DFS: parents precede consumers in `order`
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, size_t>> stack;
    Node* root = loss.node().get();
    if (!root->requires_grad) return;
    stack.emplace_back(root, 0);
    visited.insert(root);
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* parent = node->parents[next++].get();
            if (parent->requires_grad && !visited.count(parent)) {
                visited.insert(parent);
                stack.emplace_back(parent, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    root->ensure_grad();
    root->grad[0] += T(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        if ((*it)->backprop) (*it)->backprop(**it);
}

} // namespace bdekit::nn

#endif
