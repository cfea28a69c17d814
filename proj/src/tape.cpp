#include "compmod/tape.hpp"

#include <utility>

#include "compmod/errors.hpp"

namespace compmod {

Value Tape::leaf(Matrix value, bool requires_grad) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return Value{this, static_cast<int>(nodes_.size()) - 1};
}

Value Tape::make_node(Matrix value, std::vector<int> parents,
                      std::function<void(Tape&)> backward) {
    Node n;
    n.value = std::move(value);
    for (int p : parents) {
        if (nodes_[p].requires_grad) {
            n.requires_grad = true;
            break;
        }
    }
    if (n.requires_grad) n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return Value{this, static_cast<int>(nodes_.size()) - 1};
}

void Tape::accumulate(int id, const Matrix& g) {
    Node& n = nodes_[id];
    if (!n.requires_grad) return;
    if (n.grad.empty()) {
        n.grad = g;
    } else {
        add_in_place(n.grad, g);
    }
}

void Tape::backward(Value root) {
    if (!root.valid() || root.tape != this) {
        throw ContractError("backward: root does not belong to this tape");
    }
    const Matrix& rv = nodes_[root.id].value;
    if (rv.rows() != 1 || rv.cols() != 1) {
        throw ContractError("backward: root must be a 1x1 scalar, got " + rv.shape_str());
    }
    Matrix one(1, 1);
    one(0, 0) = 1.0;
    accumulate(root.id, one);
    for (int id = root.id; id >= 0; --id) {
        Node& n = nodes_[id];
        if (n.backward && !n.grad.empty()) n.backward(*this);
    }
}

void Tape::zero_grads() {
    for (Node& n : nodes_) n.grad = Matrix();
}

Matrix Tape::grad(Value v) const {
    const Node& n = nodes_[v.id];
    if (n.grad.empty()) return Matrix(n.value.rows(), n.value.cols());
    return n.grad;
}

}  // namespace compmod
