#pragma once

#include <functional>
#include <vector>

#include "compmod/matrix.hpp"

namespace compmod {

class Tape;

// Handle to one node of the computation graph. Cheap to copy; the payload
// lives on the tape.
struct Value {
    Tape* tape = nullptr;
    int id = -1;

    bool valid() const { return tape != nullptr && id >= 0; }
    const Matrix& val() const;
    std::size_t rows() const { return val().rows(); }
    std::size_t cols() const { return val().cols(); }
};

// Reverse-mode tape. Nodes are appended in forward order, so walking ids
// from the root downward is a reverse topological order; that fixes the
// accumulation order and makes backward() bit-reproducible. Gradients add
// across fan-out and start from zero on a fresh tape.
class Tape {
public:
    Value leaf(Matrix value, bool requires_grad);
    Value constant(Matrix value) { return leaf(std::move(value), false); }

    // Used by ops.cpp. parents: ids whose requires_grad status propagates.
    Value make_node(Matrix value, std::vector<int> parents,
                    std::function<void(Tape&)> backward);

    // root must be 1x1; fills grads of every requires-grad ancestor.
    void backward(Value root);

    void zero_grads();

    const Matrix& value(int id) const { return nodes_[id].value; }
    bool requires_grad(int id) const { return nodes_[id].requires_grad; }

    // Gradient of a node after backward(); zero matrix if it never received one.
    Matrix grad(Value v) const;

    // Adds g into the node's gradient slot (allocating it on first use).
    // No-op for nodes outside the differentiable subgraph.
    void accumulate(int id, const Matrix& g);

    bool has_grad(int id) const { return !nodes_[id].grad.empty(); }
    const Matrix& raw_grad(int id) const { return nodes_[id].grad; }

    std::size_t num_nodes() const { return nodes_.size(); }

private:
    struct Node {
        Matrix value;
        Matrix grad;  // lazily allocated
        bool requires_grad = false;
        std::function<void(Tape&)> backward;
    };
    std::vector<Node> nodes_;
};

inline const Matrix& Value::val() const { return tape->value(id); }

}  // namespace compmod
