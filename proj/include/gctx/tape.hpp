#pragma once

#include <functional>
#include <vector>

#include "gctx/tensor.hpp"

namespace gctx {

// Reverse-mode tape. Nodes are appended in execution order, so every input of
// a node appears earlier in the list. Each node keeps the recorded output
// value, a backward rule that pulls the node's adjoint and accumulates into
// its inputs, and a forward recompute rule used by replay_check(). A tape is
// confined to one logical thread and never shared.
class Tape {
public:
    struct Node {
        std::vector<int> inputs;
        Tensor value;
        std::function<void(Tape&, int self)> backward;  // null for leaves
        std::function<Tensor()> recompute;              // null for leaves
    };

    // Registers a leaf and tags the tensor with its node id.
    int watch(Tensor& leaf);

    // Records an op output; inputs with id -1 are constants.
    int record(std::vector<int> inputs, Tensor& out,
               std::function<void(Tape&, int self)> backward,
               std::function<Tensor()> recompute);

    // Seeds d(loss)/d(loss) = 1 and runs all backward rules in reverse order.
    // ContractError if loss is not a scalar recorded on this tape.
    void backward(const Tensor& loss);

    // Gradient of the loss w.r.t. a recorded tensor; exact zeros for recorded
    // tensors the loss does not depend on. ContractError for untracked
    // tensors or before backward() ran.
    Tensor grad(const Tensor& t) const;

    // Re-runs every recorded forward rule and compares against the recorded
    // values; true iff all outputs reproduce bit-exactly.
    bool replay_check() const;

    int size() const { return int(nodes_.size()); }
    const Node& node(int i) const { return nodes_[size_t(i)]; }
    const Tensor& value(int i) const { return nodes_[size_t(i)].value; }

    // Adjoint buffer for node i, lazily zero-initialized to the value's size.
    std::vector<double>& grad_buf(int i);
    bool grad_touched(int i) const { return !grads_[size_t(i)].empty(); }

    bool tracked_here(const Tensor& t) const {
        return t.node >= 0 && t.owner == this && t.node < size();
    }

private:
    std::vector<Node> nodes_;
    std::vector<std::vector<double>> grads_;
    bool ran_backward_ = false;
};

}  // namespace gctx
