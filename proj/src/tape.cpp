#include "gctx/tape.hpp"

namespace gctx {

int Tape::watch(Tensor& leaf) {
    if (!leaf.defined()) throw ContractError("cannot watch an undefined tensor");
    if (tracked_here(leaf)) return leaf.node;
    Node n;
    n.value = leaf;
    nodes_.push_back(std::move(n));
    grads_.emplace_back();
    leaf.node = int(nodes_.size()) - 1;
    leaf.owner = this;
    return leaf.node;
}

int Tape::record(std::vector<int> inputs, Tensor& out,
                 std::function<void(Tape&, int self)> backward,
                 std::function<Tensor()> recompute) {
    for (int i : inputs)
        if (i >= int(nodes_.size()))
            throw ContractError("tape input id out of order");
    Node n;
    n.inputs = std::move(inputs);
    n.value = out;
    n.backward = std::move(backward);
    n.recompute = std::move(recompute);
    nodes_.push_back(std::move(n));
    grads_.emplace_back();
    out.node = int(nodes_.size()) - 1;
    out.owner = this;
    return out.node;
}

std::vector<double>& Tape::grad_buf(int i) {
    auto& g = grads_[size_t(i)];
    if (g.empty()) g.assign(size_t(nodes_[size_t(i)].value.size()), 0.0);
    return g;
}

void Tape::backward(const Tensor& loss) {
    if (!tracked_here(loss))
        throw ContractError("loss tensor is not recorded on this tape");
    if (loss.size() != 1)
        throw ContractError("backward requires a scalar loss, got shape " +
                            shape_str(loss.shape()));
    for (auto& g : grads_) g.clear();
    grad_buf(loss.node)[0] = 1.0;
    for (int i = loss.node; i >= 0; --i) {
        if (grads_[size_t(i)].empty()) continue;  // does not influence the loss
        const Node& n = nodes_[size_t(i)];
        if (n.backward) n.backward(*this, i);
    }
    ran_backward_ = true;
}

Tensor Tape::grad(const Tensor& t) const {
    if (!tracked_here(t)) throw ContractError("grad of a tensor not on this tape");
    if (!ran_backward_) throw ContractError("grad queried before backward()");
    const auto& g = grads_[size_t(t.node)];
    if (g.empty()) return Tensor(t.shape());  // exact zeros
    return Tensor(t.shape(), g);
}

bool Tape::replay_check() const {
    for (const auto& n : nodes_) {
        if (!n.recompute) continue;
        Tensor fresh = n.recompute();
        if (!fresh.same_bits(n.value)) return false;
    }
    return true;
}

}  // namespace gctx
