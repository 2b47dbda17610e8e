#include "mcdgln/gradcore.hpp"

namespace mcdgln::grad {

Tape& Var::tape() const {
  if (!tape_) throw NumericalError("var: not attached to a tape");
  return *tape_;
}

const Tensor& Var::value() const { return tape().value(id_); }

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, false, nullptr, 0});
  return Var(this, nodes_.size() - 1);
}

Var Tape::leaf(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, true, nullptr, 0});
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(ParamSet& params, const std::string& name) {
  const std::size_t idx = params.index(name);
  nodes_.push_back(Node{params.entries()[idx].value, {}, {}, true, &params, idx});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward) {
  if (backward_done_) throw NumericalError("tape: cannot record after backward");
  bool rg = false;
  for (auto id : inputs) {
    if (id >= nodes_.size()) throw NumericalError("tape: input refers to a future node");
    rg = rg || nodes_[id].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), std::move(inputs), rg ? std::move(backward) : BackwardFn{},
                        rg, nullptr, 0});
  return Var(this, nodes_.size() - 1);
}

void Tape::backward(Var loss) {
  if (&loss.tape() != this) throw NumericalError("backward: loss belongs to another tape");
  if (backward_done_) throw NumericalError("backward: tape already differentiated");
  if (nodes_.empty()) throw NumericalError("backward: empty tape");
  const Tensor& lv = nodes_[loss.id()].value;
  if (!lv.is_scalar()) {
    throw ShapeError("backward: loss must be scalar, got " + shape_str(lv.shape()));
  }
  backward_done_ = true;

  grads_.assign(nodes_.size(), {});
  for (std::size_t i = 0; i <= loss.id(); ++i) {
    if (nodes_[i].requires_grad) grads_[i].assign(nodes_[i].value.size(), 0.0);
  }
  if (!nodes_[loss.id()].requires_grad) return;
  grads_[loss.id()][0] = 1.0;

  for (std::size_t k = loss.id() + 1; k-- > 0;) {
    Node& n = nodes_[k];
    if (!n.requires_grad) continue;
    if (n.backward) n.backward(grads_[k], grads_);
    if (n.params) {
      auto& acc = n.params->entries()[n.param_index].grad;
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += grads_[k][i];
    }
  }
}

Tensor Tape::grad(Var v) const {
  const Tensor& val = nodes_.at(v.id()).value;
  if (!backward_done_ || grads_[v.id()].empty()) return Tensor::zeros(val.rows(), val.cols());
  return Tensor(val.rows(), val.cols(), grads_[v.id()]);
}

}  // namespace mcdgln::grad
