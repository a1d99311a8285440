#include <hexpert/nn/tape.hpp>

#include <hexpert/errors.hpp>

namespace hexpert::nn {

void Gradients::accumulate(const std::string& name, const Tensor& grad)
{
    auto it = grads_.find(name);
    if (it == grads_.end()) {
        grads_.emplace(name, grad);
        return;
    }
    if (it->second.shape() != grad.shape())
        throw DimensionError("gradient shape mismatch for '" + name + "'");
    for (std::size_t i = 0; i < grad.size(); ++i)
        it->second[i] += grad[i];
}

const Tensor* Gradients::find(std::string_view name) const
{
    auto it = grads_.find(name);
    return it == grads_.end() ? nullptr : &it->second;
}

Tensor Gradients::get(const Parameter& p) const
{
    if (const Tensor* g = find(p.name))
        return *g;
    return Tensor(p.value.shape());
}

void Gradients::merge(const Gradients& other)
{
    for (const auto& [name, grad] : other.grads_)
        accumulate(name, grad);
}

void Gradients::scale(double factor)
{
    for (auto& [name, grad] : grads_)
        for (auto& v : grad.values())
            v *= factor;
}

Var Tape::constant(Tensor value)
{
    Node& n = nodes_.emplace_back();
    n.owned = std::move(value);
    return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::parameter(const Parameter& p)
{
    Node& n = nodes_.emplace_back();
    n.ref = &p.value;
    n.param_name = &p.name;
    n.requires_grad = true;
    return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::record(Tensor value, bool requires_grad, Backward backward)
{
    Node& n = nodes_.emplace_back();
    n.owned = std::move(value);
    n.requires_grad = requires_grad;
    if (requires_grad)
        n.backward = std::move(backward);
    return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

const Tape::Node& Tape::node(Var v) const
{
    if (v.tape_ != this || v.id_ >= nodes_.size())
        throw ContractViolation("variable does not belong to this tape");
    return nodes_[v.id_];
}

const Tensor& Tape::value(Var v) const
{
    const Node& n = node(v);
    return n.ref ? *n.ref : n.owned;
}

bool Tape::requires_grad(Var v) const
{
    return node(v).requires_grad;
}

Tensor& Tape::grad(Var v)
{
    Node& n = nodes_[v.id_];
    if (n.grad.empty()) {
        const Tensor& val = n.ref ? *n.ref : n.owned;
        n.grad = Tensor(val.shape());
    }
    return n.grad;
}

Gradients Tape::backward(Var loss)
{
    const Node& root = node(loss);
    const Tensor& root_value = root.ref ? *root.ref : root.owned;
    if (root_value.size() != 1)
        throw ContractViolation("backward() requires a scalar loss, got shape " +
                                to_string(root_value.shape()));

    Gradients out;
    if (root.requires_grad) {
        grad(loss)[0] = 1.0;
        for (std::size_t i = loss.id_ + 1; i-- > 0;) {
            Node& n = nodes_[i];
            if (n.grad.empty() || !n.backward)
                continue;
            n.backward(*this, n.grad);
        }
    }
    for (Node& n : nodes_) {
        if (!n.param_name)
            continue;
        if (n.grad.empty())
            out.accumulate(*n.param_name, Tensor(n.ref->shape()));
        else
            out.accumulate(*n.param_name, n.grad);
    }
    return out;
}

} // namespace hexpert::nn
