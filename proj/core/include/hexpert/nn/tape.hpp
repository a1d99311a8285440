#pragma once

#include <hexpert/nn/tensor.hpp>

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <string>
#include <string_view>

namespace hexpert::nn {

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; only valid while the
/// tape that produced it is alive.
class Var {
public:
    Var() = default;

    const Tensor& value() const;
    const Shape& shape() const { return value().shape(); }
    double item() const { return value().item(); }
    Tape& tape() const noexcept { return *tape_; }
    std::uint32_t id() const noexcept { return id_; }
    bool valid() const noexcept { return tape_ != nullptr; }

private:
    friend class Tape;
    Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    std::uint32_t id_ = 0;
};

/// Parameter-name keyed gradient map. Gradients from several workers merge by
/// summation.
class Gradients {
public:
    void accumulate(const std::string& name, const Tensor& grad);
    const Tensor* find(std::string_view name) const;
    /// Gradient for p, or zeros of p's shape when p did not take part.
    Tensor get(const Parameter& p) const;
    void merge(const Gradients& other);
    void scale(double factor);
    bool contains(std::string_view name) const { return find(name) != nullptr; }
    std::size_t size() const noexcept { return grads_.size(); }

    auto begin() const { return grads_.begin(); }
    auto end() const { return grads_.end(); }

private:
    std::map<std::string, Tensor, std::less<>> grads_;
};

/// Ordered record of operations for one reverse-mode pass. Nodes are appended
/// in evaluation order, so inputs always precede the nodes that consume them.
class Tape {
public:
    /// Propagates the output gradient into the inputs' gradient buffers.
    using Backward = std::function<void(Tape&, const Tensor& out_grad)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Tensor value);
    /// Records p as a leaf. The tensor is referenced, not copied: p must
    /// outlive the tape and stay unmodified until backward() returns.
    Var parameter(const Parameter& p);
    Var record(Tensor value, bool requires_grad, Backward backward);

    const Tensor& value(Var v) const;
    bool requires_grad(Var v) const;
    /// Gradient buffer of v, zero-initialised on first access.
    Tensor& grad(Var v);

    /// Reverse pass from a scalar loss. Every parameter leaf on the tape gets
    /// an entry; unreached ones are zero.
    Gradients backward(Var loss);

    std::size_t size() const noexcept { return nodes_.size(); }

private:
    struct Node {
        Tensor owned;
        const Tensor* ref = nullptr;
        const std::string* param_name = nullptr;
        bool requires_grad = false;
        Backward backward;
        Tensor grad;
    };

    const Node& node(Var v) const;

    std::deque<Node> nodes_;
};

inline const Tensor& Var::value() const
{
    return tape_->value(*this);
}

} // namespace hexpert::nn
