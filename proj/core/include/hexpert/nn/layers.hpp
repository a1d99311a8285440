#pragma once

#include <hexpert/nn/tape.hpp>
#include <hexpert/random.hpp>

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace hexpert::nn {

enum class LayerKind { Dense, Conv3x3, GatedRecurrent };
enum class Activation { Identity, Relu, LeakyRelu, Tanh, Sigmoid };

/// One layer's parameters.
///  Dense:          weights (in, out), biases (out)
///  Conv3x3:        weights (3, 3, in_channels, out_channels), biases (out_channels), valid padding
///  GatedRecurrent: weights (in + hidden, 4 * hidden), biases (4 * hidden); gate order i, f, o, g
struct LayerParams {
    LayerKind kind = LayerKind::Dense;
    Parameter weights;
    Parameter biases;
    Activation activation = Activation::Identity;
    std::size_t stride = 1;
    /// Dropout probability applied after the activation, training only.
    double dropout = 0.0;

    std::size_t input_size() const;
    std::size_t output_size() const;
    /// Hidden width of a GatedRecurrent cell.
    std::size_t hidden_size() const;

    /// Weights uniform in ±sqrt(6 / (fan_in + fan_out)), biases zero.
    static LayerParams dense(const std::string& name, std::size_t in, std::size_t out,
                             Activation act, Rng& rng);
    static LayerParams conv3x3(const std::string& name, std::size_t in_channels,
                               std::size_t out_channels, std::size_t stride, Activation act,
                               Rng& rng);
    static LayerParams gated_recurrent(const std::string& name, std::size_t in, std::size_t hidden,
                                       Rng& rng);
};

Var activate(Var x, Activation act);

/// Optional per-call behaviour of forward().
struct ForwardOptions {
    /// Enables dropout layers; needs a generator for the masks.
    Rng* dropout_rng = nullptr;
};

/// Applies dense/conv layers in order. Rank-4 activations are flattened
/// automatically when a dense layer follows a convolution.
/// Throws DimensionError naming the offending layer index.
Var forward(std::span<const LayerParams> layers, Var input, const ForwardOptions& options = {});

struct RecurrentState {
    Var hidden;
    Var cell;
};

/// Zero hidden/cell state of batch size n for the given cell.
RecurrentState zero_state(Tape& tape, const LayerParams& cell, std::size_t n = 1);

/// One gated recurrent step; returns the new state and its output (= hidden).
std::pair<RecurrentState, Var> recurrent_step(const LayerParams& cell, RecurrentState state,
                                              Var input);

/// Pointers to every trainable tensor of the given layers, in layer order.
std::vector<Parameter*> parameters_of(std::span<LayerParams> layers);
std::vector<const Parameter*> parameters_of(std::span<const LayerParams> layers);

} // namespace hexpert::nn
