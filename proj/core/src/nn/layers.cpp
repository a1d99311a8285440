#include <hexpert/nn/layers.hpp>

#include <hexpert/errors.hpp>
#include <hexpert/nn/ops.hpp>

#include <cmath>

namespace hexpert::nn {

namespace {

Tensor glorot(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng)
{
    Tensor t(std::move(shape));
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (auto& v : t.values())
        v = dist(rng);
    return t;
}

std::string layer_error(std::size_t index, const std::string& what)
{
    return "layer " + std::to_string(index) + ": " + what;
}

} // namespace

std::size_t LayerParams::input_size() const
{
    switch (kind) {
    case LayerKind::Dense:
        return weights.value.dim(0);
    case LayerKind::Conv3x3:
        return weights.value.dim(2);
    case LayerKind::GatedRecurrent:
        return weights.value.dim(0) - hidden_size();
    }
    return 0;
}

std::size_t LayerParams::output_size() const
{
    switch (kind) {
    case LayerKind::Dense:
        return weights.value.dim(1);
    case LayerKind::Conv3x3:
        return weights.value.dim(3);
    case LayerKind::GatedRecurrent:
        return hidden_size();
    }
    return 0;
}

std::size_t LayerParams::hidden_size() const
{
    if (kind != LayerKind::GatedRecurrent)
        return 0;
    return weights.value.dim(1) / 4;
}

LayerParams LayerParams::dense(const std::string& name, std::size_t in, std::size_t out,
                               Activation act, Rng& rng)
{
    LayerParams p;
    p.kind = LayerKind::Dense;
    p.weights = {name + ".w", glorot({in, out}, in, out, rng)};
    p.biases = {name + ".b", Tensor({out})};
    p.activation = act;
    return p;
}

LayerParams LayerParams::conv3x3(const std::string& name, std::size_t in_channels,
                                 std::size_t out_channels, std::size_t stride, Activation act,
                                 Rng& rng)
{
    LayerParams p;
    p.kind = LayerKind::Conv3x3;
    p.weights = {name + ".w", glorot({3, 3, in_channels, out_channels}, 9 * in_channels,
                                     9 * out_channels, rng)};
    p.biases = {name + ".b", Tensor({out_channels})};
    p.activation = act;
    p.stride = stride;
    return p;
}

LayerParams LayerParams::gated_recurrent(const std::string& name, std::size_t in,
                                         std::size_t hidden, Rng& rng)
{
    LayerParams p;
    p.kind = LayerKind::GatedRecurrent;
    p.weights = {name + ".w", glorot({in + hidden, 4 * hidden}, in + hidden, hidden, rng)};
    p.biases = {name + ".b", Tensor({4 * hidden})};
    return p;
}

Var activate(Var x, Activation act)
{
    switch (act) {
    case Activation::Identity:
        return x;
    case Activation::Relu:
        return relu(x);
    case Activation::LeakyRelu:
        return leaky_relu(x, 0.01);
    case Activation::Tanh:
        return tanh(x);
    case Activation::Sigmoid:
        return sigmoid(x);
    }
    return x;
}

Var forward(std::span<const LayerParams> layers, Var input, const ForwardOptions& options)
{
    Tape& tape = input.tape();
    Var x = input;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const LayerParams& layer = layers[i];
        const Shape& s = x.shape();
        switch (layer.kind) {
        case LayerKind::Dense: {
            if (s.size() == 4)
                x = reshape(x, {s[0], s[1] * s[2] * s[3]});
            else if (s.size() == 1)
                x = reshape(x, {1, s[0]});
            if (x.shape().size() != 2 || x.shape()[1] != layer.input_size())
                throw DimensionError(layer_error(i, "dense layer expects " +
                                                        std::to_string(layer.input_size()) +
                                                        " features, got shape " + to_string(s)));
            x = affine(x, tape.parameter(layer.weights), tape.parameter(layer.biases));
            break;
        }
        case LayerKind::Conv3x3: {
            if (s.size() != 4 || s[3] != layer.input_size())
                throw DimensionError(layer_error(i, "conv layer expects NHWC input with " +
                                                        std::to_string(layer.input_size()) +
                                                        " channels, got shape " + to_string(s)));
            if (s[1] < 3 || s[2] < 3)
                throw DimensionError(layer_error(i, "input " + to_string(s) + " smaller than 3x3 filter"));
            x = conv2d(x, tape.parameter(layer.weights), tape.parameter(layer.biases), layer.stride);
            break;
        }
        case LayerKind::GatedRecurrent:
            throw DimensionError(layer_error(i, "recurrent cells are driven by recurrent_step"));
        }
        x = activate(x, layer.activation);
        if (layer.dropout > 0.0 && options.dropout_rng) {
            Tensor mask(x.shape());
            std::bernoulli_distribution keep(1.0 - layer.dropout);
            const double inv = 1.0 / (1.0 - layer.dropout);
            for (auto& m : mask.values())
                m = keep(*options.dropout_rng) ? inv : 0.0;
            x = mul(x, tape.constant(std::move(mask)));
        }
    }
    return x;
}

RecurrentState zero_state(Tape& tape, const LayerParams& cell, std::size_t n)
{
    const std::size_t h = cell.hidden_size();
    return {tape.constant(Tensor({n, h})), tape.constant(Tensor({n, h}))};
}

std::pair<RecurrentState, Var> recurrent_step(const LayerParams& cell, RecurrentState state,
                                              Var input)
{
    if (cell.kind != LayerKind::GatedRecurrent)
        throw DimensionError("recurrent_step: layer is not a gated recurrent cell");
    const std::size_t h = cell.hidden_size();
    const Shape& hs = state.hidden.shape();
    if (hs.size() != 2 || hs[1] != h || state.cell.shape() != hs)
        throw DimensionError("recurrent_step: state shape " + to_string(hs) +
                             " does not match hidden size " + std::to_string(h));
    Var x = input;
    if (x.shape().size() == 1)
        x = reshape(x, {1, x.shape()[0]});
    if (x.shape()[0] != hs[0] || x.shape()[1] != cell.input_size())
        throw DimensionError("recurrent_step: input shape " + to_string(input.shape()) +
                             " does not match cell input size " + std::to_string(cell.input_size()));

    Tape& tape = input.tape();
    const Var xh[] = {x, state.hidden};
    Var z = affine(concat_cols(xh), tape.parameter(cell.weights), tape.parameter(cell.biases));
    Var in_gate = sigmoid(slice_cols(z, 0, h));
    Var forget_gate = sigmoid(slice_cols(z, h, 2 * h));
    Var out_gate = sigmoid(slice_cols(z, 2 * h, 3 * h));
    Var candidate = tanh(slice_cols(z, 3 * h, 4 * h));
    Var c = forget_gate * state.cell + in_gate * candidate;
    Var hidden = out_gate * tanh(c);
    return {{hidden, c}, hidden};
}

std::vector<Parameter*> parameters_of(std::span<LayerParams> layers)
{
    std::vector<Parameter*> out;
    for (auto& l : layers) {
        out.push_back(&l.weights);
        out.push_back(&l.biases);
    }
    return out;
}

std::vector<const Parameter*> parameters_of(std::span<const LayerParams> layers)
{
    std::vector<const Parameter*> out;
    for (const auto& l : layers) {
        out.push_back(&l.weights);
        out.push_back(&l.biases);
    }
    return out;
}

} // namespace hexpert::nn
