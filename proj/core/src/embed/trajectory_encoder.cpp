#include <hexpert/embed/trajectory_encoder.hpp>

#include <hexpert/errors.hpp>
#include <hexpert/nn/ops.hpp>

#include <tuple>

namespace hexpert::embed {

TrajectoryEncoder::TrajectoryEncoder(std::size_t tuple_dim, std::size_t hidden, std::size_t outputs,
                                     Rng& rng, const std::string& name)
    : cell_(nn::LayerParams::gated_recurrent(name + ".lstm", tuple_dim, hidden, rng)),
      head_(nn::LayerParams::dense(name + ".head", hidden, outputs, nn::Activation::Identity, rng))
{
}

std::vector<nn::Parameter*> TrajectoryEncoder::parameters()
{
    return {&cell_.weights, &cell_.biases, &head_.weights, &head_.biases};
}

std::vector<const nn::Parameter*> TrajectoryEncoder::parameters() const
{
    return {&cell_.weights, &cell_.biases, &head_.weights, &head_.biases};
}

nn::Var embed_trajectory(const TrajectoryEncoder& encoder, nn::Tape& tape, const nn::Tensor& tuples)
{
    if (tuples.rank() != 2 || tuples.dim(0) == 0)
        throw ContractViolation("embed_trajectory: empty trajectory prefix");
    if (tuples.dim(1) != encoder.tuple_dim())
        throw DimensionError("embed_trajectory: tuple width " + std::to_string(tuples.dim(1)) +
                             " != encoder input " + std::to_string(encoder.tuple_dim()));
    const std::size_t steps = tuples.dim(0), width = tuples.dim(1);
    nn::RecurrentState state = nn::zero_state(tape, encoder.cell());
    nn::Var out;
    for (std::size_t t = 0; t < steps; ++t) {
        nn::Tensor row({1, width});
        for (std::size_t j = 0; j < width; ++j)
            row[j] = tuples[t * width + j];
        std::tie(state, out) = nn::recurrent_step(encoder.cell(), state, tape.constant(std::move(row)));
    }
    const auto& head = encoder.head();
    return nn::affine(out, tape.parameter(head.weights), tape.parameter(head.biases));
}

} // namespace hexpert::embed
