#pragma once

#include <hexpert/nn/layers.hpp>

#include <cstddef>
#include <string>
#include <vector>

namespace hexpert::embed {

/// Recurrent encoder over time-ordered step tuples (state, action, reward,
/// normalised time). The final hidden state is mapped to `outputs` values
/// (selector logits, or a single value estimate).
class TrajectoryEncoder {
public:
    TrajectoryEncoder() = default;
    TrajectoryEncoder(std::size_t tuple_dim, std::size_t hidden, std::size_t outputs, Rng& rng,
                      const std::string& name);

    std::size_t tuple_dim() const { return cell_.input_size(); }
    std::size_t hidden_size() const { return cell_.hidden_size(); }
    std::size_t outputs() const { return head_.output_size(); }

    std::vector<nn::Parameter*> parameters();
    std::vector<const nn::Parameter*> parameters() const;

    const nn::LayerParams& cell() const noexcept { return cell_; }
    const nn::LayerParams& head() const noexcept { return head_; }

private:
    nn::LayerParams cell_;
    nn::LayerParams head_;
};

/// Runs the encoder over `tuples` [L, tuple_dim] (L >= 1, rows in time order)
/// and returns head outputs [1, outputs]. An empty prefix is a
/// ContractViolation: callers fall back to the marginal prior instead.
nn::Var embed_trajectory(const TrajectoryEncoder& encoder, nn::Tape& tape, const nn::Tensor& tuples);

} // namespace hexpert::embed
