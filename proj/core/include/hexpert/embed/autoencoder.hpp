#pragma once

#include <hexpert/nn/adam.hpp>
#include <hexpert/nn/layers.hpp>

#include <cstddef>
#include <string>
#include <vector>

namespace hexpert::embed {

struct AutoencoderConfig {
    std::size_t side = 28;
    /// Encoder filter counts; each layer is a stride-2 3x3 convolution.
    std::vector<std::size_t> channels{16, 16, 4};
};

/// Strided-convolution encoder with a mirrored decoder built from
/// nearest-neighbour resizes followed by stride-1 3x3 convolutions.
class ConvAutoencoder {
public:
    ConvAutoencoder() = default;
    ConvAutoencoder(const AutoencoderConfig& config, Rng& rng, const std::string& name = "ae");

    /// images [n,side,side,1] -> flattened bottleneck [n, latent_dim()].
    nn::Var encode(nn::Var images) const;
    /// images [n,side,side,1] -> reconstruction in (0,1), same shape.
    nn::Var reconstruct(nn::Var images) const;

    std::size_t latent_dim() const noexcept { return latent_dim_; }
    const AutoencoderConfig& config() const noexcept { return config_; }

    std::vector<nn::Parameter*> parameters();
    std::vector<const nn::Parameter*> parameters() const;

private:
    AutoencoderConfig config_;
    std::vector<nn::LayerParams> encoder_;
    std::vector<nn::LayerParams> decoder_;
    std::vector<std::size_t> sizes_; // spatial side after each encoder layer, sizes_[0] = input
    std::size_t latent_dim_ = 0;
};

enum class Pooling { Max, Mean, Min };

struct ImageEmbedding {
    std::vector<double> latent;
};

/// Per-image bottleneck vectors pooled elementwise. The embedding is a
/// constant for downstream consumers. ContractViolation on an empty batch.
ImageEmbedding embed_images(const ConvAutoencoder& ae, const nn::Tensor& images,
                            Pooling pool = Pooling::Max);

/// Elementwise pooling over the rows of latents [n, d].
ImageEmbedding pool_latents(const nn::Tensor& latents, Pooling pool);

/// One Adam step on reconstruction MSE; returns the loss before the step.
double train_autoencoder_step(ConvAutoencoder& ae, const nn::Tensor& images, nn::AdamState& adam);

} // namespace hexpert::embed
