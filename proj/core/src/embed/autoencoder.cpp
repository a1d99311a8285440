#include <hexpert/embed/autoencoder.hpp>

#include <hexpert/errors.hpp>
#include <hexpert/nn/loss.hpp>
#include <hexpert/nn/ops.hpp>

#include <algorithm>
#include <cmath>

namespace hexpert::embed {

using nn::Activation;
using nn::LayerParams;
using nn::Tensor;
using nn::Var;

ConvAutoencoder::ConvAutoencoder(const AutoencoderConfig& config, Rng& rng, const std::string& name)
    : config_(config)
{
    if (config.channels.empty())
        throw ContractViolation("autoencoder needs at least one encoder layer");
    sizes_.push_back(config.side);
    std::size_t in_ch = 1;
    for (std::size_t i = 0; i < config.channels.size(); ++i) {
        if (sizes_.back() < 3)
            throw DimensionError("autoencoder input too small for " +
                                 std::to_string(config.channels.size()) + " strided layers");
        encoder_.push_back(LayerParams::conv3x3(name + ".enc" + std::to_string(i), in_ch,
                                                config.channels[i], 2, Activation::LeakyRelu, rng));
        sizes_.push_back((sizes_.back() - 3) / 2 + 1);
        in_ch = config.channels[i];
    }
    latent_dim_ = sizes_.back() * sizes_.back() * in_ch;

    // Decoder layer j restores the spatial size and channel count that the
    // matching encoder layer consumed.
    for (std::size_t j = config.channels.size(); j-- > 0;) {
        const std::size_t out_ch = j == 0 ? 1 : config.channels[j - 1];
        const Activation act = j == 0 ? Activation::Sigmoid : Activation::LeakyRelu;
        decoder_.push_back(LayerParams::conv3x3(name + ".dec" + std::to_string(j),
                                                config.channels[j], out_ch, 1, act, rng));
    }
}

Var ConvAutoencoder::encode(Var images) const
{
    Var z = nn::forward(encoder_, images);
    const auto& s = z.shape();
    return nn::reshape(z, {s[0], s[1] * s[2] * s[3]});
}

Var ConvAutoencoder::reconstruct(Var images) const
{
    Var x = nn::forward(encoder_, images);
    nn::Tape& tape = images.tape();
    const std::size_t layers = decoder_.size();
    for (std::size_t k = 0; k < layers; ++k) {
        const std::size_t target = sizes_[layers - 1 - k];
        const LayerParams& layer = decoder_[k];
        x = nn::resize_nearest(x, target + 2, target + 2);
        x = nn::conv2d(x, tape.parameter(layer.weights), tape.parameter(layer.biases), 1);
        x = nn::activate(x, layer.activation);
    }
    return x;
}

std::vector<nn::Parameter*> ConvAutoencoder::parameters()
{
    auto p = nn::parameters_of(std::span<LayerParams>(encoder_));
    auto d = nn::parameters_of(std::span<LayerParams>(decoder_));
    p.insert(p.end(), d.begin(), d.end());
    return p;
}

std::vector<const nn::Parameter*> ConvAutoencoder::parameters() const
{
    auto p = nn::parameters_of(std::span<const LayerParams>(encoder_));
    auto d = nn::parameters_of(std::span<const LayerParams>(decoder_));
    p.insert(p.end(), d.begin(), d.end());
    return p;
}

ImageEmbedding embed_images(const ConvAutoencoder& ae, const Tensor& images, Pooling pool)
{
    if (images.rank() != 4 || images.dim(0) == 0)
        throw ContractViolation("embed_images needs at least one image");
    nn::Tape tape;
    return pool_latents(ae.encode(tape.constant(images)).value(), pool);
}

ImageEmbedding pool_latents(const Tensor& z, Pooling pool)
{
    if (z.rank() != 2 || z.dim(0) == 0)
        throw ContractViolation("pool_latents needs a non-empty [n, d] matrix");
    const std::size_t n = z.dim(0), d = z.dim(1);
    ImageEmbedding out;
    out.latent.assign(z.data(), z.data() + d);
    for (std::size_t i = 1; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            const double v = z[i * d + j];
            switch (pool) {
            case Pooling::Max:
                out.latent[j] = std::max(out.latent[j], v);
                break;
            case Pooling::Min:
                out.latent[j] = std::min(out.latent[j], v);
                break;
            case Pooling::Mean:
                out.latent[j] += v;
                break;
            }
        }
    if (pool == Pooling::Mean)
        for (auto& v : out.latent)
            v /= static_cast<double>(n);
    return out;
}

double train_autoencoder_step(ConvAutoencoder& ae, const Tensor& images, nn::AdamState& adam)
{
    if (images.rank() != 4 || images.dim(0) == 0)
        throw ContractViolation("train_autoencoder_step needs at least one image");
    nn::Tape tape;
    Var x = tape.constant(images);
    Var loss = nn::loss(nn::LossKind::Mse, ae.reconstruct(x), images);
    const double value = loss.item();
    if (!std::isfinite(value))
        throw DivergenceError("autoencoder reconstruction loss is not finite");
    auto grads = tape.backward(loss);
    auto params = ae.parameters();
    nn::adam_step(params, grads, adam);
    return value;
}

} // namespace hexpert::embed
