#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "reorient/volume.hpp"

namespace reorient {

/// Channel-major activation tensor [c][d][h][w]; w is the fastest axis and
/// matches Volume3D's x.
template <typename T>
struct Tensor {
    int c = 0, d = 0, h = 0, w = 0;
    std::vector<T> data;

    Tensor() = default;
    Tensor(int channels, int depth, int height, int width)
        : c(channels), d(depth), h(height), w(width),
          data(static_cast<std::size_t>(channels) * depth * height * width, T(0)) {}

    std::size_t spatial() const noexcept { return static_cast<std::size_t>(d) * h * w; }
    T* channel(int k) noexcept { return data.data() + static_cast<std::size_t>(k) * spatial(); }
    const T* channel(int k) const noexcept { return data.data() + static_cast<std::size_t>(k) * spatial(); }
};

enum class Pooling : std::uint32_t { GlobalAverage = 0, Flatten = 1 };

/// Shape of the cascade. Each block is four stride-2 3x3x3 convolutions, each
/// followed by instance normalisation and ReLU, then pooling and two dense
/// layers emitting (tx, ty, tz, alpha, beta, theta).
struct Architecture {
    int blocks = 3;
    int in_channels = 2;
    std::array<int, 4> widths{8, 16, 32, 64};
    int hidden = 32;
    Pooling pooling = Pooling::GlobalAverage;
    /// Input grid; only the flatten pooling depends on it.
    Dims input_dims = kCanonicalDims;

    /// Features entering the first dense layer.
    int pooled_features() const;
    void validate() const;

    friend bool operator==(const Architecture&, const Architecture&) = default;
};

/// Output extent of a stride-2, pad-1, 3-tap convolution.
inline int conv_out(int n) { return (n - 1) / 2 + 1; }

/// Trainable tensors of one reorientation block. The output layer is split
/// into translation and rotation heads so each can be frozen on its own.
template <typename T>
struct BlockWeights {
    std::array<std::vector<T>, 4> conv;  // [out][in * 27]
    std::array<std::vector<T>, 4> gamma;
    std::array<std::vector<T>, 4> beta;
    std::vector<T> fc_w, fc_b;        // [hidden][features]
    std::vector<T> trans_w, trans_b;  // [3][hidden]
    std::vector<T> rot_w, rot_b;      // [3][hidden]

    enum class Group { Trunk, TranslationHead, RotationHead };

    /// Visits every tensor in a fixed order (also the checkpoint order).
    template <typename Fn>
    void visit(Fn&& fn) {
        for (int l = 0; l < 4; ++l) {
            fn(conv[l], Group::Trunk);
            fn(gamma[l], Group::Trunk);
            fn(beta[l], Group::Trunk);
        }
        fn(fc_w, Group::Trunk);
        fn(fc_b, Group::Trunk);
        fn(trans_w, Group::TranslationHead);
        fn(trans_b, Group::TranslationHead);
        fn(rot_w, Group::RotationHead);
        fn(rot_b, Group::RotationHead);
    }
    template <typename Fn>
    void visit(Fn&& fn) const {
        const_cast<BlockWeights*>(this)->visit([&](std::vector<T>& v, Group g) {
            fn(static_cast<const std::vector<T>&>(v), g);
        });
    }

    static BlockWeights zeros(const Architecture& arch);
    std::size_t parameter_count() const;
};

/// Intermediate values kept by a block forward pass for its backward pass.
template <typename T>
struct BlockCache {
    std::array<std::vector<T>, 4> columns;   // im2col of each conv input
    std::array<std::array<int, 3>, 4> in_shape{};  // d, h, w of each conv input
    std::array<Tensor<T>, 4> normalized;     // x-hat per layer
    std::array<std::vector<T>, 4> inv_std;
    std::array<Tensor<T>, 4> activated;      // post-ReLU per layer
    std::vector<T> features;
    std::vector<T> hidden;                   // post-ReLU
};

/// The cascade's weights plus single-block forward / backward passes.
template <typename T>
class ReorientNet {
public:
    ReorientNet() = default;
    explicit ReorientNet(const Architecture& arch);

    /// He-normal conv and hidden weights, unit gamma, zero beta/biases and
    /// zero-initialised output heads (identity cascade).
    void initialize(std::uint64_t seed);

    const Architecture& architecture() const noexcept { return arch_; }
    std::vector<BlockWeights<T>>& blocks() noexcept { return blocks_; }
    const std::vector<BlockWeights<T>>& blocks() const noexcept { return blocks_; }
    std::size_t parameter_count() const;

    /// Residual (tx, ty, tz, alpha, beta, theta) predicted by block `k`.
    /// `cache` may be null when no backward pass follows.
    std::array<double, 6> forward_block(int k, const Tensor<T>& input, BlockCache<T>* cache) const;

    /// Accumulates d loss / d weights of block `k` into `grad`, given
    /// d loss / d residual.
    void backward_block(int k, const BlockCache<T>& cache, const std::array<double, 6>& d_residual,
                        BlockWeights<T>& grad) const;

    template <typename U>
    ReorientNet<U> cast() const {
        ReorientNet<U> out(arch_);
        for (std::size_t b = 0; b < blocks_.size(); ++b) {
            std::vector<const std::vector<T>*> src;
            blocks_[b].visit([&](const std::vector<T>& v, auto) { src.push_back(&v); });
            std::size_t i = 0;
            out.blocks()[b].visit([&](std::vector<U>& v, auto) {
                v.assign(src[i]->begin(), src[i]->end());
                ++i;
            });
        }
        return out;
    }

private:
    Architecture arch_;
    std::vector<BlockWeights<T>> blocks_;
};

/// Two-channel tensor: intensity, and its gradient magnitude scaled to max 1.
template <typename T>
Tensor<T> two_channel(const Volume3D& intensity);

}  // namespace reorient
