#include "reorient/nn.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Core>

#include "reorient/error.hpp"

namespace reorient {

namespace {

constexpr int kTaps = 27;
constexpr double kNormEps = 1e-5;

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMapMat = Eigen::Map<const RowMat<T>>;

// Valid output range [lo, hi) along one axis for kernel tap `k` (0..2) with
// stride 2 and padding 1: input index 2*o - 1 + k must lie in [0, n).
inline void tap_range(int k, int n_in, int n_out, int& lo, int& hi) {
    lo = (k == 0) ? 1 : 0;
    hi = n_in - k < 0 ? 0 : std::min(n_out, (n_in - k) / 2 + 1);
}

template <typename T>
void im2col(const Tensor<T>& x, int od, int oh, int ow, std::vector<T>& col) {
    const std::size_t p = static_cast<std::size_t>(od) * oh * ow;
    col.assign(static_cast<std::size_t>(x.c) * kTaps * p, T(0));
    for (int ci = 0; ci < x.c; ++ci) {
        const T* src = x.channel(ci);
        for (int kz = 0; kz < 3; ++kz) {
            int z0, z1;
            tap_range(kz, x.d, od, z0, z1);
            for (int ky = 0; ky < 3; ++ky) {
                int y0, y1;
                tap_range(ky, x.h, oh, y0, y1);
                for (int kx = 0; kx < 3; ++kx) {
                    int x0, x1;
                    tap_range(kx, x.w, ow, x0, x1);
                    T* dst = col.data() + (static_cast<std::size_t>(ci) * kTaps + kz * 9 + ky * 3 + kx) * p;
                    for (int oz = z0; oz < z1; ++oz) {
                        const int iz = 2 * oz - 1 + kz;
                        for (int oy = y0; oy < y1; ++oy) {
                            const int iy = 2 * oy - 1 + ky;
                            const T* row = src + (static_cast<std::size_t>(iz) * x.h + iy) * x.w;
                            T* out = dst + (static_cast<std::size_t>(oz) * oh + oy) * ow;
                            for (int ox = x0; ox < x1; ++ox) out[ox] = row[2 * ox - 1 + kx];
                        }
                    }
                }
            }
        }
    }
}

template <typename T>
void col2im(const std::vector<T>& col, int od, int oh, int ow, Tensor<T>& dx) {
    const std::size_t p = static_cast<std::size_t>(od) * oh * ow;
    std::fill(dx.data.begin(), dx.data.end(), T(0));
    for (int ci = 0; ci < dx.c; ++ci) {
        T* dst = dx.channel(ci);
        for (int kz = 0; kz < 3; ++kz) {
            int z0, z1;
            tap_range(kz, dx.d, od, z0, z1);
            for (int ky = 0; ky < 3; ++ky) {
                int y0, y1;
                tap_range(ky, dx.h, oh, y0, y1);
                for (int kx = 0; kx < 3; ++kx) {
                    int x0, x1;
                    tap_range(kx, dx.w, ow, x0, x1);
                    const T* src = col.data() + (static_cast<std::size_t>(ci) * kTaps + kz * 9 + ky * 3 + kx) * p;
                    for (int oz = z0; oz < z1; ++oz) {
                        const int iz = 2 * oz - 1 + kz;
                        for (int oy = y0; oy < y1; ++oy) {
                            const int iy = 2 * oy - 1 + ky;
                            T* row = dst + (static_cast<std::size_t>(iz) * dx.h + iy) * dx.w;
                            const T* in = src + (static_cast<std::size_t>(oz) * oh + oy) * ow;
                            for (int ox = x0; ox < x1; ++ox) row[2 * ox - 1 + kx] += in[ox];
                        }
                    }
                }
            }
        }
    }
}

}  // namespace

int Architecture::pooled_features() const {
    if (pooling == Pooling::GlobalAverage) return widths[3];
    int d = input_dims.nz, h = input_dims.ny, w = input_dims.nx;
    for (int l = 0; l < 4; ++l) {
        d = conv_out(d);
        h = conv_out(h);
        w = conv_out(w);
    }
    return widths[3] * d * h * w;
}

void Architecture::validate() const {
    if (blocks < 1) throw InvalidArgument("architecture needs at least one block");
    if (in_channels < 1 || hidden < 1) throw InvalidArgument("architecture sizes must be positive");
    for (int w : widths) {
        if (w < 1) throw InvalidArgument("architecture widths must be positive");
    }
    if (pooling != Pooling::GlobalAverage && pooling != Pooling::Flatten) {
        throw InvalidArgument("unknown pooling mode");
    }
    if (pooling == Pooling::Flatten && !input_dims.positive()) {
        throw InvalidArgument("flatten pooling needs positive input dims");
    }
}

template <typename T>
BlockWeights<T> BlockWeights<T>::zeros(const Architecture& arch) {
    BlockWeights<T> b;
    int in = arch.in_channels;
    for (std::size_t l = 0; l < 4; ++l) {
        const int out = arch.widths[l];
        b.conv[l].assign(static_cast<std::size_t>(out) * in * kTaps, T(0));
        b.gamma[l].assign(static_cast<std::size_t>(out), T(0));
        b.beta[l].assign(static_cast<std::size_t>(out), T(0));
        in = out;
    }
    const auto features = static_cast<std::size_t>(arch.pooled_features());
    const auto hidden = static_cast<std::size_t>(arch.hidden);
    b.fc_w.assign(hidden * features, T(0));
    b.fc_b.assign(hidden, T(0));
    b.trans_w.assign(3 * hidden, T(0));
    b.trans_b.assign(3, T(0));
    b.rot_w.assign(3 * hidden, T(0));
    b.rot_b.assign(3, T(0));
    return b;
}

template <typename T>
std::size_t BlockWeights<T>::parameter_count() const {
    std::size_t n = 0;
    visit([&](const std::vector<T>& v, Group) { n += v.size(); });
    return n;
}

template <typename T>
ReorientNet<T>::ReorientNet(const Architecture& arch) : arch_(arch) {
    arch_.validate();
    blocks_.assign(static_cast<std::size_t>(arch.blocks), BlockWeights<T>::zeros(arch));
}

template <typename T>
void ReorientNet<T>::initialize(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (auto& b : blocks_) {
        int in = arch_.in_channels;
        for (std::size_t l = 0; l < 4; ++l) {
            const double scale = std::sqrt(2.0 / (in * kTaps));
            for (T& w : b.conv[l]) w = static_cast<T>(scale * gauss(rng));
            std::fill(b.gamma[l].begin(), b.gamma[l].end(), T(1));
            std::fill(b.beta[l].begin(), b.beta[l].end(), T(0));
            in = arch_.widths[l];
        }
        const double scale = std::sqrt(2.0 / arch_.pooled_features());
        for (T& w : b.fc_w) w = static_cast<T>(scale * gauss(rng));
        std::fill(b.fc_b.begin(), b.fc_b.end(), T(0));
        std::fill(b.trans_w.begin(), b.trans_w.end(), T(0));
        std::fill(b.trans_b.begin(), b.trans_b.end(), T(0));
        std::fill(b.rot_w.begin(), b.rot_w.end(), T(0));
        std::fill(b.rot_b.begin(), b.rot_b.end(), T(0));
    }
}

template <typename T>
std::size_t ReorientNet<T>::parameter_count() const {
    std::size_t n = 0;
    for (const auto& b : blocks_) n += b.parameter_count();
    return n;
}

template <typename T>
std::array<double, 6> ReorientNet<T>::forward_block(int k, const Tensor<T>& input,
                                                    BlockCache<T>* cache) const {
    if (input.c != arch_.in_channels) {
        throw ShapeError("block input has " + std::to_string(input.c) + " channels, expected " +
                         std::to_string(arch_.in_channels));
    }
    if (arch_.pooling == Pooling::Flatten &&
        !(Dims{input.w, input.h, input.d} == arch_.input_dims)) {
        throw ShapeError("flatten pooling requires the configured input dims");
    }
    const BlockWeights<T>& wts = blocks_.at(static_cast<std::size_t>(k));
    BlockCache<T> local;
    BlockCache<T>& c = cache ? *cache : local;

    const Tensor<T>* x = &input;
    for (std::size_t l = 0; l < 4; ++l) {
        const int od = conv_out(x->d), oh = conv_out(x->h), ow = conv_out(x->w);
        const int cout = arch_.widths[l];
        const int kdim = x->c * kTaps;
        const std::size_t p = static_cast<std::size_t>(od) * oh * ow;
        c.in_shape[l] = {x->d, x->h, x->w};
        im2col(*x, od, oh, ow, c.columns[l]);

        Tensor<T> y(cout, od, oh, ow);
        ConstMapMat<T> w(wts.conv[l].data(), cout, kdim);
        ConstMapMat<T> col(c.columns[l].data(), kdim, static_cast<Eigen::Index>(p));
        MapMat<T> out(y.data.data(), cout, static_cast<Eigen::Index>(p));
        out.noalias() = w * col;

        // Instance normalisation then ReLU.
        Tensor<T>& xhat = c.normalized[l];
        xhat = Tensor<T>(cout, od, oh, ow);
        c.inv_std[l].assign(static_cast<std::size_t>(cout), T(0));
        Tensor<T>& act = c.activated[l];
        act = Tensor<T>(cout, od, oh, ow);
        for (int ch = 0; ch < cout; ++ch) {
            const T* yc = y.channel(ch);
            double mean = 0.0;
            for (std::size_t i = 0; i < p; ++i) mean += yc[i];
            mean /= static_cast<double>(p);
            double var = 0.0;
            for (std::size_t i = 0; i < p; ++i) {
                const double dv = yc[i] - mean;
                var += dv * dv;
            }
            var /= static_cast<double>(p);
            const double inv = 1.0 / std::sqrt(var + kNormEps);
            c.inv_std[l][static_cast<std::size_t>(ch)] = static_cast<T>(inv);
            const T g = wts.gamma[l][static_cast<std::size_t>(ch)];
            const T bta = wts.beta[l][static_cast<std::size_t>(ch)];
            T* xh = xhat.channel(ch);
            T* a = act.channel(ch);
            for (std::size_t i = 0; i < p; ++i) {
                xh[i] = static_cast<T>((yc[i] - mean) * inv);
                a[i] = std::max(T(0), g * xh[i] + bta);
            }
        }
        x = &act;
    }

    const Tensor<T>& last = c.activated[3];
    const int features = arch_.pooled_features();
    c.features.assign(static_cast<std::size_t>(features), T(0));
    if (arch_.pooling == Pooling::GlobalAverage) {
        const std::size_t p = last.spatial();
        for (int ch = 0; ch < last.c; ++ch) {
            double s = 0.0;
            const T* a = last.channel(ch);
            for (std::size_t i = 0; i < p; ++i) s += a[i];
            c.features[static_cast<std::size_t>(ch)] = static_cast<T>(s / static_cast<double>(p));
        }
    } else {
        std::copy(last.data.begin(), last.data.end(), c.features.begin());
    }

    const int hidden = arch_.hidden;
    c.hidden.assign(static_cast<std::size_t>(hidden), T(0));
    for (int h = 0; h < hidden; ++h) {
        double s = wts.fc_b[static_cast<std::size_t>(h)];
        const T* row = wts.fc_w.data() + static_cast<std::size_t>(h) * features;
        for (int f = 0; f < features; ++f) s += static_cast<double>(row[f]) * c.features[static_cast<std::size_t>(f)];
        c.hidden[static_cast<std::size_t>(h)] = static_cast<T>(std::max(0.0, s));
    }

    std::array<double, 6> residual{};
    for (int o = 0; o < 3; ++o) {
        double st = wts.trans_b[static_cast<std::size_t>(o)];
        double sr = wts.rot_b[static_cast<std::size_t>(o)];
        for (int h = 0; h < hidden; ++h) {
            const double hv = c.hidden[static_cast<std::size_t>(h)];
            st += wts.trans_w[static_cast<std::size_t>(o * hidden + h)] * hv;
            sr += wts.rot_w[static_cast<std::size_t>(o * hidden + h)] * hv;
        }
        residual[static_cast<std::size_t>(o)] = st;
        residual[static_cast<std::size_t>(o + 3)] = sr;
    }
    return residual;
}

template <typename T>
void ReorientNet<T>::backward_block(int k, const BlockCache<T>& c,
                                    const std::array<double, 6>& d_residual,
                                    BlockWeights<T>& grad) const {
    const BlockWeights<T>& wts = blocks_.at(static_cast<std::size_t>(k));
    const int hidden = arch_.hidden;
    const int features = arch_.pooled_features();

    // Output heads.
    std::vector<double> d_hidden(static_cast<std::size_t>(hidden), 0.0);
    for (int o = 0; o < 3; ++o) {
        const double dt = d_residual[static_cast<std::size_t>(o)];
        const double dr = d_residual[static_cast<std::size_t>(o + 3)];
        grad.trans_b[static_cast<std::size_t>(o)] += static_cast<T>(dt);
        grad.rot_b[static_cast<std::size_t>(o)] += static_cast<T>(dr);
        for (int h = 0; h < hidden; ++h) {
            const auto idx = static_cast<std::size_t>(o * hidden + h);
            const double hv = c.hidden[static_cast<std::size_t>(h)];
            grad.trans_w[idx] += static_cast<T>(dt * hv);
            grad.rot_w[idx] += static_cast<T>(dr * hv);
            d_hidden[static_cast<std::size_t>(h)] += dt * wts.trans_w[idx] + dr * wts.rot_w[idx];
        }
    }

    // Hidden dense layer behind its ReLU.
    std::vector<double> d_features(static_cast<std::size_t>(features), 0.0);
    for (int h = 0; h < hidden; ++h) {
        if (!(c.hidden[static_cast<std::size_t>(h)] > T(0))) continue;
        const double dh = d_hidden[static_cast<std::size_t>(h)];
        grad.fc_b[static_cast<std::size_t>(h)] += static_cast<T>(dh);
        const std::size_t row = static_cast<std::size_t>(h) * features;
        for (int f = 0; f < features; ++f) {
            grad.fc_w[row + f] += static_cast<T>(dh * c.features[static_cast<std::size_t>(f)]);
            d_features[static_cast<std::size_t>(f)] += dh * wts.fc_w[row + f];
        }
    }

    // Pooling.
    const Tensor<T>& last = c.activated[3];
    Tensor<T> d_act(last.c, last.d, last.h, last.w);
    if (arch_.pooling == Pooling::GlobalAverage) {
        const std::size_t p = last.spatial();
        for (int ch = 0; ch < last.c; ++ch) {
            const T v = static_cast<T>(d_features[static_cast<std::size_t>(ch)] / static_cast<double>(p));
            std::fill(d_act.channel(ch), d_act.channel(ch) + p, v);
        }
    } else {
        for (std::size_t i = 0; i < d_act.data.size(); ++i) d_act.data[i] = static_cast<T>(d_features[i]);
    }

    for (int li = 3; li >= 0; --li) {
        const auto l = static_cast<std::size_t>(li);
        const Tensor<T>& act = c.activated[l];
        const Tensor<T>& xhat = c.normalized[l];
        const std::size_t p = act.spatial();
        const int cout = act.c;

        // ReLU and instance normalisation.
        Tensor<T> d_conv(cout, act.d, act.h, act.w);
        for (int ch = 0; ch < cout; ++ch) {
            const T* a = act.channel(ch);
            const T* xh = xhat.channel(ch);
            T* da = d_act.channel(ch);
            const double g = wts.gamma[l][static_cast<std::size_t>(ch)];
            double sum_dy = 0.0, sum_dy_xhat = 0.0;
            for (std::size_t i = 0; i < p; ++i) {
                if (!(a[i] > T(0))) da[i] = T(0);
                sum_dy += da[i];
                sum_dy_xhat += static_cast<double>(da[i]) * xh[i];
            }
            grad.gamma[l][static_cast<std::size_t>(ch)] += static_cast<T>(sum_dy_xhat);
            grad.beta[l][static_cast<std::size_t>(ch)] += static_cast<T>(sum_dy);
            const double inv = c.inv_std[l][static_cast<std::size_t>(ch)];
            const double n = static_cast<double>(p);
            T* dc = d_conv.channel(ch);
            // dx = g * inv / n * (n * dy - sum(dy) - xhat * sum(dy * xhat))
            for (std::size_t i = 0; i < p; ++i) {
                dc[i] = static_cast<T>(g * inv / n * (n * da[i] - sum_dy - xh[i] * sum_dy_xhat));
            }
        }

        // Convolution.
        const int cin = li == 0 ? arch_.in_channels : arch_.widths[l - 1];
        const int kdim = cin * kTaps;
        ConstMapMat<T> dy(d_conv.data.data(), cout, static_cast<Eigen::Index>(p));
        ConstMapMat<T> col(c.columns[l].data(), kdim, static_cast<Eigen::Index>(p));
        MapMat<T> dw(grad.conv[l].data(), cout, kdim);
        dw.noalias() += dy * col.transpose();
        if (li == 0) break;

        ConstMapMat<T> w(wts.conv[l].data(), cout, kdim);
        std::vector<T> dcol(static_cast<std::size_t>(kdim) * p);
        MapMat<T> dcol_m(dcol.data(), kdim, static_cast<Eigen::Index>(p));
        dcol_m.noalias() = w.transpose() * dy;
        const auto& s = c.in_shape[l];
        d_act = Tensor<T>(cin, s[0], s[1], s[2]);
        col2im(dcol, act.d, act.h, act.w, d_act);
    }
}

template <typename T>
Tensor<T> two_channel(const Volume3D& intensity) {
    const Dims& d = intensity.dims();
    Tensor<T> t(2, d.nz, d.ny, d.nx);
    const auto src = intensity.data();
    std::copy(src.begin(), src.end(), t.channel(0));
    const Volume3D grad = gradient_magnitude(intensity);
    const float peak = grad.max_value();
    const auto g = grad.data();
    T* dst = t.channel(1);
    if (peak > 0.0f) {
        for (std::size_t i = 0; i < g.size(); ++i) dst[i] = static_cast<T>(g[i] / peak);
    }
    return t;
}

template struct BlockWeights<float>;
template struct BlockWeights<double>;
template class ReorientNet<float>;
template class ReorientNet<double>;
template Tensor<float> two_channel<float>(const Volume3D&);
template Tensor<double> two_channel<double>(const Volume3D&);

}  // namespace reorient
