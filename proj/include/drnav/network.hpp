#pragma once

#include "drnav/binio.hpp"
#include "drnav/sample.hpp"

#include <Eigen/Dense>

#include <array>
#include <span>
#include <string>
#include <vector>

namespace drnav {

enum class NetArch { full, baseline };

inline const char* to_string(NetArch a) { return a == NetArch::full ? "full" : "baseline"; }

inline NetArch parse_arch(const std::string& s)
{
    if (s == "full") return NetArch::full;
    if (s == "baseline") return NetArch::baseline;
    throw Error("unknown architecture: " + s);
}

struct ConvSpec {
    int filters;
    int kernel;
    int stride;
};

/// Layer sizes. `full` runs image -> conv -> dense -> gate head, then
/// (gate head, state features) -> hidden -> (x, v). `baseline` maps the
/// image straight to (x, v) and ignores state features.
struct NetConfig {
    NetArch arch = NetArch::full;
    int width = 64;
    int height = 48;
    std::array<ConvSpec, 3> conv{{{16, 5, 2}, {32, 3, 2}, {64, 3, 2}}};
    int dense = 128;
    int hidden1 = 64;
    int hidden2 = 32;
    /// Fixed input scales for (delta_position, euler, v_body, omega_body).
    std::array<double, 4> feature_scale{1.0, 1.0 / kPi, 0.125, 0.2};

    std::string describe() const
    {
        std::string s = std::string(to_string(arch)) + ":" + std::to_string(width) + "x" + std::to_string(height);
        for (const auto& c : conv)
            s += ";c" + std::to_string(c.filters) + "k" + std::to_string(c.kernel) + "s" + std::to_string(c.stride);
        s += ";d" + std::to_string(dense) + ";h" + std::to_string(hidden1) + "," + std::to_string(hidden2);
        return s;
    }

    std::uint64_t hash() const { return fnv1a(describe()); }

    void validate() const
    {
        if (width < 16 || height < 16) throw Error("network: input must be at least 16x16");
        for (const auto& c : conv)
            if (c.filters < 1 || c.kernel < 1 || c.stride < 1) throw Error("network: bad conv spec");
        if (dense < 1 || hidden1 < 1 || hidden2 < 1) throw Error("network: bad layer width");
    }
};

struct LossWeights {
    double g1 = 0.1;  ///< speed
    double g2 = 1.0;  ///< gate image position
    double g3 = 0.2;  ///< gate relative orientation
    double g4 = 0.2;  ///< gate distance

    void validate() const
    {
        if (!(g1 >= 0 && g2 >= 0 && g3 >= 0 && g4 >= 0)) throw Error("loss weights must be non-negative");
    }
};

/// Weighted squared error between prediction and label (storage order of NavTargets).
template <typename S>
S loss(const std::array<S, kLabelDim>& pred, const std::array<S, kLabelDim>& label, const LossWeights& w)
{
    auto sq = [&](int i) {
        const S r = pred[static_cast<std::size_t>(i)] - label[static_cast<std::size_t>(i)];
        return r * r;
    };
    return sq(0) + sq(1) + S(w.g1) * sq(2) + S(w.g2) * (sq(3) + sq(4)) + S(w.g3) * (sq(5) + sq(6) + sq(7)) +
           S(w.g4) * sq(8);
}

inline double loss(const NavTargets& pred, const NavTargets& label, const LossWeights& w)
{
    return loss<double>(pred.to_array(), label.to_array(), w);
}

struct ConvGeom {
    int in_c, in_h, in_w;
    int out_c, k, s;
    int out_h, out_w;
    int pad_t, pad_l;

    int patch() const { return in_c * k * k; }
    int out_pixels() const { return out_h * out_w; }
};

/// "Same" padding: output = ceil(input / stride), extra padding on the far side.
inline std::vector<ConvGeom> conv_geometry(const NetConfig& cfg)
{
    std::vector<ConvGeom> g;
    int c = 3, h = cfg.height, w = cfg.width;
    for (const auto& spec : cfg.conv) {
        ConvGeom l{};
        l.in_c = c;
        l.in_h = h;
        l.in_w = w;
        l.out_c = spec.filters;
        l.k = spec.kernel;
        l.s = spec.stride;
        l.out_h = (h + spec.stride - 1) / spec.stride;
        l.out_w = (w + spec.stride - 1) / spec.stride;
        l.pad_t = std::max(0, (l.out_h - 1) * l.s + l.k - h) / 2;
        l.pad_l = std::max(0, (l.out_w - 1) * l.s + l.k - w) / 2;
        g.push_back(l);
        c = l.out_c;
        h = l.out_h;
        w = l.out_w;
    }
    return g;
}

inline int flat_size(const NetConfig& cfg)
{
    const auto g = conv_geometry(cfg).back();
    return g.out_c * g.out_pixels();
}

struct BlockShape {
    std::string name;
    int rows;
    int cols;
};

/// Parameter blocks in declaration order (weight then bias per layer).
inline std::vector<BlockShape> block_shapes(const NetConfig& cfg)
{
    std::vector<BlockShape> out;
    auto layer = [&](const std::string& n, int rows, int fan_in) {
        out.push_back({n + ".w", rows, fan_in});
        out.push_back({n + ".b", rows, 1});
    };
    const auto geo = conv_geometry(cfg);
    for (std::size_t i = 0; i < geo.size(); ++i) layer("conv" + std::to_string(i + 1), geo[i].out_c, geo[i].patch());
    layer("fc", cfg.dense, flat_size(cfg));
    if (cfg.arch == NetArch::full) {
        layer("gate", 6, cfg.dense);
        layer("h1", cfg.hidden1, 6 + kFeatureDim);
    } else {
        layer("h1", cfg.hidden1, cfg.dense);
    }
    layer("h2", cfg.hidden2, cfg.hidden1);
    layer("out", 3, cfg.hidden2);
    return out;
}

template <typename S>
struct NetParams {
    using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

    NetConfig config;
    std::uint64_t seed = 0;
    std::vector<Mat> blocks;

    std::size_t count() const
    {
        std::size_t n = 0;
        for (const auto& b : blocks) n += static_cast<std::size_t>(b.size());
        return n;
    }

    bool finite() const
    {
        for (const auto& b : blocks)
            if (!b.allFinite()) return false;
        return true;
    }

    template <typename T>
    NetParams<T> cast() const
    {
        NetParams<T> out;
        out.config = config;
        out.seed = seed;
        for (const auto& b : blocks) out.blocks.push_back(b.template cast<T>());
        return out;
    }

    /// Same shapes, all zeros.
    NetParams zeros_like() const
    {
        NetParams z;
        z.config = config;
        z.seed = seed;
        for (const auto& b : blocks) z.blocks.push_back(Mat::Zero(b.rows(), b.cols()));
        return z;
    }

    bool operator==(const NetParams& o) const
    {
        if (seed != o.seed || config.hash() != o.config.hash() || blocks.size() != o.blocks.size()) return false;
        for (std::size_t i = 0; i < blocks.size(); ++i)
            if (blocks[i].rows() != o.blocks[i].rows() || blocks[i].cols() != o.blocks[i].cols() || blocks[i] != o.blocks[i])
                return false;
        return true;
    }
};

/// Fan-in scaled uniform weights, zero biases. Draws are made in double so
/// float and double instances with the same seed hold the same values.
template <typename S>
NetParams<S> init_params(const NetConfig& cfg, std::uint64_t seed)
{
    cfg.validate();
    NetParams<S> p;
    p.config = cfg;
    p.seed = seed;
    Rng rng(seed);
    for (const auto& b : block_shapes(cfg)) {
        typename NetParams<S>::Mat m = NetParams<S>::Mat::Zero(b.rows, b.cols);
        if (b.name.back() == 'w') {
            const double bound = std::sqrt(6.0 / b.cols);
            for (Eigen::Index j = 0; j < m.cols(); ++j)
                for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = static_cast<S>(rng.uniform(-bound, bound));
        }
        p.blocks.push_back(std::move(m));
    }
    return p;
}

/// One network input: image bytes (width * height * 3) and 36 raw state features.
struct NetInput {
    std::span<const std::uint8_t> image;
    std::span<const float, kFeatureDim> features;
};

inline NetInput input_of(const TrainingSample& s) { return {s.image, std::span<const float, kFeatureDim>(s.features)}; }

namespace detail {

template <typename S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

template <typename S>
void im2col(const MatX<S>& in, const ConvGeom& g, MatX<S>& cols)
{
    cols.setZero(g.patch(), g.out_pixels());
    for (int c = 0; c < g.in_c; ++c)
        for (int ky = 0; ky < g.k; ++ky)
            for (int kx = 0; kx < g.k; ++kx) {
                const int row = (c * g.k + ky) * g.k + kx;
                for (int oy = 0; oy < g.out_h; ++oy) {
                    const int iy = oy * g.s - g.pad_t + ky;
                    if (iy < 0 || iy >= g.in_h) continue;
                    for (int ox = 0; ox < g.out_w; ++ox) {
                        const int ix = ox * g.s - g.pad_l + kx;
                        if (ix < 0 || ix >= g.in_w) continue;
                        cols(row, oy * g.out_w + ox) = in(c, iy * g.in_w + ix);
                    }
                }
            }
}

template <typename S>
void col2im(const MatX<S>& cols, const ConvGeom& g, MatX<S>& out)
{
    out.setZero(g.in_c, g.in_h * g.in_w);
    for (int c = 0; c < g.in_c; ++c)
        for (int ky = 0; ky < g.k; ++ky)
            for (int kx = 0; kx < g.k; ++kx) {
                const int row = (c * g.k + ky) * g.k + kx;
                for (int oy = 0; oy < g.out_h; ++oy) {
                    const int iy = oy * g.s - g.pad_t + ky;
                    if (iy < 0 || iy >= g.in_h) continue;
                    for (int ox = 0; ox < g.out_w; ++ox) {
                        const int ix = ox * g.s - g.pad_l + kx;
                        if (ix < 0 || ix >= g.in_w) continue;
                        out(c, iy * g.in_w + ix) += cols(row, oy * g.out_w + ox);
                    }
                }
            }
}

template <typename S>
S sigmoid(S z)
{
    return z >= S(0) ? S(1) / (S(1) + std::exp(-z)) : std::exp(z) / (S(1) + std::exp(z));
}

/// Batched forward pass with the caches needed for backprop.
template <typename S>
class Pass {
public:
    using Mat = MatX<S>;

    Pass(const NetParams<S>& p, std::span<const NetInput> batch) : p_(p), geo_(conv_geometry(p.config))
    {
        const NetConfig& cfg = p.config;
        const auto B = static_cast<Eigen::Index>(batch.size());
        const std::size_t pixels = static_cast<std::size_t>(cfg.width * cfg.height);
        conv_.resize(batch.size());
        flat_.resize(flat_size(cfg), B);
        for (Eigen::Index b = 0; b < B; ++b) {
            const NetInput& in = batch[static_cast<std::size_t>(b)];
            if (in.image.size() != pixels * 3) throw Error("network: image size does not match architecture");
            Mat x(3, static_cast<Eigen::Index>(pixels));
            for (std::size_t i = 0; i < pixels; ++i)
                for (int c = 0; c < 3; ++c)
                    x(c, static_cast<Eigen::Index>(i)) = static_cast<S>(in.image[i * 3 + static_cast<std::size_t>(c)]) / S(255);
            auto& cc = conv_[static_cast<std::size_t>(b)];
            const Mat* cur = &x;
            for (std::size_t l = 0; l < geo_.size(); ++l) {
                im2col(*cur, geo_[l], cc.cols[l]);
                cc.act[l] = (w(2 * l) * cc.cols[l]).colwise() + bias(2 * l + 1);
                cc.act[l] = cc.act[l].cwiseMax(S(0));
                cur = &cc.act[l];
            }
            flat_.col(b) = Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, 1>>(cur->data(), cur->size());
        }
        h0_ = ((w(6) * flat_).colwise() + bias(7)).cwiseMax(S(0));
        std::size_t next = 8;
        if (full()) {
            gate_ = (w(next) * h0_).colwise() + bias(next + 1);
            next += 2;
            for (Eigen::Index b = 0; b < B; ++b) {
                gate_(0, b) = std::tanh(gate_(0, b));
                gate_(1, b) = std::tanh(gate_(1, b));
                gate_(5, b) = sigmoid(gate_(5, b));
            }
            in1_.resize(6 + kFeatureDim, B);
            in1_.topRows(6) = gate_;
            for (Eigen::Index b = 0; b < B; ++b) {
                const auto& f = batch[static_cast<std::size_t>(b)].features;
                for (int i = 0; i < kFeatureDim; ++i)
                    in1_(6 + i, b) = static_cast<S>(f[static_cast<std::size_t>(i)]) *
                                     static_cast<S>(cfg.feature_scale[static_cast<std::size_t>((i % 12) / 3)]);
            }
        } else {
            in1_ = h0_;
        }
        h1_ = ((w(next) * in1_).colwise() + bias(next + 1)).cwiseMax(S(0));
        h2_ = ((w(next + 2) * h1_).colwise() + bias(next + 3)).cwiseMax(S(0));
        out_ = (w(next + 4) * h2_).colwise() + bias(next + 5);
        for (Eigen::Index b = 0; b < B; ++b) {
            out_(0, b) = std::tanh(out_(0, b));
            out_(1, b) = std::tanh(out_(1, b));
            out_(2, b) = sigmoid(out_(2, b));
        }
    }

    Eigen::Index batch_size() const { return out_.cols(); }

    std::array<S, kLabelDim> output(Eigen::Index b) const
    {
        std::array<S, kLabelDim> o{};
        o[0] = out_(0, b);
        o[1] = out_(1, b);
        o[2] = out_(2, b);
        if (full())
            for (int i = 0; i < 6; ++i) o[static_cast<std::size_t>(3 + i)] = gate_(i, b);
        return o;
    }

    /// Effective weights: the baseline has no gate outputs to supervise.
    LossWeights effective(const LossWeights& lw) const
    {
        return full() ? lw : LossWeights{lw.g1, 0.0, 0.0, 0.0};
    }

    /// Mean loss over the batch; accumulates its gradient into `grad`.
    S backward(std::span<const std::array<S, kLabelDim>> labels, const LossWeights& lw_in, NetParams<S>& grad) const
    {
        const LossWeights lw = effective(lw_in);
        const Eigen::Index B = batch_size();
        const S inv = S(1) / static_cast<S>(B);
        S total = 0;
        Mat d_out(3, B), d_gate;
        if (full()) d_gate.resize(6, B);
        for (Eigen::Index b = 0; b < B; ++b) {
            const auto o = output(b);
            const auto& y = labels[static_cast<std::size_t>(b)];
            total += loss<S>(o, y, lw);
            auto r = [&](int i) { return o[static_cast<std::size_t>(i)] - y[static_cast<std::size_t>(i)]; };
            d_out(0, b) = S(2) * r(0) * (S(1) - o[0] * o[0]) * inv;
            d_out(1, b) = S(2) * r(1) * (S(1) - o[1] * o[1]) * inv;
            d_out(2, b) = S(2) * S(lw.g1) * r(2) * o[2] * (S(1) - o[2]) * inv;
            if (full()) {
                d_gate(0, b) = S(2) * S(lw.g2) * r(3) * inv;
                d_gate(1, b) = S(2) * S(lw.g2) * r(4) * inv;
                for (int i = 0; i < 3; ++i) d_gate(2 + i, b) = S(2) * S(lw.g3) * r(5 + i) * inv;
                d_gate(5, b) = S(2) * S(lw.g4) * r(8) * inv;
            }
        }

        std::size_t next = full() ? 10 : 8;
        auto dense_back = [&](std::size_t wi, const Mat& dz, const Mat& input) {
            grad.blocks[wi].noalias() += dz * input.transpose();
            grad.blocks[wi + 1].noalias() += dz.rowwise().sum();
        };
        dense_back(next + 4, d_out, h2_);
        Mat dh2 = (w(next + 4).transpose() * d_out).cwiseProduct(relu_mask(h2_));
        dense_back(next + 2, dh2, h1_);
        Mat dh1 = (w(next + 2).transpose() * dh2).cwiseProduct(relu_mask(h1_));
        dense_back(next, dh1, in1_);
        Mat din1 = w(next).transpose() * dh1;
        Mat dh0;
        if (full()) {
            d_gate += din1.topRows(6);
            for (Eigen::Index b = 0; b < B; ++b) {
                d_gate(0, b) *= S(1) - gate_(0, b) * gate_(0, b);
                d_gate(1, b) *= S(1) - gate_(1, b) * gate_(1, b);
                d_gate(5, b) *= gate_(5, b) * (S(1) - gate_(5, b));
            }
            dense_back(8, d_gate, h0_);
            dh0 = (w(8).transpose() * d_gate).cwiseProduct(relu_mask(h0_));
        } else {
            dh0 = din1.cwiseProduct(relu_mask(h0_));
        }
        dense_back(6, dh0, flat_);
        const Mat dflat = w(6).transpose() * dh0;

        Mat dact, dz, dcols;
        for (Eigen::Index b = 0; b < B; ++b) {
            const auto& cc = conv_[static_cast<std::size_t>(b)];
            const ConvGeom& last = geo_.back();
            dact = Eigen::Map<const Mat>(dflat.col(b).data(), last.out_c, last.out_pixels());
            for (std::size_t l = geo_.size(); l-- > 0;) {
                dz = dact.cwiseProduct(relu_mask(cc.act[l]));
                grad.blocks[2 * l].noalias() += dz * cc.cols[l].transpose();
                grad.blocks[2 * l + 1].noalias() += dz.rowwise().sum();
                if (l == 0) break;
                dcols.noalias() = w(2 * l).transpose() * dz;
                col2im(dcols, geo_[l], dact);
            }
        }
        return total * inv;
    }

    /// Hash of every rectified-linear on/off state; changes when a unit crosses its kink.
    std::uint64_t relu_signature() const
    {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        auto mix = [&](const Mat& a) {
            for (Eigen::Index i = 0; i < a.size(); ++i) h = (h ^ (a.data()[i] > S(0) ? 1u : 0u)) * 0x100000001b3ULL;
        };
        for (const auto& cc : conv_)
            for (const auto& a : cc.act) mix(a);
        mix(h0_);
        mix(h1_);
        mix(h2_);
        return h;
    }

private:
    struct ConvCache {
        std::array<Mat, 3> cols;
        std::array<Mat, 3> act;
    };

    bool full() const { return p_.config.arch == NetArch::full; }
    const Mat& w(std::size_t i) const { return p_.blocks[i]; }
    auto bias(std::size_t i) const { return p_.blocks[i].col(0); }
    static Mat relu_mask(const Mat& a) { return (a.array() > S(0)).template cast<S>().matrix(); }

    const NetParams<S>& p_;
    std::vector<ConvGeom> geo_;
    std::vector<ConvCache> conv_;
    Mat flat_, h0_, gate_, in1_, h1_, h2_, out_;
};

template <typename S>
void check_params(const NetParams<S>& p)
{
    const auto shapes = block_shapes(p.config);
    if (shapes.size() != p.blocks.size()) throw Error("network: parameter block count does not match architecture");
    for (std::size_t i = 0; i < shapes.size(); ++i)
        if (p.blocks[i].rows() != shapes[i].rows || p.blocks[i].cols() != shapes[i].cols)
            throw Error("network: parameter block " + shapes[i].name + " has the wrong shape");
    if (!p.finite()) throw Error("network: non-finite parameters");
}

}  // namespace detail

template <typename S>
NavTargets forward(const NetInput& in, const NetParams<S>& p)
{
    detail::check_params(p);
    const detail::Pass<S> pass(p, std::span<const NetInput>(&in, 1));
    const auto o = pass.output(0);
    std::array<double, kLabelDim> a{};
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = static_cast<double>(o[i]);
    return NavTargets::from_array(a);
}

template <typename S>
std::array<S, kLabelDim> label_array(const TrainingSample& s)
{
    std::array<S, kLabelDim> a{};
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = static_cast<S>(s.label[i]);
    return a;
}

/// Exact gradient of the mean batch loss. Returns the loss.
template <typename S>
S gradients(std::span<const TrainingSample* const> batch, const NetParams<S>& p, const LossWeights& w, NetParams<S>& grad)
{
    if (batch.empty()) throw Error("gradients: empty batch");
    detail::check_params(p);
    std::vector<NetInput> in;
    std::vector<std::array<S, kLabelDim>> labels;
    for (const auto* s : batch) {
        in.push_back(input_of(*s));
        labels.push_back(label_array<S>(*s));
    }
    grad = p.zeros_like();
    const detail::Pass<S> pass(p, in);
    return pass.backward(labels, w, grad);
}

/// Mean loss over a dataset, evaluated in chunks.
template <typename S>
double dataset_loss(const Dataset& data, const NetParams<S>& p, const LossWeights& w)
{
    if (data.empty()) throw Error("dataset_loss: empty dataset");
    detail::check_params(p);
    const LossWeights lw = p.config.arch == NetArch::full ? w : LossWeights{w.g1, 0.0, 0.0, 0.0};
    double total = 0.0;
    constexpr std::size_t kChunk = 64;
    for (std::size_t i = 0; i < data.size(); i += kChunk) {
        std::vector<NetInput> in;
        for (std::size_t j = i; j < std::min(data.size(), i + kChunk); ++j) in.push_back(input_of(data.samples[j]));
        const detail::Pass<S> pass(p, in);
        for (std::size_t j = 0; j < in.size(); ++j)
            total += static_cast<double>(
                loss<S>(pass.output(static_cast<Eigen::Index>(j)), label_array<S>(data.samples[i + j]), lw));
    }
    return total / static_cast<double>(data.size());
}

/// Root mean square error of (x, v) predictions.
template <typename S>
double rmse_xv(const Dataset& data, const NetParams<S>& p)
{
    if (data.empty()) throw Error("rmse: empty dataset");
    double sum = 0.0;
    for (const auto& s : data.samples) {
        const auto o = forward(input_of(s), p).to_array();
        for (std::size_t i = 0; i < 3; ++i) {
            const double r = o[i] - static_cast<double>(s.label[i]);
            sum += r * r;
        }
    }
    return std::sqrt(sum / (3.0 * static_cast<double>(data.size())));
}

struct TrainConfig {
    int epochs = 100;
    int batch = 64;
    double lr = 1e-3;
    double momentum = 0.9;
    std::uint64_t seed = 1;
    bool from_scratch = true;
    NetConfig net;
    LossWeights weights;

    void validate() const
    {
        if (epochs < 0 || batch < 1) throw Error("train: need epochs >= 0 and batch >= 1");
        if (!(lr >= 0.0) || !(momentum >= 0.0 && momentum < 1.0)) throw Error("train: bad lr or momentum");
        net.validate();
        weights.validate();
    }
};

struct TrainResult {
    NetParams<float> params;
    std::vector<double> epoch_loss;  ///< mean minibatch loss per epoch
};

/// Momentum SGD with a seeded per-epoch shuffle. Starts from fresh weights
/// when `from_scratch` is set or no initial parameters are given.
template <typename S = float>
struct Trainer {
    static std::pair<NetParams<S>, std::vector<double>> run(const Dataset& data, const TrainConfig& cfg,
                                                            const NetParams<S>* init)
    {
        cfg.validate();
        if (data.empty()) throw Error("train: empty dataset");
        if (data.width != cfg.net.width || data.height != cfg.net.height)
            throw Error("train: dataset image size does not match architecture");
        NetParams<S> p;
        if (cfg.from_scratch || init == nullptr) {
            p = init_params<S>(cfg.net, cfg.seed);
        } else {
            if (init->config.hash() != cfg.net.hash()) throw Error("train: initial parameters have another architecture");
            p = *init;
        }
        NetParams<S> vel = p.zeros_like(), grad;
        std::vector<std::size_t> order(data.size());
        std::vector<double> trace;
        std::vector<const TrainingSample*> batch;
        for (int e = 0; e < cfg.epochs; ++e) {
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            Rng rng(mix_seed(cfg.seed, 0x5EED0000ULL + static_cast<std::uint64_t>(e)));
            for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
            double sum = 0.0;
            for (std::size_t i = 0; i < order.size(); i += static_cast<std::size_t>(cfg.batch)) {
                batch.clear();
                for (std::size_t j = i; j < std::min(order.size(), i + static_cast<std::size_t>(cfg.batch)); ++j)
                    batch.push_back(&data.samples[order[j]]);
                const S l = gradients<S>(batch, p, cfg.weights, grad);
                if (!std::isfinite(static_cast<double>(l)) || !grad.finite())
                    throw Error("train: non-finite loss in epoch " + std::to_string(e));
                sum += static_cast<double>(l) * static_cast<double>(batch.size());
                for (std::size_t k = 0; k < p.blocks.size(); ++k) {
                    vel.blocks[k] = S(cfg.momentum) * vel.blocks[k] - S(cfg.lr) * grad.blocks[k];
                    p.blocks[k] += vel.blocks[k];
                }
            }
            trace.push_back(sum / static_cast<double>(data.size()));
        }
        return {std::move(p), std::move(trace)};
    }
};

inline TrainResult train(const Dataset& data, const TrainConfig& cfg, const NetParams<float>* init = nullptr)
{
    auto [p, trace] = Trainer<float>::run(data, cfg, init);
    return {std::move(p), std::move(trace)};
}

inline constexpr char kCheckpointMagic[6] = {'G', 'R', 'N', 'E', 'T', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

inline void write_checkpoint(const std::string& path, const NetParams<float>& p)
{
    detail::check_params(p);
    ByteWriter w;
    w.bytes(kCheckpointMagic, 6);
    w.uint<std::uint32_t>(kCheckpointVersion);
    w.uint<std::uint64_t>(p.config.hash());
    for (const auto& b : p.blocks)
        for (Eigen::Index j = 0; j < b.cols(); ++j)
            for (Eigen::Index i = 0; i < b.rows(); ++i) w.f32(b(i, j));
    w.save(path);
}

/// Reads a checkpoint whose architecture hash matches one of `candidates`.
inline NetParams<float> read_checkpoint(const std::string& path, std::span<const NetConfig> candidates)
{
    ByteReader r = ByteReader::load(path);
    char magic[6];
    r.bytes(magic, 6);
    if (std::memcmp(magic, kCheckpointMagic, 6) != 0) throw Error("checkpoint: bad magic in " + path);
    if (r.uint<std::uint32_t>() != kCheckpointVersion) throw Error("checkpoint: unsupported version in " + path);
    const auto hash = r.uint<std::uint64_t>();
    const NetConfig* cfg = nullptr;
    for (const auto& c : candidates)
        if (c.hash() == hash) cfg = &c;
    if (cfg == nullptr) throw Error("checkpoint: architecture not recognized in " + path);
    NetParams<float> p;
    p.config = *cfg;
    std::size_t expected = 0;
    for (const auto& s : block_shapes(*cfg)) expected += static_cast<std::size_t>(s.rows * s.cols) * 4;
    if (r.remaining() != expected) throw Error("checkpoint: size does not match architecture in " + path);
    for (const auto& s : block_shapes(*cfg)) {
        NetParams<float>::Mat m(s.rows, s.cols);
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = r.f32();
        p.blocks.push_back(std::move(m));
    }
    if (!p.finite()) throw Error("checkpoint: non-finite parameters in " + path);
    return p;
}

inline NetParams<float> read_checkpoint(const std::string& path, const NetConfig& cfg)
{
    return read_checkpoint(path, std::span<const NetConfig>(&cfg, 1));
}

/// Default full and baseline configurations at the given input size.
inline std::array<NetConfig, 2> standard_configs(int width = 64, int height = 48)
{
    NetConfig f, b;
    f.width = b.width = width;
    f.height = b.height = height;
    b.arch = NetArch::baseline;
    return {f, b};
}

}  // namespace drnav
