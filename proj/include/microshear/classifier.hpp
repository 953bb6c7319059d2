#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "core.hpp"
#include "fft.hpp"
#include "shearlet.hpp"
#include "wavefront.hpp"

namespace microshear {

constexpr int EDGE = -1; // target id of the edge/no-edge gate

inline std::string target_name(int t) { return t == EDGE ? "EDGE" : std::to_string(t); }

// |coefficients| of one image, stored as float, slice-major.
struct MagnitudeVolume {
    int grid_size = 0;
    int num_slices = 0;
    std::vector<float> data;

    float at(int s, int r, int c) const {
        return data[(std::size_t(s) * grid_size + r) * grid_size + c];
    }
    const float* slice(int s) const { return data.data() + std::size_t(s) * grid_size * grid_size; }
};

inline MagnitudeVolume magnitudes(const CoeffVolume& vol) {
    MagnitudeVolume m;
    m.grid_size = vol.grid_size;
    m.num_slices = vol.num_slices();
    const std::size_t n = std::size_t(vol.grid_size) * vol.grid_size;
    m.data.resize(n * m.num_slices);
    for (int s = 0; s < m.num_slices; ++s)
        for (std::size_t p = 0; p < n; ++p) m.data[s * n + p] = float(std::abs(vol.slices[s].data[p]));
    return m;
}

inline MagnitudeVolume magnitudes(const Image& img, const ShearletSystem& sys) { return magnitudes(dsh_transform(img, sys)); }

struct PatchSample {
    std::vector<float> features; // [slice][dr][dc], P*P*L
    int label = 0;
    int row = 0, col = 0;
    int target = EDGE;
};

enum class ModelKind { LINEAR, MLP1 };

struct ClassifierModel {
    ModelKind kind = ModelKind::LINEAR;
    int target = EDGE;
    int patch = 21;
    int slices = 49;
    int hidden = 0;
    std::vector<double> mean, stdev; // per slice, after the feature transform
    // Feature transform log(x + floor_s) when nonempty, else raw magnitudes.
    std::vector<double> floor;
    // LINEAR: w (dim), b.  MLP1: W1 (hidden x dim), b1 (hidden), w2 (hidden), b2.
    std::vector<double> w, b1, w2;
    double b = 0;
    double final_loss = 0;
    double initial_loss = 0;
    std::vector<double> epoch_loss;

    int dim() const { return patch * patch * slices; }

    // number of trainable parameters
    std::size_t num_params() const {
        return kind == ModelKind::LINEAR ? w.size() + 1 : w.size() + b1.size() + w2.size() + 1;
    }
    double& param(std::size_t i) {
        if (i < w.size()) return w[i];
        i -= w.size();
        if (kind == ModelKind::MLP1) {
            if (i < b1.size()) return b1[i];
            i -= b1.size();
            if (i < w2.size()) return w2[i];
            i -= w2.size();
        }
        return b;
    }
};

struct TrainConfig {
    double learning_rate = 0.05;
    int batch_size = 32;
    int epochs = 30;
    double l2_penalty = 1e-4;
    std::uint64_t seed = 1;
    // > 0: log features, floor = ratio * per-slice mean magnitude
    double log_floor_ratio = 0.0;

    void validate() const {
        if (!(learning_rate > 0)) throw ConfigError("train config: learning_rate must be > 0");
        if (batch_size < 1) throw ConfigError("train config: batch_size must be >= 1");
        if (epochs < 0) throw ConfigError("train config: epochs must be >= 0");
        if (l2_penalty < 0) throw ConfigError("train config: l2_penalty must be >= 0");
        if (log_floor_ratio < 0) throw ConfigError("train config: log_floor_ratio must be >= 0");
    }
};

inline ClassifierModel init_model(ModelKind kind, int patch, int slices, int hidden, int target, std::uint64_t seed) {
    ClassifierModel m;
    m.kind = kind;
    m.patch = patch;
    m.slices = slices;
    m.target = target;
    m.mean.assign(slices, 0.0);
    m.stdev.assign(slices, 1.0);
    Rng rng(seed);
    const int d = m.dim();
    if (kind == ModelKind::LINEAR) {
        m.w.resize(d);
        for (double& x : m.w) x = 0.01 * rng.normal() / std::sqrt(double(d));
    } else {
        if (hidden < 1) throw ConfigError("init_model: MLP1 needs hidden >= 1");
        m.hidden = hidden;
        m.w.resize(std::size_t(hidden) * d);
        for (double& x : m.w) x = rng.normal() / std::sqrt(double(d));
        m.b1.assign(hidden, 0.0);
        m.w2.resize(hidden);
        for (double& x : m.w2) x = rng.normal() / std::sqrt(double(hidden));
    }
    return m;
}

namespace detail {

inline double sigmoid(double z) {
    if (z >= 0) return 1 / (1 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1 + e);
}

// log(1 + exp(-z)) and log(1 + exp(z)) without overflow
inline double softplus(double z) { return z > 30 ? z : (z < -30 ? std::exp(z) : std::log1p(std::exp(z))); }

inline double transform_feature(const ClassifierModel& m, int s, double v) {
    return m.floor.empty() ? v : std::log(v + m.floor[s]);
}

inline void standardize(const ClassifierModel& m, const std::vector<float>& in, std::vector<double>& out) {
    const int pp = m.patch * m.patch;
    out.resize(in.size());
    for (int s = 0; s < m.slices; ++s) {
        const double mu = m.mean[s], inv = 1.0 / m.stdev[s];
        for (int i = 0; i < pp; ++i)
            out[std::size_t(s) * pp + i] = (transform_feature(m, s, in[std::size_t(s) * pp + i]) - mu) * inv;
    }
}

inline double score(const ClassifierModel& m, const std::vector<double>& x, std::vector<double>* hidden_out = nullptr) {
    const int d = m.dim();
    if (m.kind == ModelKind::LINEAR) {
        double z = m.b;
        for (int i = 0; i < d; ++i) z += m.w[i] * x[i];
        return z;
    }
    double z = m.b;
    if (hidden_out) hidden_out->resize(m.hidden);
    for (int h = 0; h < m.hidden; ++h) {
        const double* row = m.w.data() + std::size_t(h) * d;
        double a = m.b1[h];
        for (int i = 0; i < d; ++i) a += row[i] * x[i];
        const double act = a > 0 ? a : 0;
        if (hidden_out) (*hidden_out)[h] = a;
        z += m.w2[h] * act;
    }
    return z;
}

inline double sample_loss(double z, int label) { return label ? softplus(-z) : softplus(z); }

inline double l2_term(const ClassifierModel& m, double l2) {
    double s = 0;
    for (double v : m.w) s += v * v;
    for (double v : m.w2) s += v * v;
    return l2 * s;
}

// Adds scale * d(loss)/d(params) for one standardized sample into g.
inline void accumulate_gradient(const ClassifierModel& m, const std::vector<double>& x, int label, double scale,
                                std::vector<double>& g) {
    const int d = m.dim();
    std::vector<double> pre;
    const double z = score(m, x, &pre);
    const double dz = (sigmoid(z) - label) * scale;
    if (m.kind == ModelKind::LINEAR) {
        for (int i = 0; i < d; ++i) g[i] += dz * x[i];
        g[d] += dz;
        return;
    }
    const std::size_t nw = m.w.size(), H = m.hidden;
    for (std::size_t h = 0; h < H; ++h) {
        const double act = pre[h] > 0 ? pre[h] : 0;
        g[nw + H + h] += dz * act;
        if (pre[h] <= 0) continue;
        const double da = dz * m.w2[h];
        double* row = g.data() + h * d;
        for (int i = 0; i < d; ++i) row[i] += da * x[i];
        g[nw + h] += da;
    }
    g[nw + 2 * H] += dz;
}

inline void add_l2_gradient(const ClassifierModel& m, double l2, std::vector<double>& g) {
    for (std::size_t i = 0; i < m.w.size(); ++i) g[i] += 2 * l2 * m.w[i];
    if (m.kind == ModelKind::MLP1) {
        const std::size_t off = m.w.size() + m.b1.size();
        for (std::size_t h = 0; h < m.w2.size(); ++h) g[off + h] += 2 * l2 * m.w2[h];
    }
}

inline void apply_step(ClassifierModel& m, const std::vector<double>& g, double lr) {
    for (std::size_t i = 0; i < g.size(); ++i) m.param(i) -= lr * g[i];
}

} // namespace detail

inline double predict(const ClassifierModel& m, const std::vector<float>& features) {
    if (int(features.size()) != m.dim())
        throw DimensionError("predict: feature size " + std::to_string(features.size()) + ", model expects " +
                             std::to_string(m.dim()));
    std::vector<double> x;
    detail::standardize(m, features, x);
    return detail::sigmoid(detail::score(m, x));
}

// Mean cross-entropy plus l2 penalty over a dataset.
inline double dataset_loss(const ClassifierModel& m, const std::vector<PatchSample>& data, double l2) {
    if (data.empty()) return 0;
    double s = 0;
    std::vector<double> x;
    for (const auto& smp : data) {
        detail::standardize(m, smp.features, x);
        s += detail::sample_loss(detail::score(m, x), smp.label);
    }
    return s / data.size() + detail::l2_term(m, l2);
}

// Per-slice mean and standard deviation over all sample features.
inline void fit_normalization(ClassifierModel& m, const std::vector<PatchSample>& data, double log_floor_ratio = 0) {
    const int pp = m.patch * m.patch;
    m.floor.clear();
    if (log_floor_ratio > 0) {
        m.floor.assign(m.slices, 0.0);
        for (int s = 0; s < m.slices; ++s) {
            double sum = 0;
            std::size_t n = 0;
            for (const auto& smp : data)
                for (int i = 0; i < pp; ++i, ++n) sum += smp.features[std::size_t(s) * pp + i];
            const double mu = n ? sum / n : 0;
            m.floor[s] = std::max(log_floor_ratio * mu, 1e-12);
        }
    }
    for (int s = 0; s < m.slices; ++s) {
        double sum = 0, sq = 0;
        std::size_t n = 0;
        for (const auto& smp : data)
            for (int i = 0; i < pp; ++i) {
                const double v = detail::transform_feature(m, s, smp.features[std::size_t(s) * pp + i]);
                sum += v;
                sq += v * v;
                ++n;
            }
        const double mu = n ? sum / n : 0;
        const double var = n ? std::max(0.0, sq / n - mu * mu) : 0;
        m.mean[s] = mu;
        m.stdev[s] = std::sqrt(var) > 1e-12 ? std::sqrt(var) : 1.0;
    }
}

// Mini-batch SGD on cross-entropy + l2 * |w|^2. Deterministic per seed.
inline ClassifierModel train_binary(const std::vector<PatchSample>& data, const TrainConfig& cfg, ModelKind kind,
                                    int hidden = 64, int patch = 0) {
    cfg.validate();
    if (data.empty()) throw ConfigError("train_binary: empty dataset");
    bool pos = false, neg = false;
    for (const auto& s : data) (s.label ? pos : neg) = true;
    if (!pos || !neg) throw ConfigError("train_binary: dataset needs both labels");
    const int dim = int(data.front().features.size());
    for (const auto& s : data)
        if (int(s.features.size()) != dim) throw DimensionError("train_binary: inconsistent feature sizes");

    // patch = 0 picks 21 when the layout allows it, else treats features as flat
    if (patch <= 0) patch = dim % (21 * 21) == 0 ? 21 : 1;
    if (dim % (patch * patch) != 0) throw DimensionError("train_binary: feature size is not a multiple of patch^2");
    const int slices = dim / (patch * patch);
    ClassifierModel m = init_model(kind, patch, slices, hidden, data.front().target, cfg.seed);
    fit_normalization(m, data, cfg.log_floor_ratio);

    std::vector<std::vector<double>> X(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) detail::standardize(m, data[i].features, X[i]);
    auto full_loss = [&] {
        double s = 0;
        for (std::size_t i = 0; i < X.size(); ++i) s += detail::sample_loss(detail::score(m, X[i]), data[i].label);
        return s / X.size() + detail::l2_term(m, cfg.l2_penalty);
    };
    m.initial_loss = full_loss();
    Rng rng(cfg.seed ^ 0xa5a5a5a5ULL);
    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<double> g(m.num_params());
    for (int ep = 0; ep < cfg.epochs; ++ep) {
        rng.shuffle(order);
        double ep_loss = 0;
        int nb = 0;
        for (std::size_t s0 = 0; s0 < order.size(); s0 += cfg.batch_size) {
            const std::size_t s1 = std::min(order.size(), s0 + cfg.batch_size);
            std::fill(g.begin(), g.end(), 0.0);
            double bl = 0;
            const double scale = 1.0 / double(s1 - s0);
            for (std::size_t t = s0; t < s1; ++t) {
                const auto i = order[t];
                bl += detail::sample_loss(detail::score(m, X[i]), data[i].label);
                detail::accumulate_gradient(m, X[i], data[i].label, scale, g);
            }
            detail::add_l2_gradient(m, cfg.l2_penalty, g);
            ep_loss += bl * scale + detail::l2_term(m, cfg.l2_penalty);
            ++nb;
            detail::apply_step(m, g, cfg.learning_rate);
        }
        ep_loss /= nb;
        if (!std::isfinite(ep_loss)) throw NumericalError("train_binary: loss diverged at epoch " + std::to_string(ep + 1));
        m.epoch_loss.push_back(ep_loss);
    }
    m.final_loss = full_loss();
    if (!std::isfinite(m.final_loss)) throw NumericalError("train_binary: non-finite final loss");
    return m;
}

// Max relative error of the analytic gradient against central differences
// over 64 random parameter coordinates (step 1e-5).
inline double gradient_check(ClassifierModel m, const PatchSample& smp, double l2 = 0.0, std::uint64_t seed = 7) {
    std::vector<double> x;
    detail::standardize(m, smp.features, x);
    std::vector<double> g(m.num_params(), 0.0);
    detail::accumulate_gradient(m, x, smp.label, 1.0, g);
    detail::add_l2_gradient(m, l2, g);
    auto loss = [&] { return detail::sample_loss(detail::score(m, x), smp.label) + detail::l2_term(m, l2); };
    Rng rng(seed);
    const double h = 1e-5;
    double worst = 0;
    for (int t = 0; t < 64; ++t) {
        const std::size_t i = rng.below(m.num_params());
        double& p = m.param(i);
        const double p0 = p;
        p = p0 + h;
        const double lp = loss();
        p = p0 - h;
        const double lm = loss();
        p = p0;
        const double fd = (lp - lm) / (2 * h);
        worst = std::max(worst, std::abs(g[i] - fd) / std::max(1e-8, std::abs(g[i]) + std::abs(fd)));
    }
    return worst;
}

// Patch of side P centred at (r, c).
inline std::vector<float> extract_patch(const MagnitudeVolume& v, int r, int c, int P) {
    const int h = P / 2;
    std::vector<float> f(std::size_t(P) * P * v.num_slices);
    std::size_t k = 0;
    for (int s = 0; s < v.num_slices; ++s)
        for (int dr = -h; dr <= h; ++dr)
            for (int dc = -h; dc <= h; ++dc) f[k++] = v.at(s, r + dr, c + dc);
    return f;
}

// A centre is a positive for `target` when the truth holds (m, target), or
// any bin at m for the EDGE gate.
inline std::vector<char> positive_mask(const WavefrontSet& truth, int target) {
    std::vector<char> mask(std::size_t(truth.rows) * truth.cols, 0);
    for (const auto& p : truth.points)
        if (target == EDGE || p.bin == target) mask[std::size_t(p.row) * truth.cols + p.col] = 1;
    return mask;
}

namespace detail {

// Samples of one image (index k in its dataset); returns the positive count.
inline std::size_t sample_patches(const MagnitudeVolume& v, const WavefrontSet& truth, int target, int per_image,
                                  std::uint64_t seed, std::size_t k, int P, std::vector<PatchSample>& out) {
    const int M = v.grid_size;
    if (truth.rows != M) throw DimensionError("build_dataset: truth grid does not match the image");
    if (target != EDGE && (target < 0 || target >= truth.bins)) throw ConfigError("build_dataset: target bin out of range");
    const auto mask = positive_mask(truth, target);
    const int h = P / 2;
    std::vector<int> pos, neg;
    for (int r = h; r < M - h; ++r)
        for (int c = h; c < M - h; ++c) (mask[std::size_t(r) * M + c] ? pos : neg).push_back(r * M + c);
    Rng rng(seed ^ (0x9e3779b97f4a7c15ULL * (k + 1)) ^ (std::uint64_t(target + 2) << 40));
    rng.shuffle(pos);
    rng.shuffle(neg);
    const std::size_t np = std::min<std::size_t>(pos.size(), (per_image + 1) / 2);
    const std::size_t nn = std::min<std::size_t>(neg.size(), per_image / 2);
    auto push = [&](int idx, int label) {
        PatchSample smp;
        smp.row = idx / M;
        smp.col = idx % M;
        smp.label = label;
        smp.target = target;
        smp.features = extract_patch(v, smp.row, smp.col, P);
        out.push_back(std::move(smp));
    };
    for (std::size_t i = 0; i < np; ++i) push(pos[i], 1);
    for (std::size_t i = 0; i < nn; ++i) push(neg[i], 0);
    return pos.size();
}

} // namespace detail

// Balanced sampling: ceil(n/2) positives and floor(n/2) negatives per image,
// uniformly without replacement among valid centres.
inline std::vector<PatchSample> build_dataset(const std::vector<MagnitudeVolume>& vols,
                                              const std::vector<WavefrontSet>& truths, int target, int per_image,
                                              std::uint64_t seed, int P = 21) {
    if (vols.size() != truths.size()) throw DimensionError("build_dataset: volumes and truths differ in count");
    if (per_image < 1) throw ConfigError("build_dataset: per_image must be >= 1");
    std::vector<PatchSample> out;
    std::size_t total_pos = 0;
    for (std::size_t k = 0; k < vols.size(); ++k)
        total_pos += detail::sample_patches(vols[k], truths[k], target, per_image, seed, k, P, out);
    if (total_pos == 0) throw ConfigError("build_dataset: insufficient data, no positive centres for target " + target_name(target));
    return out;
}

// Datasets for several targets at once, one transform per image, so only
// one volume is held in memory. Same samples as build_dataset per target.
inline std::map<int, std::vector<PatchSample>> build_datasets(const std::vector<Image>& images,
                                                              const std::vector<WavefrontSet>& truths,
                                                              const ShearletSystem& sys, const std::vector<int>& targets,
                                                              int per_image, std::uint64_t seed, int P = 21) {
    if (images.size() != truths.size()) throw DimensionError("build_datasets: images and truths differ in count");
    if (per_image < 1) throw ConfigError("build_dataset: per_image must be >= 1");
    std::map<int, std::vector<PatchSample>> out;
    std::map<int, std::size_t> total_pos;
    for (std::size_t k = 0; k < images.size(); ++k) {
        const auto v = magnitudes(images[k], sys);
        for (int t : targets) total_pos[t] += detail::sample_patches(v, truths[k], t, per_image, seed, k, P, out[t]);
    }
    for (int t : targets)
        if (total_pos[t] == 0) throw ConfigError("build_dataset: insufficient data, no positive centres for target " + target_name(t));
    return out;
}

inline std::vector<PatchSample> build_dataset(const std::vector<Image>& images, const std::vector<WavefrontSet>& truths,
                                              const ShearletSystem& sys, int target, int per_image, std::uint64_t seed,
                                              int P = 21) {
    std::vector<MagnitudeVolume> vols;
    vols.reserve(images.size());
    for (const auto& img : images) vols.push_back(magnitudes(img, sys));
    return build_dataset(vols, truths, target, per_image, seed, P);
}

namespace detail {

// Correlates a patch-shaped linear filter with the volume at every centre:
// out(m) = sum_s sum_d w[s][d] * v_s(m + d) / stdev_s, via the DFT.
struct VolumeSpectrum {
    int M = 0;
    std::vector<CGrid> slices;
};

// Spectra of the transformed slices; floor as in ClassifierModel.
inline VolumeSpectrum volume_spectrum(const MagnitudeVolume& v, const std::vector<double>& floor = {}) {
    VolumeSpectrum vs;
    vs.M = v.grid_size;
    vs.slices.resize(v.num_slices);
    parallel_for(v.num_slices, [&](int s) {
        CGrid g(v.grid_size, v.grid_size);
        const float* src = v.slice(s);
        for (std::size_t p = 0; p < g.size(); ++p) g.data[p] = floor.empty() ? src[p] : std::log(src[p] + floor[s]);
        Fft::forward2d(g);
        vs.slices[s] = std::move(g);
    });
    return vs;
}

inline std::vector<double> correlate_filter(const VolumeSpectrum& vs, const double* w, const ClassifierModel& m) {
    const int M = vs.M, P = m.patch, h = P / 2, pp = P * P;
    CGrid acc(M, M);
    for (int s = 0; s < m.slices; ++s) {
        CGrid k(M, M);
        const double inv = 1.0 / m.stdev[s];
        for (int dr = -h; dr <= h; ++dr)
            for (int dc = -h; dc <= h; ++dc)
                k((dr + M) % M, (dc + M) % M) = w[std::size_t(s) * pp + (dr + h) * P + (dc + h)] * inv;
        Fft::forward2d(k);
        const auto& a = vs.slices[s].data;
        for (std::size_t p = 0; p < acc.size(); ++p) acc.data[p] += a[p] * std::conj(k.data[p]);
    }
    Fft::inverse2d(acc);
    std::vector<double> out(acc.size());
    for (std::size_t p = 0; p < acc.size(); ++p) out[p] = acc.data[p].real();
    return out;
}

inline double bilinear_clamped(const std::vector<double>& a, int M, double r, double c) {
    r = std::clamp(r, 0.0, M - 1.0);
    c = std::clamp(c, 0.0, M - 1.0);
    const int r0 = std::min(int(r), M - 2), c0 = std::min(int(c), M - 2);
    const double tr = r - r0, tc = c - c0;
    auto at = [&](int rr, int cc) { return a[std::size_t(rr) * M + cc]; };
    return (1 - tr) * ((1 - tc) * at(r0, c0) + tc * at(r0, c0 + 1)) + tr * ((1 - tc) * at(r0 + 1, c0) + tc * at(r0 + 1, c0 + 1));
}

// Constant offset from the normalization: -sum w * mean / stdev.
inline double normalization_offset(const double* w, const ClassifierModel& m) {
    const int pp = m.patch * m.patch;
    double off = 0;
    for (int s = 0; s < m.slices; ++s) {
        double sw = 0;
        for (int i = 0; i < pp; ++i) sw += w[std::size_t(s) * pp + i];
        off -= sw * m.mean[s] / m.stdev[s];
    }
    return off;
}

} // namespace detail

// Probability map at every pixel; only centres at least P/2 from the border
// are meaningful.
inline std::vector<double> probability_map(const detail::VolumeSpectrum& vs, const ClassifierModel& m) {
    const std::size_t n = std::size_t(vs.M) * vs.M;
    std::vector<double> z(n, m.b);
    if (m.kind == ModelKind::LINEAR) {
        const auto c = detail::correlate_filter(vs, m.w.data(), m);
        const double off = detail::normalization_offset(m.w.data(), m);
        for (std::size_t p = 0; p < n; ++p) z[p] += c[p] + off;
    } else {
        const int d = m.dim();
        for (int h = 0; h < m.hidden; ++h) {
            const double* row = m.w.data() + std::size_t(h) * d;
            const auto c = detail::correlate_filter(vs, row, m);
            const double off = detail::normalization_offset(row, m) + m.b1[h];
            for (std::size_t p = 0; p < n; ++p) {
                const double a = c[p] + off;
                if (a > 0) z[p] += m.w2[h] * a;
            }
        }
    }
    for (double& v : z) v = detail::sigmoid(v);
    return z;
}

// How a gated pixel picks its bins. ALL_ABOVE emits every bin whose own
// classifier reaches tau. ARGMAX emits only the most probable bin: the per-bin
// models are trained one against all, so neighbouring bins tend to fire together.
enum class BinRule { ALL_ABOVE, ARGMAX };

// Learned extractor: gate with the EDGE model, then pick bins by the rule.
// Models are keyed by target (EDGE and 0..N-1).
inline WavefrontSet classify_image(const MagnitudeVolume& vol, const std::map<int, ClassifierModel>& models, int N,
                                   double tau = 0.5, bool thin = false, BinRule rule = BinRule::ALL_ABOVE) {
    if (!models.count(EDGE)) throw ConfigError("classify_image: missing EDGE model");
    for (int b = 0; b < N; ++b)
        if (!models.count(b)) throw ConfigError("classify_image: missing model for bin " + std::to_string(b));
    const int M = vol.grid_size;
    const int P = models.at(EDGE).patch;
    for (const auto& [t, m] : models)
        if (m.slices != vol.num_slices || m.patch != P)
            throw DimensionError("classify_image: model " + target_name(t) + " does not match the volume");
    // one spectrum per distinct feature transform
    std::map<std::vector<double>, detail::VolumeSpectrum> spectra;
    for (const auto& [t, m] : models)
        if (!spectra.count(m.floor)) spectra.emplace(m.floor, detail::volume_spectrum(vol, m.floor));
    const auto& em = models.at(EDGE);
    const auto edge = probability_map(spectra.at(em.floor), em);
    std::vector<std::vector<double>> prob(N);
    parallel_for(N, [&](int b) { prob[b] = probability_map(spectra.at(models.at(b).floor), models.at(b)); });
    WavefrontSet wf(M, N);
    const int h = P / 2;
    for (int r = h; r < M - h; ++r)
        for (int c = h; c < M - h; ++c) {
            const std::size_t p = std::size_t(r) * M + c;
            if (edge[p] < tau) continue;
            int best = 0;
            for (int b = 1; b < N; ++b)
                if (prob[b][p] > prob[best][p]) best = b;
            if (thin) {
                const double th = bin_angle(best, N) * pi / 180.0;
                const double dc = std::cos(th), dr = -std::sin(th);
                if (edge[p] < detail::bilinear_clamped(edge, M, r + dr, c + dc) ||
                    edge[p] < detail::bilinear_clamped(edge, M, r - dr, c - dc))
                    continue;
            }
            if (rule == BinRule::ARGMAX) {
                wf.add(r, c, best);
                continue;
            }
            for (int b = 0; b < N; ++b)
                if (prob[b][p] >= tau) wf.add(r, c, b);
        }
    wf.normalize();
    return wf;
}

inline WavefrontSet classify_image(const Image& img, const ShearletSystem& sys, const std::map<int, ClassifierModel>& models,
                                   int N, double tau = 0.5, bool thin = false, BinRule rule = BinRule::ALL_ABOVE) {
    return classify_image(magnitudes(img, sys), models, N, tau, thin, rule);
}

} // namespace microshear
