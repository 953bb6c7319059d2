#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "core.hpp"
#include "shearlet.hpp"
#include "wavefront.hpp"

namespace microshear {

struct DecayParams {
    double edge_quantile = 0.85;   // finest-scale magnitude quantile per slice
    double slope_threshold = -0.5; // minimum log2-magnitude slope across scales
    int min_scales = 4;           // finest scales used in the regression
    // Orientation estimate: first circular harmonic of the shear energies,
    // smoothed per scale. The coarser estimate wins where it is coherent.
    double coarse_sigma = 1.0;
    double fine_sigma = 0.7;
    double coherence_threshold = 0.8;
    bool suppress_non_maxima = true;
    // Side lobes of strong edges: energy must reach this fraction of the
    // largest energy within dominance_reach pixels along the normal.
    double dominance = 0.15;
    int dominance_reach = 16;

    void validate(int num_scales) const {
        if (!(edge_quantile > 0 && edge_quantile < 1)) throw ConfigError("decay params: edge_quantile must be in (0,1)");
        if (min_scales < 2) throw ConfigError("decay params: min_scales must be >= 2");
        if (min_scales > num_scales) throw ConfigError("decay params: min_scales exceeds num_scales");
        if (!std::isfinite(slope_threshold)) throw ConfigError("decay params: slope_threshold must be finite");
        if (coarse_sigma < 0 || fine_sigma < 0) throw ConfigError("decay params: sigmas must be >= 0");
        if (dominance < 0 || dominance > 1) throw ConfigError("decay params: dominance must be in [0,1]");
        if (dominance_reach < 2) throw ConfigError("decay params: dominance_reach must be >= 2");
    }
};

namespace detail {

// Separable periodic Gaussian blur.
inline void gaussian_blur_periodic(std::vector<double>& a, int rows, int cols, double sigma) {
    if (sigma <= 0) return;
    const int rad = std::max(1, int(std::ceil(4 * sigma)));
    std::vector<double> k(2 * rad + 1);
    double s = 0;
    for (int i = -rad; i <= rad; ++i) s += k[i + rad] = std::exp(-0.5 * i * i / (sigma * sigma));
    for (double& v : k) v /= s;
    std::vector<double> tmp(a.size(), 0.0);
    auto wrap = [](int i, int n) { return ((i % n) + n) % n; };
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            double acc = 0;
            for (int i = -rad; i <= rad; ++i) acc += k[i + rad] * a[std::size_t(r) * cols + wrap(c + i, cols)];
            tmp[std::size_t(r) * cols + c] = acc;
        }
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            double acc = 0;
            for (int i = -rad; i <= rad; ++i) acc += k[i + rad] * tmp[std::size_t(wrap(r + i, rows)) * cols + c];
            a[std::size_t(r) * cols + c] = acc;
        }
}

// Linear-interpolated quantile, same rule as numpy's default.
inline double quantile(std::vector<double> v, double q) {
    if (v.empty()) return 0;
    const double pos = q * double(v.size() - 1);
    const std::size_t lo = std::size_t(std::floor(pos));
    std::nth_element(v.begin(), v.begin() + lo, v.end());
    const double a = v[lo];
    if (lo + 1 >= v.size()) return a;
    const double b = *std::min_element(v.begin() + lo + 1, v.end());
    return a + (pos - lo) * (b - a);
}

inline double bilinear_periodic(const std::vector<double>& a, int rows, int cols, double r, double c) {
    const double fr = std::floor(r), fc = std::floor(c);
    const double tr = r - fr, tc = c - fc;
    auto wrap = [](long i, int n) { return int(((i % n) + n) % n); };
    const int r0 = wrap(long(fr), rows), r1 = wrap(long(fr) + 1, rows);
    const int c0 = wrap(long(fc), cols), c1 = wrap(long(fc) + 1, cols);
    auto at = [&](int rr, int cc) { return a[std::size_t(rr) * cols + cc]; };
    return (1 - tr) * ((1 - tc) * at(r0, c0) + tc * at(r0, c1)) + tr * ((1 - tc) * at(r1, c0) + tc * at(r1, c1));
}

} // namespace detail

// Per-pixel normal angle and coherence from one scale.
struct OrientationField {
    std::vector<double> angle_deg;
    std::vector<double> coherence;
};

inline OrientationField scale_orientation(const std::vector<std::vector<double>>& mag, const ShearletSystem& sys,
                                          int j, double sigma) {
    const int M = sys.grid_size();
    const std::size_t n = std::size_t(M) * M;
    const auto idx = sys.slices_of_scale(j);
    const int kj = shear_half_count(j);
    const double P = 4.0 * kj;
    std::vector<double> zr(n, 0.0), zi(n, 0.0), tot(n, 0.0);
    for (int s : idx) {
        const double ph = 2 * pi * circular_shear_coord(sys.key_of(s)) / P;
        const double cr = std::cos(ph), ci = std::sin(ph);
        const auto& m = mag[s];
        for (std::size_t p = 0; p < n; ++p) {
            const double e = m[p] * m[p];
            zr[p] += e * cr;
            zi[p] += e * ci;
            tot[p] += e;
        }
    }
    detail::gaussian_blur_periodic(zr, M, M, sigma);
    detail::gaussian_blur_periodic(zi, M, M, sigma);
    detail::gaussian_blur_periodic(tot, M, M, sigma);
    OrientationField f;
    f.angle_deg.resize(n);
    f.coherence.resize(n);
    for (std::size_t p = 0; p < n; ++p) {
        const double w = std::atan2(zi[p], zr[p]) / (2 * pi) * P;
        f.angle_deg[p] = angle_of_circular_coord(w, kj);
        f.coherence[p] = tot[p] > 0 ? std::hypot(zr[p], zi[p]) / tot[p] : 0.0;
    }
    return f;
}

// For each bin and scale, the slice of that scale nearest in angle.
// Ties go to the smaller |k|.
inline std::vector<std::vector<int>> nearest_slices(const ShearletSystem& sys, int N) {
    std::vector<std::vector<int>> out(sys.num_scales() + 1, std::vector<int>(N, 0));
    for (int j = 1; j <= sys.num_scales(); ++j) {
        const auto idx = sys.slices_of_scale(j);
        for (int b = 0; b < N; ++b) {
            const double ang = bin_angle(b, N);
            int best = -1;
            double bd = 1e9;
            for (int s : idx) {
                const double d = std::abs(angle_diff180(slice_angle(sys.key_of(s)), ang));
                const bool better = d < bd - 1e-12 ||
                                    (std::abs(d - bd) <= 1e-12 && std::abs(sys.key_of(s).k) < std::abs(sys.key_of(best).k));
                if (best < 0 || better) {
                    best = s;
                    bd = d;
                }
            }
            out[j][b] = best;
        }
    }
    return out;
}

// Model-based extractor. A pixel is singular when its finest-scale response
// in the estimated normal direction is large, decays slowly (or grows)
// across the fine scales, and is a maximum along the normal.
inline WavefrontSet extract_wavefront_decay(const CoeffVolume& vol, const ShearletSystem& sys, const DecayParams& prm,
                                            int N) {
    prm.validate(sys.num_scales());
    if (N < 2) throw ConfigError("extract_wavefront_decay: N must be >= 2");
    const int M = sys.grid_size();
    if (vol.grid_size != M || vol.num_slices() != sys.num_slices())
        throw DimensionError("extract_wavefront_decay: volume does not match the system");
    const std::size_t n = std::size_t(M) * M;
    const int S = sys.num_scales();
    const int jlo = std::min(S - prm.min_scales + 1, std::max(1, S - 1));

    std::vector<std::vector<double>> mag(vol.num_slices());
    parallel_for(vol.num_slices(), [&](int s) {
        if (sys.key_of(s).iota == 0 || sys.key_of(s).j < jlo) return;
        mag[s].resize(n);
        const auto& sl = vol.slices[s].data;
        for (std::size_t p = 0; p < n; ++p) mag[s][p] = std::abs(sl[p]);
    });

    OrientationField fine = scale_orientation(mag, sys, S, prm.fine_sigma);
    std::vector<double> theta = fine.angle_deg;
    if (S >= 2) {
        OrientationField coarse = scale_orientation(mag, sys, S - 1, prm.coarse_sigma);
        for (std::size_t p = 0; p < n; ++p)
            if (coarse.coherence[p] >= prm.coherence_threshold) theta[p] = coarse.angle_deg[p];
    }

    const auto near = nearest_slices(sys, N);
    const auto finest = sys.slices_of_scale(S);
    std::vector<double> thr(vol.num_slices(), 0.0);
    parallel_for(int(finest.size()), [&](int i) { thr[finest[i]] = detail::quantile(mag[finest[i]], prm.edge_quantile); });

    std::vector<double> energy(n, 0.0);
    for (int s : finest)
        for (std::size_t p = 0; p < n; ++p) energy[p] += mag[s][p] * mag[s][p];

    std::vector<double> js;
    for (int j = S - prm.min_scales + 1; j <= S; ++j) js.push_back(j);
    double jm = 0;
    for (double j : js) jm += j;
    jm /= js.size();
    double sxx = 0;
    for (double j : js) sxx += (j - jm) * (j - jm);

    std::vector<int> bin_out(n, -1);
    parallel_for(M, [&](int r) {
        std::vector<double> logs(js.size());
        for (int c = 0; c < M; ++c) {
            const std::size_t p = std::size_t(r) * M + c;
            const int b = quantize_angle(theta[p], N);
            const int sf = near[S][b];
            if (!(mag[sf][p] > thr[sf])) continue;
            double lm = 0;
            for (std::size_t t = 0; t < js.size(); ++t) {
                const int s = near[int(js[t])][b];
                logs[t] = std::log2(std::max(mag[s][p], 1e-12));
                lm += logs[t];
            }
            lm /= js.size();
            double sxy = 0;
            for (std::size_t t = 0; t < js.size(); ++t) sxy += (js[t] - jm) * (logs[t] - lm);
            if (sxy / sxx < prm.slope_threshold) continue;
            if (prm.suppress_non_maxima) {
                const double th = theta[p] * pi / 180.0;
                const double dc = std::cos(th), dr = -std::sin(th);
                const double e0 = energy[p];
                if (e0 < detail::bilinear_periodic(energy, M, M, r + dr, c + dc)) continue;
                if (e0 < detail::bilinear_periodic(energy, M, M, r - dr, c - dc)) continue;
            }
            if (prm.dominance > 0) {
                const double th = theta[p] * pi / 180.0;
                const double dc = std::cos(th), dr = -std::sin(th);
                double mx = energy[p];
                for (int t = 2; t <= prm.dominance_reach; ++t)
                    for (int sg : {-1, 1})
                        mx = std::max(mx, detail::bilinear_periodic(energy, M, M, r + sg * t * dr, c + sg * t * dc));
                if (energy[p] < prm.dominance * mx) continue;
            }
            bin_out[p] = b;
        }
    });

    WavefrontSet wf(M, N);
    for (int r = 0; r < M; ++r)
        for (int c = 0; c < M; ++c)
            if (int b = bin_out[std::size_t(r) * M + c]; b >= 0) wf.add(r, c, b);
    wf.normalize();
    return wf;
}

inline WavefrontSet extract_wavefront_decay(const Image& img, const ShearletSystem& sys, const DecayParams& prm, int N) {
    return extract_wavefront_decay(dsh_transform(img, sys), sys, prm, N);
}

} // namespace microshear
