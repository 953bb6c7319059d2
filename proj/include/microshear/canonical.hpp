#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "core.hpp"
#include "extract_decay.hpp"
#include "radon.hpp"
#include "shearlet.hpp"
#include "wavefront.hpp"

namespace microshear {

// Sinogram wavefront set: points are (angle_idx, offset_idx, dir_bin).
// dir_bin quantizes atan2(b, a) of the covector a dtheta + b dp, theta in
// radians and p in normalized offset units.
struct SinoWavefrontSet : WavefrontSet {
    SinoGeometry geometry;
    SinoWavefrontSet() = default;
    SinoWavefrontSet(const SinoGeometry& g, int dir_bins)
        : WavefrontSet(g.num_angles, g.num_offsets, dir_bins), geometry(g) {}
};

// Nearest index to a continuous one; exact halves go to the lower index.
inline int nearest_index(double t) { return int(std::ceil(t - 0.5)); }

struct SinoCovector {
    double theta; // radians in [0, pi)
    double p;
    double a, b;  // covector a dtheta + b dp
};

// Canonical relation at the continuous level: an image covector with normal
// angle theta0 at x maps to (theta0, x.w ; -x.w_perp, 1).
inline SinoCovector canonical_forward(double x, double y, double theta0) {
    const double c = std::cos(theta0), s = std::sin(theta0);
    return {theta0, x * c + y * s, -(-x * s + y * c), 1.0};
}

// Inverse: x0 = p w + q w_perp with q = -a/b. Empty when b is (near) zero.
inline std::optional<std::pair<double, double>> canonical_inverse(const SinoCovector& v) {
    const double guard = std::tan(0.5 * pi / 180.0);
    if (std::abs(v.b) < guard * std::abs(v.a) || v.b == 0) return std::nullopt;
    const double q = -v.a / v.b;
    const double c = std::cos(v.theta), s = std::sin(v.theta);
    return std::make_pair(v.p * c - q * s, v.p * s + q * c);
}

inline int covector_bin(double a, double b, int N) { return quantize_angle(std::atan2(b, a) * 180.0 / pi, N); }

// Angle index of a normal angle, with the theta -> theta - pi wrap.
struct AngleSnap {
    int index;
    bool wrapped;
};
inline AngleSnap snap_angle(double theta, const SinoGeometry& g) {
    int i = nearest_index(theta / g.angle_step());
    bool wrapped = false;
    if (i >= g.num_angles) {
        i -= g.num_angles;
        wrapped = true;
    }
    return {i, wrapped};
}

inline SinoWavefrontSet image_wf_to_sino_wf(const WavefrontSet& wf, const SinoGeometry& geom, int dir_bins) {
    geom.validate();
    if (wf.rows != geom.grid_size) throw DimensionError("image_wf_to_sino_wf: grid size mismatch");
    if (dir_bins < 2) throw ConfigError("image_wf_to_sino_wf: dir_bins must be >= 2");
    const int M = geom.grid_size;
    SinoWavefrontSet out(geom, dir_bins);
    for (const auto& pt : wf.points) {
        const double th = bin_angle(pt.bin, wf.bins) * pi / 180.0;
        SinoCovector v = canonical_forward(pixel_x(pt.col, M), pixel_y(pt.row, M), th);
        const auto snap = snap_angle(th, geom);
        if (snap.wrapped) {
            v.p = -v.p;
            v.b = -v.b;
        }
        const int j = nearest_index(geom.offset_index(v.p));
        if (j < 0 || j >= geom.num_offsets) continue;
        out.add(snap.index, j, covector_bin(v.a, v.b, dir_bins));
    }
    out.normalize();
    return out;
}

inline WavefrontSet sino_wf_to_image_wf(const SinoWavefrontSet& swf, int image_bins) {
    const auto& geom = swf.geometry;
    geom.validate();
    const int M = geom.grid_size;
    WavefrontSet out(M, image_bins);
    for (const auto& pt : swf.points) {
        const double phi = bin_angle(pt.bin, swf.bins) * pi / 180.0;
        SinoCovector v{geom.angle(pt.row), geom.offset(pt.col), std::cos(phi), std::sin(phi)};
        const auto x0 = canonical_inverse(v);
        if (!x0) continue;
        const int c = nearest_index(col_of_x(x0->first, M));
        const int r = nearest_index(row_of_y(x0->second, M));
        if (r < 0 || r >= M || c < 0 || c >= M) continue;
        out.add(r, c, quantize_angle(v.theta * 180.0 / pi, image_bins));
    }
    out.normalize();
    return out;
}

// Points whose normal angle rounds to a measured angle index.
inline WavefrontSet visible_subset(const WavefrontSet& wf, const SinoGeometry& geom, const std::vector<int>& measured) {
    if (measured.empty()) throw ConfigError("visible_subset: measured angle set is empty");
    std::vector<char> keep(geom.num_angles, 0);
    for (int i : measured) {
        if (i < 0 || i >= geom.num_angles) throw ConfigError("visible_subset: angle index out of range");
        keep[i] = 1;
    }
    WavefrontSet out(wf.rows, wf.cols, wf.bins);
    for (const auto& pt : wf.points)
        if (keep[snap_angle(bin_angle(pt.bin, wf.bins) * pi / 180.0, geom).index]) out.points.push_back(pt);
    return out;
}

// Sinogram treated as an image. The angle axis is extended to [0, 2 pi)
// with g(theta + pi, p) = g(theta, -p), resampled bilinearly to a square
// power-of-two grid, so the periodic transform sees no seam.
struct SinoImage {
    Image image;
    int side = 0;
    double rows_per_angle = 0;  // resampled rows per sinogram angle index
    double cols_per_offset = 0; // resampled cols per offset index
};

inline SinoImage sinogram_as_image(const Sinogram& sino, int min_side = 0) {
    detail::check_sino(sino);
    const auto& g = sino.geometry;
    const int Nt = g.num_angles, Np = g.num_offsets;
    int S = 1;
    while (S < std::max({2 * Nt, Np, min_side})) S <<= 1;
    const int T = 2 * Nt;
    // measured rows of the extended sinogram, ascending
    std::vector<int> rows;
    for (int i : sino.angle_mask) rows.push_back(i);
    for (int i : sino.angle_mask) rows.push_back(i + Nt);
    auto ext = [&](int t, int j) {
        return t < Nt ? sino.values(t, j) : sino.values(t - Nt, Np - 1 - j);
    };
    auto ext_col = [&](int t, double v) {
        const double fv = std::floor(v);
        const int j0 = int(fv);
        const double w = v - fv;
        double out = 0;
        if (j0 >= 0 && j0 < Np) out += (1 - w) * ext(t, j0);
        if (j0 + 1 >= 0 && j0 + 1 < Np) out += w * ext(t, j0 + 1);
        return out;
    };
    SinoImage si;
    si.side = S;
    si.rows_per_angle = double(S) / T;
    si.cols_per_offset = double(S) / Np;
    si.image = make_image(S);
    parallel_for(S, [&](int R) {
        const double u = R * double(T) / S;
        // bracketing measured rows, periodic over T
        auto it = std::upper_bound(rows.begin(), rows.end(), u);
        int hi = it == rows.end() ? rows.front() + T : *it;
        int lo = it == rows.begin() ? rows.back() - T : *(it - 1);
        double w = hi == lo ? 0.0 : (u - lo) / double(hi - lo);
        if (lo == u) w = 0;
        const int tlo = ((lo % T) + T) % T, thi = ((hi % T) + T) % T;
        for (int C = 0; C < S; ++C) {
            const double v = C * double(Np) / S;
            si.image(R, C) = (1 - w) * ext_col(tlo, v) + (w > 0 ? w * ext_col(thi, v) : 0.0);
        }
    });
    return si;
}

// Decay settings for sinograms. Their singularities are square-root fronts
// (chord length near tangency), which lose about half an order per scale
// more than a jump, so the slope test is loose and the quantile lower.
inline DecayParams sinogram_decay_params() {
    DecayParams p;
    p.edge_quantile = 0.7;
    p.slope_threshold = -3.0;
    p.dominance = 0.0;
    return p;
}

// Gaussian smoothing along the angle axis, over measured rows only, with the
// periodic extension g(theta + pi, p) = g(theta, -p). sigma is in angle rows.
inline Sinogram smooth_angles(const Sinogram& sino, double sigma) {
    detail::check_sino(sino);
    if (!(sigma >= 0)) throw ConfigError("smooth_angles: sigma must be >= 0");
    if (sigma == 0) return sino;
    const auto& g = sino.geometry;
    const int Nt = g.num_angles, Np = g.num_offsets;
    const int rad = std::max(1, int(std::ceil(3 * sigma)));
    Sinogram out = sino;
    parallel_for(int(sino.angle_mask.size()), [&](int k) {
        const int i = sino.angle_mask[k];
        for (int j = 0; j < Np; ++j) {
            double acc = 0, ws = 0;
            for (int d = -rad; d <= rad; ++d) {
                int t = i + d, jj = j;
                // one wrap suffices while the window is shorter than pi
                if (t < 0) t += Nt, jj = Np - 1 - j;
                else if (t >= Nt) t -= Nt, jj = Np - 1 - j;
                if (!sino.measured(t)) continue;
                const double w = std::exp(-0.5 * d * d / (sigma * sigma));
                acc += w * sino.values(t, jj);
                ws += w;
            }
            out.values(i, j) = acc / ws;
        }
    });
    return out;
}

// Decay-extracted sinogram singularities, mapped back to the sinogram chart.
// Only detections on measured angle rows are kept. Dense angle sampling
// carries row-to-row noise from rasterization that the detector reads as
// steep fronts, so the rows are first smoothed by angle_sigma.
inline SinoWavefrontSet extract_sinogram_wavefront(const Sinogram& sino, const DecayParams& prm, int dir_bins,
                                                   int num_scales = 4, int pixel_bins = 180,
                                                   double angle_sigma = 2.0) {
    const SinoImage si = sinogram_as_image(smooth_angles(sino, angle_sigma));
    const ShearletSystem sys(si.side, num_scales);
    const WavefrontSet det = extract_wavefront_decay(si.image, sys, prm, pixel_bins);
    const auto& g = sino.geometry;
    const double dtheta_row = g.angle_step() / si.rows_per_angle;
    const double dp_col = g.offset_step() / si.cols_per_offset;
    SinoWavefrontSet out(g, dir_bins);
    for (const auto& pt : det.points) {
        const int i = nearest_index(pt.row / si.rows_per_angle);
        if (i < 0 || i >= g.num_angles || !sino.measured(i)) continue;
        const int j = nearest_index(pt.col / si.cols_per_offset);
        if (j < 0 || j >= g.num_offsets) continue;
        // pixel normal (col, up) -> chart covector
        const double phi = bin_angle(pt.bin, pixel_bins) * pi / 180.0;
        const double a = -std::sin(phi) / dtheta_row;
        const double b = std::cos(phi) / dp_col;
        out.add(i, j, covector_bin(a, b, dir_bins));
    }
    out.normalize();
    return out;
}

} // namespace microshear
