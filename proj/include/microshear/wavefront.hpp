#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "core.hpp"

namespace microshear {

// Orientation bins index normal directions modulo 180 degrees.
inline double bin_width(int N) { return 180.0 / N; }
inline double bin_angle(int b, int N) { return b * bin_width(N); }

inline double wrap180(double deg) {
    double t = std::fmod(deg, 180.0);
    if (t < 0) t += 180.0;
    return t;
}

// Nearest bin, exact half-way angles go to the smaller bin.
inline int quantize_angle(double deg, int N) {
    const double t = wrap180(deg) / bin_width(N);
    int b = int(std::ceil(t - 0.5));
    b %= N;
    if (b < 0) b += N;
    return b;
}

inline int circular_bin_distance(int a, int b, int N) {
    int d = std::abs(a - b) % N;
    return std::min(d, N - d);
}

// Signed smallest difference a - b of two mod-180 angles, in (-90, 90].
inline double angle_diff180(double a, double b) {
    double d = wrap180(a - b);
    return d > 90.0 ? d - 180.0 : d;
}

struct WfPoint {
    int row = 0;
    int col = 0;
    int bin = 0;
    auto operator<=>(const WfPoint&) const = default;
};

// A digital wavefront set: sorted, duplicate-free list of (row, col, bin).
// The same container holds sinogram points as (angle_idx, offset_idx, dir_bin).
struct WavefrontSet {
    int rows = 0;
    int cols = 0;
    int bins = 180;
    std::vector<WfPoint> points;

    WavefrontSet() = default;
    WavefrontSet(int M, int N) : rows(M), cols(M), bins(N) {}
    WavefrontSet(int r, int c, int N) : rows(r), cols(c), bins(N) {}

    int grid_size() const { return rows; }
    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }

    void add(int r, int c, int b) { points.push_back({r, c, b}); }

    // Sort and drop duplicates; call after a batch of add().
    void normalize() {
        std::sort(points.begin(), points.end());
        points.erase(std::unique(points.begin(), points.end()), points.end());
    }

    bool contains(const WfPoint& p) const { return std::binary_search(points.begin(), points.end(), p); }

    bool valid() const {
        for (std::size_t i = 0; i < points.size(); ++i) {
            const auto& p = points[i];
            if (p.row < 0 || p.row >= rows || p.col < 0 || p.col >= cols || p.bin < 0 || p.bin >= bins)
                return false;
            if (i > 0 && !(points[i - 1] < p)) return false;
        }
        return true;
    }
};

// Re-quantize the orientations of a set to N bins.
inline WavefrontSet rebin(const WavefrontSet& wf, int N) {
    if (N < 1) throw ConfigError("rebin: N must be >= 1");
    WavefrontSet out(wf.rows, wf.cols, N);
    for (const auto& p : wf.points) out.add(p.row, p.col, quantize_angle(bin_angle(p.bin, wf.bins), N));
    out.normalize();
    return out;
}

} // namespace microshear
