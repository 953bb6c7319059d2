#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"
#include "fft.hpp"

namespace microshear {

struct SinoGeometry {
    int num_angles = 180;
    int num_offsets = 128;
    int grid_size = 128;

    void validate() const {
        if (num_angles < 2) throw ConfigError("sinogram geometry: num_angles must be >= 2");
        if (num_offsets < 2) throw ConfigError("sinogram geometry: num_offsets must be >= 2");
        if (grid_size < 1) throw ConfigError("sinogram geometry: grid_size must be positive");
    }
    double angle(int i) const { return i * pi / num_angles; }
    double offset_step() const { return 2 * std::numbers::sqrt2 / (num_offsets - 1); }
    double offset(int j) const { return -std::numbers::sqrt2 + j * offset_step(); }
    // continuous offset index of p
    double offset_index(double p) const { return (p + std::numbers::sqrt2) / offset_step(); }
    double angle_step() const { return pi / num_angles; }
    bool operator==(const SinoGeometry&) const = default;
};

struct Sinogram {
    SinoGeometry geometry;
    Grid<double> values; // num_angles x num_offsets
    std::vector<int> angle_mask; // measured angle indices, ascending

    Sinogram() = default;
    explicit Sinogram(const SinoGeometry& g) : geometry(g), values(g.num_angles, g.num_offsets, 0.0) {
        for (int i = 0; i < g.num_angles; ++i) angle_mask.push_back(i);
    }
    bool measured(int i) const { return std::binary_search(angle_mask.begin(), angle_mask.end(), i); }
};

enum class RampFilter { RAM_LAK, HANN };

namespace detail {

// Bilinear image sample at physical (x, y), zero outside the grid.
inline double sample_image(const Image& img, double x, double y) {
    const int M = img.rows;
    const double c = col_of_x(x, M), r = row_of_y(y, M);
    const double fr = std::floor(r), fc = std::floor(c);
    const int r0 = int(fr), c0 = int(fc);
    const double tr = r - fr, tc = c - fc;
    auto at = [&](int rr, int cc) {
        if (rr < 0 || rr >= M || cc < 0 || cc >= M) return 0.0;
        return img(rr, cc);
    };
    return (1 - tr) * ((1 - tc) * at(r0, c0) + tc * at(r0, c0 + 1)) +
           tr * ((1 - tc) * at(r0 + 1, c0) + tc * at(r0 + 1, c0 + 1));
}

inline void check_sino(const Sinogram& s) {
    s.geometry.validate();
    if (s.values.rows != s.geometry.num_angles || s.values.cols != s.geometry.num_offsets)
        throw DimensionError("sinogram values do not match geometry");
    if (s.angle_mask.empty()) throw ConfigError("sinogram angle mask is empty");
}

} // namespace detail

namespace detail {

// Line integrals along x = p w + s w_perp for the listed rows only, sampled
// at one pixel width. Other rows stay zero.
inline Sinogram radon_rows(const Image& img, const SinoGeometry& geom, const std::vector<int>& rows) {
    geom.validate();
    if (img.rows != geom.grid_size || img.cols != geom.grid_size)
        throw DimensionError("radon: image size " + std::to_string(img.rows) + " does not match geometry " +
                             std::to_string(geom.grid_size));
    Sinogram out(geom);
    const double h = 2.0 / geom.grid_size;
    const int K = int(std::ceil(std::numbers::sqrt2 / h)) + 1;
    parallel_for(int(rows.size()), [&](int a) {
        const int i = rows[a];
        const double th = geom.angle(i);
        const double cx = std::cos(th), sy = std::sin(th);
        for (int j = 0; j < geom.num_offsets; ++j) {
            const double p = geom.offset(j);
            double acc = 0;
            for (int k = -K; k <= K; ++k) {
                const double s = k * h;
                acc += sample_image(img, p * cx - s * sy, p * sy + s * cx);
            }
            out.values(i, j) = acc * h;
        }
    });
    return out;
}

} // namespace detail

inline Sinogram radon(const Image& img, const SinoGeometry& geom) {
    geom.validate();
    std::vector<int> all(geom.num_angles);
    for (int i = 0; i < geom.num_angles; ++i) all[i] = i;
    return detail::radon_rows(img, geom, all);
}

// (pi / |mask|) * sum over measured angles of g(theta, x . w), linear in p.
inline Image backproject(const Sinogram& sino) {
    detail::check_sino(sino);
    const auto& g = sino.geometry;
    const int M = g.grid_size;
    Image out = make_image(M);
    std::vector<double> cs, sn;
    for (int i : sino.angle_mask) {
        cs.push_back(std::cos(g.angle(i)));
        sn.push_back(std::sin(g.angle(i)));
    }
    const double scale = pi / sino.angle_mask.size();
    parallel_for(M, [&](int r) {
        const double y = pixel_y(r, M);
        for (int c = 0; c < M; ++c) {
            const double x = pixel_x(c, M);
            double acc = 0;
            for (std::size_t a = 0; a < sino.angle_mask.size(); ++a) {
                const double t = g.offset_index(x * cs[a] + y * sn[a]);
                const double ft = std::floor(t);
                const int j0 = int(ft);
                const double w = t - ft;
                const int row = sino.angle_mask[a];
                double v = 0;
                if (j0 >= 0 && j0 < g.num_offsets) v += (1 - w) * sino.values(row, j0);
                if (j0 + 1 >= 0 && j0 + 1 < g.num_offsets) v += w * sino.values(row, j0 + 1);
                acc += v;
            }
            out(r, c) = acc * scale;
        }
    });
    return out;
}

// Ramp-filter each measured row in the offset-frequency domain.
inline Sinogram ramp_filter(const Sinogram& sino, RampFilter filter = RampFilter::RAM_LAK) {
    detail::check_sino(sino);
    const auto& g = sino.geometry;
    const int Np = g.num_offsets;
    int L = 1;
    while (L < 2 * Np) L <<= 1;
    const double dp = g.offset_step();
    std::vector<double> resp(L);
    const double nyq = 0.5 / dp;
    for (int k = 0; k < L; ++k) {
        const int kk = k <= L / 2 ? k : k - L;
        const double nu = std::abs(double(kk)) / (L * dp);
        double v = nu;
        if (filter == RampFilter::HANN) v *= 0.5 * (1 + std::cos(pi * nu / nyq));
        resp[k] = v;
    }
    resp[0] = 0;
    Sinogram out = sino;
    parallel_for(int(sino.angle_mask.size()), [&](int a) {
        const int row = sino.angle_mask[a];
        std::vector<cplx> buf(L, 0.0);
        for (int j = 0; j < Np; ++j) buf[j] = sino.values(row, j);
        Fft::forward1d(buf.data(), L);
        for (int k = 0; k < L; ++k) buf[k] *= resp[k];
        Fft::inverse1d(buf.data(), L);
        for (int j = 0; j < Np; ++j) out.values(row, j) = buf[j].real();
    });
    return out;
}

inline Image fbp(const Sinogram& sino, RampFilter filter = RampFilter::RAM_LAK) {
    return backproject(ramp_filter(sino, filter));
}

inline Sinogram subsample_angles(const Sinogram& sino, int step) {
    detail::check_sino(sino);
    if (step < 1) throw ConfigError("subsample_angles: step must be >= 1");
    Sinogram out = sino;
    out.angle_mask.clear();
    for (int i : sino.angle_mask)
        if (i % step == 0) out.angle_mask.push_back(i);
    if (out.angle_mask.empty()) throw ConfigError("subsample_angles: no angle survives the subsampling");
    for (int i = 0; i < sino.geometry.num_angles; ++i)
        if (!out.measured(i))
            for (int j = 0; j < sino.geometry.num_offsets; ++j) out.values(i, j) = 0;
    return out;
}

// Radon transform restricted to the measured rows of a mask.
inline Sinogram radon_masked(const Image& img, const SinoGeometry& geom, const std::vector<int>& mask) {
    for (int i : mask)
        if (i < 0 || i >= geom.num_angles) throw ConfigError("radon_masked: angle index out of range");
    Sinogram s = detail::radon_rows(img, geom, mask);
    s.angle_mask = mask;
    return s;
}

struct TikhonovResult {
    Image image;
    std::vector<std::pair<int, double>> objective; // (iteration, value), every 10 iterations
    double step = 0;
    double norm_estimate = 0;
};

namespace detail {

inline double sino_sq_norm(const Sinogram& s) {
    double acc = 0;
    for (int i : s.angle_mask)
        for (int j = 0; j < s.geometry.num_offsets; ++j) acc += s.values(i, j) * s.values(i, j);
    return acc * (pi / s.angle_mask.size()) * s.geometry.offset_step();
}

inline double image_sq_norm(const Image& f) {
    double acc = 0;
    for (double v : f.data) acc += v * v;
    const double px = 2.0 / f.rows;
    return acc * px * px;
}

} // namespace detail

// Landweber iteration for min 1/2 |Rf - g|^2 + lambda/2 |f|^2 from f = 0.
inline TikhonovResult tikhonov_trace(const Sinogram& sino, double lambda, int iters) {
    detail::check_sino(sino);
    if (!(lambda > 0)) throw ConfigError("tikhonov: lambda must be > 0");
    if (iters < 0) throw ConfigError("tikhonov: iters must be >= 0");
    const auto& geom = sino.geometry;
    const int M = geom.grid_size;
    TikhonovResult res;
    res.image = make_image(M);
    if (iters == 0) return res;

    // power iteration on R*R
    Image v = make_image(M);
    Rng rng(0x5eed);
    for (double& x : v.data) x = rng.uniform(-1, 1);
    double nrm = 0;
    for (int it = 0; it < 20; ++it) {
        const double n0 = std::sqrt(detail::image_sq_norm(v));
        for (double& x : v.data) x /= n0;
        Image w = backproject(radon_masked(v, geom, sino.angle_mask));
        double dot = 0;
        for (std::size_t i = 0; i < v.size(); ++i) dot += v.data[i] * w.data[i];
        nrm = dot * (2.0 / M) * (2.0 / M);
        v = std::move(w);
    }
    res.norm_estimate = nrm;
    res.step = 1.0 / (nrm + lambda);

    const Image rhs = backproject(sino);
    Image& f = res.image;
    auto objective = [&](const Sinogram& rf) {
        Sinogram r = rf;
        for (int i : sino.angle_mask)
            for (int j = 0; j < geom.num_offsets; ++j) r.values(i, j) -= sino.values(i, j);
        return 0.5 * detail::sino_sq_norm(r) + 0.5 * lambda * detail::image_sq_norm(f);
    };
    for (int it = 1; it <= iters; ++it) {
        Sinogram rf = radon_masked(f, geom, sino.angle_mask);
        Image grad = backproject(rf);
        for (std::size_t i = 0; i < f.size(); ++i) f.data[i] -= res.step * (grad.data[i] - rhs.data[i] + lambda * f.data[i]);
        for (double x : f.data)
            if (!std::isfinite(x)) throw NumericalError("tikhonov: non-finite iterate at iteration " + std::to_string(it));
        if (it % 10 == 0 || it == iters) res.objective.emplace_back(it, objective(radon_masked(f, geom, sino.angle_mask)));
    }
    return res;
}

inline Image tikhonov(const Sinogram& sino, double lambda, int iters) { return tikhonov_trace(sino, lambda, iters).image; }

} // namespace microshear
