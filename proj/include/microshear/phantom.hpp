#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "core.hpp"
#include "wavefront.hpp"

namespace microshear {

struct EllipseSpec {
    double cx = 0, cy = 0;   // centre, normalized coords
    double a = 0.5, b = 0.5; // semi-axes
    double alpha = 0;        // rotation, radians
    double intensity = 1;
    double edge_sigma = 0;   // ramp width in pixels, 0 = sharp
};

struct PhantomSpec {
    std::vector<EllipseSpec> ellipses;
    int grid_size = 128;
    int orientation_bins = 180;
};

struct PhantomConfig {
    int grid_size = 128;
    int orientation_bins = 180;
    int num_inner = 5;
    double outer_a_min = 0.70, outer_a_max = 0.90;
    double outer_b_min = 0.80, outer_b_max = 0.95;
    double outer_rot_max = pi / 12; // |alpha| of the skull
    double skull_thickness_min = 0.06, skull_thickness_max = 0.10;
    double skull_intensity_min = 0.8, skull_intensity_max = 1.2;
    double brain_intensity_min = 0.1, brain_intensity_max = 0.3;
    double inner_center_max = 0.8;
    double inner_axis_min = 0.08, inner_axis_max = 0.25;
    double inner_intensity_min = 0.1, inner_intensity_max = 0.4;
    double inner_margin = 0.05; // in normalized radius of the inner skull
    double edge_sigma = 0;
    int max_attempts = 1000;

    void validate() const {
        auto range = [](double lo, double hi, const char* what) {
            if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi))
                throw ConfigError(std::string("phantom config: bad range for ") + what);
        };
        range(outer_a_min, outer_a_max, "outer_a");
        range(outer_b_min, outer_b_max, "outer_b");
        range(skull_thickness_min, skull_thickness_max, "skull_thickness");
        range(skull_intensity_min, skull_intensity_max, "skull_intensity");
        range(brain_intensity_min, brain_intensity_max, "brain_intensity");
        range(inner_axis_min, inner_axis_max, "inner_axis");
        range(inner_intensity_min, inner_intensity_max, "inner_intensity");
        if (grid_size < 32) throw ConfigError("phantom config: grid_size must be >= 32");
        if (orientation_bins < 2) throw ConfigError("phantom config: orientation_bins must be >= 2");
        if (num_inner < 0) throw ConfigError("phantom config: num_inner must be >= 0");
        if (inner_axis_min <= 0) throw ConfigError("phantom config: inner axes must be positive");
        if (outer_a_max > 1 || outer_b_max > 1 || std::max(outer_a_max, outer_b_max) > 1.0)
            throw ConfigError("phantom config: skull must fit in [-1,1]^2");
        if (outer_a_min - skull_thickness_max <= 0 || outer_b_min - skull_thickness_max <= 0)
            throw ConfigError("phantom config: skull thickness exceeds axes");
        if (edge_sigma < 0) throw ConfigError("phantom config: edge_sigma must be >= 0");
        if (max_attempts < 1) throw ConfigError("phantom config: max_attempts must be >= 1");
    }
};

namespace detail {

// Local frame of an ellipse: (u, v) = R(-alpha)(p - c).
inline void to_local(const EllipseSpec& e, double x, double y, double& u, double& v) {
    const double dx = x - e.cx, dy = y - e.cy;
    const double ca = std::cos(e.alpha), sa = std::sin(e.alpha);
    u = ca * dx + sa * dy;
    v = -sa * dx + ca * dy;
}

inline double implicit_q(const EllipseSpec& e, double x, double y) {
    double u, v;
    to_local(e, x, y, u, v);
    return (u / e.a) * (u / e.a) + (v / e.b) * (v / e.b);
}

// Root of the Eberly distance equation, bisection on s.
inline double ellipse_root(double r0, double z0, double z1, double g) {
    const double n0 = r0 * z0;
    double s0 = z1 - 1;
    double s1 = g < 0 ? 0 : std::hypot(n0, z1) - 1;
    double s = 0;
    for (int i = 0; i < 1100; ++i) {
        s = 0.5 * (s0 + s1);
        if (s == s0 || s == s1) break;
        const double r0v = n0 / (s + r0), r1v = z1 / (s + 1);
        const double gg = r0v * r0v + r1v * r1v - 1;
        if (gg > 0) s0 = s;
        else if (gg < 0) s1 = s;
        else break;
    }
    return s;
}

// Closest point on the axis-aligned ellipse (e0 >= e1) to (y0, y1) >= 0.
inline double closest_quadrant(double e0, double e1, double y0, double y1, double& x0, double& x1) {
    if (y1 > 0) {
        if (y0 > 0) {
            const double z0 = y0 / e0, z1 = y1 / e1;
            const double g = z0 * z0 + z1 * z1 - 1;
            if (g != 0) {
                const double r0 = (e0 / e1) * (e0 / e1);
                const double sbar = ellipse_root(r0, z0, z1, g);
                x0 = r0 * y0 / (sbar + r0);
                x1 = y1 / (sbar + 1);
                return std::hypot(x0 - y0, x1 - y1);
            }
            x0 = y0;
            x1 = y1;
            return 0;
        }
        x0 = 0;
        x1 = e1;
        return std::abs(y1 - e1);
    }
    const double numer0 = e0 * y0, denom0 = e0 * e0 - e1 * e1;
    if (numer0 < denom0) {
        const double xde0 = numer0 / denom0;
        x0 = e0 * xde0;
        x1 = e1 * std::sqrt(std::max(0.0, 1 - xde0 * xde0));
        return std::hypot(x0 - y0, x1);
    }
    x0 = e0;
    x1 = 0;
    return std::abs(y0 - e0);
}

struct BoundaryQuery {
    double signed_distance; // negative inside
    double normal_deg;      // normal angle at the closest boundary point, mod 180
};

inline BoundaryQuery boundary_query(const EllipseSpec& e, double x, double y) {
    double u, v;
    to_local(e, x, y, u, v);
    const bool swap = e.a < e.b;
    const double e0 = swap ? e.b : e.a, e1 = swap ? e.a : e.b;
    double y0 = std::abs(swap ? v : u), y1 = std::abs(swap ? u : v);
    double x0, x1;
    const double d = closest_quadrant(e0, e1, y0, y1, x0, x1);
    // back to signed local coordinates
    double pu = swap ? x1 : x0, pv = swap ? x0 : x1;
    if (u < 0) pu = -pu;
    if (v < 0) pv = -pv;
    const double gu = pu / (e.a * e.a), gv = pv / (e.b * e.b);
    const double ca = std::cos(e.alpha), sa = std::sin(e.alpha);
    const double nx = ca * gu - sa * gv, ny = sa * gu + ca * gv;
    const double q = (u / e.a) * (u / e.a) + (v / e.b) * (v / e.b);
    return {q <= 1 ? -d : d, wrap180(std::atan2(ny, nx) * 180.0 / pi)};
}

// Half-width of the axis-aligned bounding box of a rotated ellipse.
inline void bbox_half(const EllipseSpec& e, double& hx, double& hy) {
    const double ca = std::cos(e.alpha), sa = std::sin(e.alpha);
    hx = std::sqrt(e.a * e.a * ca * ca + e.b * e.b * sa * sa);
    hy = std::sqrt(e.a * e.a * sa * sa + e.b * e.b * ca * ca);
}

inline void boundary_point(const EllipseSpec& e, double t, double& x, double& y) {
    const double ca = std::cos(e.alpha), sa = std::sin(e.alpha);
    const double u = e.a * std::cos(t), v = e.b * std::sin(t);
    x = e.cx + ca * u - sa * v;
    y = e.cy + sa * u + ca * v;
}

// Inclusive pixel index range covering [lo, hi] along one axis.
inline void pixel_span(double lo, double hi, int M, int& i0, int& i1) {
    i0 = std::max(0, int(std::floor((lo + 1.0) * M / 2.0 - 0.5)));
    i1 = std::min(M - 1, int(std::ceil((hi + 1.0) * M / 2.0 - 0.5)));
}

} // namespace detail

inline void validate_spec(const PhantomSpec& spec) {
    if (spec.grid_size < 1) throw ConfigError("phantom spec: grid_size must be positive");
    if (spec.orientation_bins < 2) throw ConfigError("phantom spec: orientation_bins must be >= 2");
    for (const auto& e : spec.ellipses) {
        if (!(e.a > 0) || !(e.b > 0)) throw ConfigError("phantom spec: ellipse axes must be positive");
        if (!std::isfinite(e.intensity) || !std::isfinite(e.cx) || !std::isfinite(e.cy) || !std::isfinite(e.alpha))
            throw ConfigError("phantom spec: non-finite ellipse field");
        if (e.edge_sigma < 0) throw ConfigError("phantom spec: edge_sigma must be >= 0");
    }
}

// Sum of ellipse indicators, with a linear ramp over the signed distance
// when edge_sigma > 0.
inline Image rasterize(const PhantomSpec& spec) {
    validate_spec(spec);
    const int M = spec.grid_size;
    Image img = make_image(M);
    const double px = 2.0 / M;
    for (const auto& e : spec.ellipses) {
        double hx, hy;
        detail::bbox_half(e, hx, hy);
        const double pad = (e.edge_sigma + 2) * px;
        int c0, c1, r0, r1;
        detail::pixel_span(e.cx - hx - pad, e.cx + hx + pad, M, c0, c1);
        // rows run downward, so the y range flips
        detail::pixel_span(-(e.cy + hy + pad), -(e.cy - hy - pad), M, r0, r1);
        for (int r = r0; r <= r1; ++r) {
            const double y = pixel_y(r, M);
            for (int c = c0; c <= c1; ++c) {
                const double x = pixel_x(c, M);
                double w;
                if (e.edge_sigma > 0) {
                    const double sd = detail::boundary_query(e, x, y).signed_distance;
                    w = std::clamp(0.5 - sd / (e.edge_sigma * px), 0.0, 1.0);
                } else {
                    w = detail::implicit_q(e, x, y) <= 1.0 ? 1.0 : 0.0;
                }
                if (w != 0) img(r, c) += e.intensity * w;
            }
        }
    }
    return img;
}

// Boundary pixels (centre within half a pixel of the curve) with the
// quantized normal at the nearest boundary point.
inline WavefrontSet analytic_wavefront(const PhantomSpec& spec) {
    validate_spec(spec);
    const int M = spec.grid_size, N = spec.orientation_bins;
    WavefrontSet wf(M, N);
    const double half = 1.0 / M;
    for (const auto& e : spec.ellipses) {
        double hx, hy;
        detail::bbox_half(e, hx, hy);
        const double pad = 2.0 / M;
        int c0, c1, r0, r1;
        detail::pixel_span(e.cx - hx - pad, e.cx + hx + pad, M, c0, c1);
        detail::pixel_span(-(e.cy + hy + pad), -(e.cy - hy - pad), M, r0, r1);
        for (int r = r0; r <= r1; ++r) {
            const double y = pixel_y(r, M);
            for (int c = c0; c <= c1; ++c) {
                const double x = pixel_x(c, M);
                const auto bq = detail::boundary_query(e, x, y);
                if (std::abs(bq.signed_distance) <= half) wf.add(r, c, quantize_angle(bq.normal_deg, N));
            }
        }
    }
    wf.normalize();
    return wf;
}

struct Phantom {
    PhantomSpec spec;
    Image image;
    WavefrontSet wavefront;
    int rejected_ellipses = 0; // inner ellipses dropped after max_attempts
};

// True if ellipse e lies inside f: every sampled boundary point of e has
// normalized radius <= 1 - margin in f and is at least min_dist inside it.
inline bool ellipse_inside(const EllipseSpec& e, const EllipseSpec& f, double margin, double min_dist) {
    constexpr int samples = 400;
    for (int i = 0; i < samples; ++i) {
        const double t = 2 * pi * i / (samples - 1);
        double x, y;
        detail::boundary_point(e, t, x, y);
        if (std::sqrt(detail::implicit_q(f, x, y)) > 1 - margin) return false;
        if (detail::boundary_query(f, x, y).signed_distance > -min_dist) return false;
    }
    return true;
}

// Random head phantom: skull pair first, then inner ellipses by rejection.
inline Phantom generate_phantom(std::uint64_t seed, const PhantomConfig& cfg) {
    cfg.validate();
    Rng rng(seed);
    const int M = cfg.grid_size;
    Phantom out;
    out.spec.grid_size = M;
    out.spec.orientation_bins = cfg.orientation_bins;

    EllipseSpec outer;
    outer.a = rng.uniform(cfg.outer_a_min, cfg.outer_a_max);
    outer.b = rng.uniform(cfg.outer_b_min, cfg.outer_b_max);
    outer.alpha = rng.uniform(-cfg.outer_rot_max, cfg.outer_rot_max);
    const double thick = rng.uniform(cfg.skull_thickness_min, cfg.skull_thickness_max);
    outer.intensity = rng.uniform(cfg.skull_intensity_min, cfg.skull_intensity_max);
    const double brain = rng.uniform(cfg.brain_intensity_min, cfg.brain_intensity_max);
    outer.edge_sigma = cfg.edge_sigma;
    EllipseSpec inner = outer;
    inner.a -= thick;
    inner.b -= thick;
    inner.intensity = brain - outer.intensity;
    out.spec.ellipses = {outer, inner};

    const double min_dist = 3.0 / M; // 1.5 pixels
    for (int n = 0; n < cfg.num_inner; ++n) {
        bool placed = false;
        for (int attempt = 0; attempt < cfg.max_attempts && !placed; ++attempt) {
            EllipseSpec e;
            e.cx = rng.uniform(-cfg.inner_center_max, cfg.inner_center_max);
            e.cy = rng.uniform(-cfg.inner_center_max, cfg.inner_center_max);
            e.a = rng.uniform(cfg.inner_axis_min, cfg.inner_axis_max);
            e.b = rng.uniform(cfg.inner_axis_min, cfg.inner_axis_max);
            e.alpha = rng.uniform(0, pi);
            const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
            e.intensity = sign * rng.uniform(cfg.inner_intensity_min, cfg.inner_intensity_max);
            e.edge_sigma = cfg.edge_sigma;
            if (ellipse_inside(e, inner, cfg.inner_margin, min_dist)) {
                out.spec.ellipses.push_back(e);
                placed = true;
            }
        }
        if (!placed) ++out.rejected_ellipses;
    }
    out.image = rasterize(out.spec);
    out.wavefront = analytic_wavefront(out.spec);
    return out;
}

} // namespace microshear
