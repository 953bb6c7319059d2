#include <gtest/gtest.h>

#include <microshear/phantom.hpp>

#include <cmath>

using namespace microshear;

namespace {

PhantomConfig config(int inner) {
    PhantomConfig c;
    c.num_inner = inner;
    return c;
}

double implicit(const EllipseSpec& e, double x, double y) {
    const double dx = x - e.cx, dy = y - e.cy;
    const double u = std::cos(e.alpha) * dx + std::sin(e.alpha) * dy;
    const double v = -std::sin(e.alpha) * dx + std::cos(e.alpha) * dy;
    return u * u / (e.a * e.a) + v * v / (e.b * e.b);
}

} // namespace

TEST(Phantom, ZeroInnerGivesSkullPair) {
    const Phantom ph = generate_phantom(1, config(0));
    ASSERT_EQ(ph.spec.ellipses.size(), 2u);
    const auto& outer = ph.spec.ellipses[0];
    const auto& inner = ph.spec.ellipses[1];
    EXPECT_LT(inner.a, outer.a);
    EXPECT_LT(inner.b, outer.b);
    EXPECT_FALSE(ph.wavefront.empty());
}

TEST(Phantom, SameSeedIsBitIdentical) {
    const Phantom a = generate_phantom(42, config(5));
    const Phantom b = generate_phantom(42, config(5));
    EXPECT_EQ(a.image.data, b.image.data);
    EXPECT_EQ(a.wavefront.points, b.wavefront.points);
    const Phantom c = generate_phantom(43, config(5));
    EXPECT_NE(a.image.data, c.image.data);
}

TEST(Phantom, InnerEllipsesInsideInnerSkull) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Phantom ph = generate_phantom(seed, config(5));
        const auto& skull = ph.spec.ellipses[1];
        for (std::size_t i = 2; i < ph.spec.ellipses.size(); ++i) {
            const auto& e = ph.spec.ellipses[i];
            for (int k = 0; k < 64; ++k) {
                const double t = 2 * pi * k / 64;
                const double u = e.a * std::cos(t), v = e.b * std::sin(t);
                const double x = e.cx + std::cos(e.alpha) * u - std::sin(e.alpha) * v;
                const double y = e.cy + std::sin(e.alpha) * u + std::cos(e.alpha) * v;
                EXPECT_LT(implicit(skull, x, y), 1.0) << "seed " << seed << " ellipse " << i;
            }
        }
    }
}

TEST(Phantom, RasterizeUsesPixelCentres) {
    PhantomSpec spec;
    spec.grid_size = 64;
    EllipseSpec e;
    e.a = e.b = 0.5;
    spec.ellipses = {e};
    const Image img = rasterize(spec);
    int count = 0;
    for (int r = 0; r < 64; ++r)
        for (int c = 0; c < 64; ++c) {
            const double x = pixel_x(c, 64), y = pixel_y(r, 64);
            const double expect = x * x + y * y <= 0.25 ? 1.0 : 0.0;
            EXPECT_EQ(img(r, c), expect);
            count += expect > 0;
        }
    // area pi r^2 of [-1,1]^2 in pixels
    EXPECT_NEAR(count, pi * 0.25 / 4 * 64 * 64, 30);
    // top row is y close to +1
    EXPECT_GT(pixel_y(0, 64), 0.9);
}

TEST(Phantom, EdgeSigmaRamps) {
    PhantomSpec spec;
    spec.grid_size = 64;
    EllipseSpec e;
    e.a = e.b = 0.5;
    e.edge_sigma = 3;
    spec.ellipses = {e};
    const Image img = rasterize(spec);
    int partial = 0;
    for (double v : img.data) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
        partial += v > 0 && v < 1;
    }
    EXPECT_GT(partial, 100);
}

TEST(Phantom, WavefrontPointsNearGradientRidge) {
    const Phantom ph = generate_phantom(7, config(5));
    ASSERT_FALSE(ph.wavefront.empty());
    const int M = ph.image.rows;
    Image g = make_image(M);
    for (int r = 1; r + 1 < M; ++r)
        for (int c = 1; c + 1 < M; ++c)
            g(r, c) = std::hypot(ph.image(r, c + 1) - ph.image(r, c - 1), ph.image(r + 1, c) - ph.image(r - 1, c)) / 2;
    auto ridge = [&](int r, int c, double th) {
        // maximum along the normal, the edge direction is free
        if (r < 2 || c < 2 || r > M - 3 || c > M - 3 || g(r, c) <= 0) return false;
        const int dc = int(std::lround(std::cos(th))), dr = -int(std::lround(std::sin(th)));
        return g(r, c) >= g(r + dr, c + dc) && g(r, c) >= g(r - dr, c - dc);
    };
    for (const auto& p : ph.wavefront.points) {
        const double th = bin_angle(p.bin, ph.wavefront.bins) * pi / 180;
        bool ok = false;
        for (int dr = -1; dr <= 1 && !ok; ++dr)
            for (int dc = -1; dc <= 1 && !ok; ++dc) ok = ridge(p.row + dr, p.col + dc, th);
        EXPECT_TRUE(ok) << p.row << "," << p.col << " bin " << p.bin;
    }
}

TEST(Phantom, SharpEdgesAreContained) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Phantom ph = generate_phantom(seed, config(5));
        const int M = ph.image.rows;
        for (const auto& p : ph.wavefront.points) {
            bool differs = false;
            for (int dr = -1; dr <= 1; ++dr)
                for (int dc = -1; dc <= 1; ++dc) {
                    const int r = p.row + dr, c = p.col + dc;
                    if (r >= 0 && c >= 0 && r < M && c < M && ph.image(r, c) != ph.image(p.row, p.col)) differs = true;
                }
            EXPECT_TRUE(differs);
        }
    }
}

TEST(Phantom, WavefrontNormalsOfADisk) {
    PhantomSpec spec;
    spec.grid_size = 128;
    EllipseSpec e;
    e.a = e.b = 0.6;
    spec.ellipses = {e};
    const WavefrontSet wf = analytic_wavefront(spec);
    ASSERT_TRUE(wf.valid());
    for (const auto& p : wf.points) {
        const double x = pixel_x(p.col, 128), y = pixel_y(p.row, 128);
        const double radial = wrap180(std::atan2(y, x) * 180 / pi);
        EXPECT_LE(std::abs(angle_diff180(bin_angle(p.bin, 180), radial)), 1.0);
        EXPECT_NEAR(std::hypot(x, y), 0.6, 1.0 / 128 + 1e-9);
    }
}

TEST(Phantom, InvalidConfigThrows) {
    PhantomConfig c;
    c.inner_axis_min = 0.3;
    c.inner_axis_max = 0.2;
    EXPECT_THROW(generate_phantom(1, c), ConfigError);
    PhantomConfig small;
    small.grid_size = 16;
    EXPECT_THROW(generate_phantom(1, small), ConfigError);
    PhantomSpec bad;
    EllipseSpec e;
    e.a = -1;
    bad.ellipses = {e};
    EXPECT_THROW(rasterize(bad), ConfigError);
}
