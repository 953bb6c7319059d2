#include <gtest/gtest.h>

#include <microshear/canonical.hpp>
#include <microshear/phantom.hpp>

#include <cmath>

using namespace microshear;

TEST(Canonical, ForwardExamples) {
    const SinoCovector o = canonical_forward(0, 0, pi / 3);
    EXPECT_NEAR(o.p, 0, 1e-15);
    EXPECT_EQ(covector_bin(o.a, o.b, 180), 90);
    const SinoCovector e = canonical_forward(1, 0, 0);
    EXPECT_DOUBLE_EQ(e.theta, 0);
    EXPECT_DOUBLE_EQ(e.p, 1);
    EXPECT_NEAR(e.a, 0, 1e-15);
    EXPECT_GT(e.b, 0);
    // tangent offset: a point above the line through the origin moves with theta
    const SinoCovector t = canonical_forward(0, 0.5, 0);
    EXPECT_NEAR(t.p, 0, 1e-15);
    EXPECT_NEAR(t.a, -0.5, 1e-15);
}

TEST(Canonical, InverseExamples) {
    const auto x = canonical_inverse(SinoCovector{0, 0, 0, 1});
    ASSERT_TRUE(x);
    EXPECT_NEAR(x->first, 0, 1e-15);
    EXPECT_NEAR(x->second, 0, 1e-15);
    EXPECT_FALSE(canonical_inverse(SinoCovector{0, 0, 1, 0}));

    const SinoGeometry g{180, 128, 64};
    SinoWavefrontSet swf(g, 720);
    swf.add(0, nearest_index(g.offset_index(0.0)), 360); // covector angle 90 deg
    swf.normalize();
    const auto wf = sino_wf_to_image_wf(swf, 180);
    ASSERT_EQ(wf.size(), 1u);
    EXPECT_EQ(wf.points[0].bin, 0);
    EXPECT_LE(std::abs(pixel_x(wf.points[0].col, 64)), 1.0 / 64 + 1e-12);
}

TEST(Canonical, OutsidePointsDropped) {
    const SinoGeometry g{180, 128, 64};
    SinoWavefrontSet swf(g, 720);
    swf.add(0, 127, 360); // p = sqrt2, outside the square
    swf.add(45, 64, 100); // steep covector, far tangential position
    swf.normalize();
    EXPECT_TRUE(sino_wf_to_image_wf(swf, 180).empty());
}

TEST(Canonical, RandomRoundTrip) {
    const int M = 128, N = 180;
    for (int Np : {128, 257}) {
        const SinoGeometry g{180, Np, M};
        Rng rng(11);
        int worst_px = 0, worst_bin = 0;
        for (int t = 0; t < 500; ++t) {
            WavefrontSet wf(M, N);
            const int r = 20 + int(rng.below(M - 40)), c = 20 + int(rng.below(M - 40)), b = int(rng.below(N));
            wf.add(r, c, b);
            const auto back = sino_wf_to_image_wf(image_wf_to_sino_wf(wf, g, 1440), N);
            ASSERT_EQ(back.size(), 1u);
            const auto& q = back.points[0];
            worst_px = std::max({worst_px, std::abs(q.row - r), std::abs(q.col - c)});
            worst_bin = std::max(worst_bin, circular_bin_distance(q.bin, b, N));
        }
        EXPECT_LE(worst_px, 1) << Np;
        EXPECT_LE(worst_bin, 1) << Np;
    }
}

TEST(Canonical, WrapFlipsOffset) {
    // 2 degree angle steps; a normal at 179.5 deg snaps past the last row to 0
    const SinoGeometry g{90, 129, 64};
    WavefrontSet wf(64, 360);
    wf.add(10, 50, 359);
    wf.normalize();
    const auto s = image_wf_to_sino_wf(wf, g, 720);
    ASSERT_EQ(s.size(), 1u);
    EXPECT_EQ(s.points[0].row, 0);
    // the wrapped line is theta = 0 at p = +x
    EXPECT_NEAR(g.offset(s.points[0].col), pixel_x(50, 64), g.offset_step());
    const auto back = sino_wf_to_image_wf(s, 360);
    ASSERT_EQ(back.size(), 1u);
    EXPECT_LE(std::abs(back.points[0].row - 10) + std::abs(back.points[0].col - 50), 2);
}

TEST(Canonical, VisibleSubset) {
    const SinoGeometry g{180, 128, 64};
    WavefrontSet wf(64, 180);
    for (int b = 0; b < 180; ++b) wf.add(30, 30, b);
    wf.normalize();
    std::vector<int> every6;
    for (int i = 0; i < 180; i += 6) every6.push_back(i);
    EXPECT_EQ(visible_subset(wf, g, every6).size(), 30u);
    std::vector<int> odd, low;
    for (int i = 1; i < 180; i += 2) odd.push_back(i);
    for (int i = 0; i < 60; ++i) low.push_back(i);
    const auto ab = visible_subset(visible_subset(wf, g, odd), g, low);
    const auto ba = visible_subset(visible_subset(wf, g, low), g, odd);
    EXPECT_EQ(ab.points, ba.points);
    EXPECT_EQ(ab.size(), 30u);
    EXPECT_THROW(visible_subset(wf, g, {}), ConfigError);
    EXPECT_THROW(visible_subset(wf, g, {180}), ConfigError);
}

TEST(Canonical, SinogramImageIsSquareAndPeriodic) {
    const SinoGeometry g{180, 129, 64};
    Sinogram s(g);
    for (int i = 0; i < 180; ++i)
        for (int j = 0; j < 129; ++j) s.values(i, j) = j;
    const auto si = sinogram_as_image(s);
    EXPECT_EQ(si.side, 512);
    EXPECT_DOUBLE_EQ(si.rows_per_angle, 512.0 / 360);
    // row 0 holds angle 0; the mirrored half runs the offsets backwards
    EXPECT_NEAR(si.image(0, 0), 0, 1e-12);
    EXPECT_NEAR(si.image(256, 0), 128, 1e-12);
}

TEST(Canonical, DiskSinogramSingularities) {
    const int M = 128;
    PhantomSpec spec;
    spec.grid_size = M;
    EllipseSpec e;
    e.a = e.b = 0.5;
    spec.ellipses = {e};
    const SinoGeometry g{180, 257, M};
    const auto swf = extract_sinogram_wavefront(radon(rasterize(spec), g), sinogram_decay_params(), 1440);
    ASSERT_GT(swf.size(), 180u);
    // nothing is detected where the sinogram vanishes, up to the finest
    // shearlet support
    for (const auto& p : swf.points) EXPECT_LE(std::abs(g.offset(p.col)), 0.5 + 6 * g.offset_step());
    const auto tangent = image_wf_to_sino_wf(analytic_wavefront(spec), g, 1440);
    int hit = 0;
    for (const auto& a : tangent.points) {
        bool ok = false;
        for (const auto& b : swf.points)
            if (b.row == a.row && std::abs(b.col - a.col) <= 2) ok = true;
        hit += ok;
    }
    EXPECT_GE(double(hit) / tangent.size(), 0.9);
}
