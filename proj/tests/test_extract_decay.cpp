#include <gtest/gtest.h>

#include <microshear/extract_decay.hpp>
#include <microshear/metrics.hpp>
#include <microshear/phantom.hpp>

#include <algorithm>
#include <cmath>

using namespace microshear;

namespace {

Image vertical_edge(int M) {
    Image img = make_image(M);
    for (int r = 0; r < M; ++r)
        for (int c = M / 2; c < M; ++c) img(r, c) = 1;
    return img;
}

} // namespace

TEST(ExtractDecay, VerticalEdgeHasHorizontalNormal) {
    const int M = 128;
    const auto sys = build_system(M, 4);
    const auto wf = extract_wavefront_decay(vertical_edge(M), sys, DecayParams{}, 180);
    int on = 0, good = 0;
    for (const auto& p : wf.points)
        if (p.col == M / 2 || p.col == M / 2 - 1) {
            ++on;
            good += circular_bin_distance(p.bin, 0, 180) <= 1;
        }
    ASSERT_GT(on, M / 2);
    EXPECT_GE(double(good) / on, 0.9);
}

TEST(ExtractDecay, BlankImageIsEmpty) {
    const auto sys = build_system(64, 3);
    DecayParams prm;
    prm.min_scales = 3;
    EXPECT_TRUE(extract_wavefront_decay(make_image(64), sys, prm, 180).empty());
    EXPECT_TRUE(extract_wavefront_decay(Image(64, 64, 2.5), sys, prm, 180).empty());
}

TEST(ExtractDecay, RaisingQuantileShrinksSet) {
    const auto sys = build_system(128, 4);
    const Image img = generate_phantom(3, PhantomConfig{}).image;
    const auto vol = dsh_transform(img, sys);
    WavefrontSet prev;
    for (double q : {0.7, 0.8, 0.9, 0.97}) {
        DecayParams prm;
        prm.edge_quantile = q;
        const auto wf = extract_wavefront_decay(vol, sys, prm, 180);
        if (q > 0.7)
            for (const auto& p : wf.points) EXPECT_TRUE(prev.contains(p)) << q;
        prev = wf;
    }
}

TEST(ExtractDecay, DiskNormalsAreRadial) {
    PhantomSpec spec;
    spec.grid_size = 128;
    EllipseSpec e;
    e.a = e.b = 0.5;
    spec.ellipses = {e};
    const auto sys = build_system(128, 4);
    const auto wf = extract_wavefront_decay(rasterize(spec), sys, DecayParams{}, 180);
    ASSERT_GT(wf.size(), 100u);
    // emitted points on boundary pixels carry the radial normal
    int on = 0, close = 0;
    for (const auto& p : wf.points) {
        const double x = pixel_x(p.col, 128), y = pixel_y(p.row, 128);
        if (std::abs(std::hypot(x, y) - 0.5) > 1.0 / 64) continue;
        ++on;
        const double radial = wrap180(std::atan2(y, x) * 180 / pi);
        close += std::abs(angle_diff180(bin_angle(p.bin, 180), radial)) <= 2;
    }
    ASSERT_GT(on, 100);
    EXPECT_GE(double(close) / on, 0.85);
}

TEST(ExtractDecay, CoarseBinsMatchTruth) {
    PhantomConfig cfg;
    cfg.orientation_bins = 8;
    const Phantom ph = generate_phantom(11, cfg);
    const auto sys = build_system(128, 4);
    const auto wf = extract_wavefront_decay(ph.image, sys, DecayParams{}, 8);
    EXPECT_EQ(wf.bins, 8);
    EXPECT_GT(mf_score(wf, ph.wavefront, 1, 0), 0.6);
}

TEST(ExtractDecay, NearestSlicesPreferSmallShear) {
    const auto sys = build_system(128, 4);
    const auto near = nearest_slices(sys, 180);
    for (int j = 1; j <= 4; ++j) {
        EXPECT_EQ(sys.key_of(near[j][0]).k, 0);
        EXPECT_EQ(sys.key_of(near[j][0]).iota, 1);
        EXPECT_EQ(sys.key_of(near[j][90]).iota, -1);
    }
}

TEST(ExtractDecay, Quantile) {
    EXPECT_DOUBLE_EQ(detail::quantile({1, 2, 3, 4, 5}, 0.5), 3.0);
    EXPECT_DOUBLE_EQ(detail::quantile({1, 2, 3, 4}, 0.5), 2.5);
    EXPECT_DOUBLE_EQ(detail::quantile({4, 1, 3, 2}, 0.25), 1.75);
}

TEST(ExtractDecay, InvalidParams) {
    const auto sys = build_system(64, 3);
    const Image img = make_image(64);
    DecayParams p;
    p.edge_quantile = 1.0;
    EXPECT_THROW(extract_wavefront_decay(img, sys, p, 180), ConfigError);
    DecayParams q;
    q.min_scales = 4; // only three scales
    EXPECT_THROW(extract_wavefront_decay(img, sys, q, 180), ConfigError);
    DecayParams r;
    r.min_scales = 1;
    EXPECT_THROW(extract_wavefront_decay(img, sys, r, 180), ConfigError);
}
