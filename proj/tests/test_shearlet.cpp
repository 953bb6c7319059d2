#include <gtest/gtest.h>

#include <microshear/phantom.hpp>
#include <microshear/shearlet.hpp>

#include <cmath>
#include <set>

using namespace microshear;

namespace {

Image random_image(int M, std::uint64_t seed) {
    Rng rng(seed);
    Image img = make_image(M);
    for (double& v : img.data) v = rng.normal();
    return img;
}

double max_abs(const CGrid& g) {
    double m = 0;
    for (const auto& z : g.data) m = std::max(m, std::abs(z));
    return m;
}

} // namespace

TEST(Shearlet, SliceCounts) {
    EXPECT_EQ(build_system(256, 4).num_slices(), 49);
    EXPECT_EQ(ShearletSystem::expected_slices(4), 49);
    for (int S = 1; S <= 4; ++S) EXPECT_EQ(build_system(128, S).num_slices(), ShearletSystem::expected_slices(S));
}

TEST(Shearlet, KeysAreDistinctAndIndexed) {
    const auto sys = build_system(128, 4);
    std::set<std::string> seen;
    for (int i = 0; i < sys.num_slices(); ++i) {
        const SliceKey k = sys.key_of(i);
        EXPECT_EQ(sys.slice_index(k), i);
        EXPECT_TRUE(seen.insert(to_string(k)).second);
    }
    EXPECT_EQ(sys.key_of(0).iota, 0);
    EXPECT_THROW(sys.slice_index(SliceKey{9, 0, 1}), ConfigError);
}

TEST(Shearlet, SliceAngles) {
    EXPECT_DOUBLE_EQ(slice_angle(SliceKey{1, 0, 1}), 0.0);
    EXPECT_DOUBLE_EQ(slice_angle(SliceKey{1, 0, -1}), 90.0);
    EXPECT_NEAR(slice_angle(SliceKey{2, 2, 1}), 45.0, 1e-12);
    EXPECT_EQ(orientation_of_slice(SliceKey{1, 0, -1}, 180), 90);
    EXPECT_THROW(slice_angle(SliceKey{0, 0, 0}), ConfigError);
    // circular coordinate and its inverse agree on every cone slice
    const auto sys = build_system(128, 4);
    for (int i = 1; i < sys.num_slices(); ++i) {
        const SliceKey k = sys.key_of(i);
        EXPECT_NEAR(std::abs(angle_diff180(angle_of_circular_coord(circular_shear_coord(k), shear_half_count(k.j)),
                                           slice_angle(k))),
                    0.0, 1e-9);
    }
}

TEST(Shearlet, FrameWeightsPositive) {
    const auto sys = build_system(64, 3);
    for (double w : sys.frame_weights()) EXPECT_GT(w, 1e-6);
}

TEST(Shearlet, RoundTripRandomAndPhantom) {
    for (int M : {64, 128}) {
        const auto sys = build_system(M, 4);
        const Image img = random_image(M, 3);
        EXPECT_LE(rel_l2_error(dsh_inverse(dsh_transform(img, sys), sys), img), 1e-8) << M;
        PhantomConfig cfg;
        cfg.grid_size = M;
        const Image ph = generate_phantom(5, cfg).image;
        EXPECT_LE(rel_l2_error(dsh_inverse(dsh_transform(ph, sys), sys), ph), 1e-8) << M;
    }
}

TEST(Shearlet, ConstantImageHasNoConeResponse) {
    const auto sys = build_system(64, 3);
    for (double level : {0.0, 1.0}) {
        Image img(64, 64, level);
        const auto vol = dsh_transform(img, sys);
        for (int s = 1; s < vol.num_slices(); ++s) EXPECT_LE(max_abs(vol.slices[s]), 1e-10);
    }
}

TEST(Shearlet, LinearityAndTranslation) {
    const auto sys = build_system(64, 3);
    const Image a = random_image(64, 1), b = random_image(64, 2);
    Image sum = a;
    for (std::size_t i = 0; i < sum.size(); ++i) sum.data[i] = 2 * a.data[i] - b.data[i];
    const auto va = dsh_transform(a, sys), vb = dsh_transform(b, sys), vs = dsh_transform(sum, sys);
    Image shifted = make_image(64);
    for (int r = 0; r < 64; ++r)
        for (int c = 0; c < 64; ++c) shifted((r + 5) % 64, (c + 3) % 64) = a(r, c);
    const auto vt = dsh_transform(shifted, sys);
    for (int s = 0; s < sys.num_slices(); ++s)
        for (int r = 0; r < 64; ++r)
            for (int c = 0; c < 64; ++c) {
                const std::size_t p = std::size_t(r) * 64 + c;
                EXPECT_NEAR(std::abs(vs.slices[s].data[p] - (2.0 * va.slices[s].data[p] - vb.slices[s].data[p])), 0, 1e-9);
                EXPECT_NEAR(std::abs(vt.slices[s]((r + 5) % 64, (c + 3) % 64) - va.slices[s](r, c)), 0, 1e-9);
            }
}

TEST(Shearlet, VerticalEdgeFavoursHorizontalNormal) {
    const int M = 128;
    const auto sys = build_system(M, 4);
    Image img = make_image(M);
    for (int r = 0; r < M; ++r)
        for (int c = M / 2; c < M; ++c) img(r, c) = 1;
    const auto vol = dsh_transform(img, sys);
    int best = -1;
    double bm = -1;
    for (int s : sys.slices_of_scale(4)) {
        const double m = std::abs(vol.slices[s](M / 2, M / 2));
        if (m > bm) {
            bm = m;
            best = s;
        }
    }
    EXPECT_EQ(orientation_of_slice(sys.key_of(best), 180), 0);
}

TEST(Shearlet, InvalidInputs) {
    EXPECT_THROW(build_system(63, 2), ConfigError);
    EXPECT_THROW(build_system(16, 2), ConfigError);
    EXPECT_THROW(build_system(64, 5), ConfigError);
    EXPECT_THROW(build_system(64, 0), ConfigError);
    const auto sys = build_system(64, 3);
    EXPECT_THROW(dsh_transform(make_image(128), sys), DimensionError);
    auto vol = dsh_transform(make_image(64), sys);
    vol.slices.pop_back();
    vol.keys.pop_back();
    EXPECT_THROW(dsh_inverse(vol, sys), DimensionError);
}
