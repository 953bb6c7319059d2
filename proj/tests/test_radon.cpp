#include <gtest/gtest.h>

#include <microshear/fft.hpp>
#include <microshear/radon.hpp>

#include <cmath>

using namespace microshear;

namespace {

Image disk(int M, double rad) {
    Image img = make_image(M);
    for (int r = 0; r < M; ++r)
        for (int c = 0; c < M; ++c) {
            const double x = pixel_x(c, M), y = pixel_y(r, M);
            img(r, c) = x * x + y * y <= rad * rad ? 1.0 : 0.0;
        }
    return img;
}

Image blob(int M, double x0, double y0, double s) {
    Image img = make_image(M);
    for (int r = 0; r < M; ++r)
        for (int c = 0; c < M; ++c) {
            const double dx = pixel_x(c, M) - x0, dy = pixel_y(r, M) - y0;
            img(r, c) = std::exp(-(dx * dx + dy * dy) / (2 * s * s));
        }
    return img;
}

Image random_image(int M, std::uint64_t seed) {
    Rng rng(seed);
    Image img = make_image(M);
    for (double& v : img.data) v = rng.uniform();
    return img;
}

// 90 degrees counter-clockwise, exact on the pixel grid
Image rotate90(const Image& a) {
    const int M = a.rows;
    Image out = make_image(M);
    for (int r = 0; r < M; ++r)
        for (int c = 0; c < M; ++c) out(M - 1 - c, r) = a(r, c);
    return out;
}

double image_dot(const Image& a, const Image& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.data[i] * b.data[i];
    return s * (2.0 / a.rows) * (2.0 / a.rows);
}

double sino_dot(const Sinogram& a, const Sinogram& b) {
    double s = 0;
    for (int i : a.angle_mask)
        for (int j = 0; j < a.geometry.num_offsets; ++j) s += a.values(i, j) * b.values(i, j);
    return s * (pi / a.angle_mask.size()) * a.geometry.offset_step();
}

double norm(const Image& f) { return std::sqrt(image_dot(f, f)); }

} // namespace

TEST(Radon, ZeroImageZeroSinogram) {
    const auto s = radon(make_image(64), SinoGeometry{30, 64, 64});
    for (double v : s.values.data) EXPECT_EQ(v, 0.0);
}

TEST(Radon, DiskMatchesChordLength) {
    const SinoGeometry g{180, 128, 128};
    const auto s = radon(disk(128, 0.5), g);
    double num = 0, den = 0;
    for (int i = 0; i < g.num_angles; ++i)
        for (int j = 0; j < g.num_offsets; ++j) {
            const double p = g.offset(j);
            const double ref = std::abs(p) < 0.5 ? 2 * std::sqrt(0.25 - p * p) : 0.0;
            num += (s.values(i, j) - ref) * (s.values(i, j) - ref);
            den += ref * ref;
        }
    EXPECT_LE(std::sqrt(num / den), 0.02);
}

TEST(Radon, MassIsConserved) {
    const int M = 64;
    const Image f = blob(M, 0.2, -0.1, 0.15);
    double mass = 0;
    for (double v : f.data) mass += v;
    mass *= (2.0 / M) * (2.0 / M);
    const SinoGeometry g{36, 96, M};
    const auto s = radon(f, g);
    for (int i = 0; i < g.num_angles; ++i) {
        double m = 0;
        for (int j = 0; j < g.num_offsets; ++j) m += s.values(i, j);
        EXPECT_NEAR(m * g.offset_step(), mass, 0.01 * mass) << i;
    }
}

TEST(Radon, AdjointConsistency) {
    const SinoGeometry g{60, 64, 64};
    const Image f = random_image(64, 1);
    Sinogram s(g);
    Rng rng(2);
    for (double& v : s.values.data) v = rng.uniform();
    const double lhs = sino_dot(radon(f, g), s);
    const double rhs = image_dot(f, backproject(s));
    EXPECT_NEAR(lhs, rhs, 0.01 * std::abs(rhs));
}

TEST(Radon, RotationShiftsAngles) {
    const SinoGeometry g{180, 64, 64};
    const Image f = random_image(64, 4);
    const auto a = radon(f, g);
    const auto b = radon(rotate90(f), g);
    for (int i = 0; i < 180; ++i)
        for (int j = 0; j < 64; ++j) {
            const double ref = i >= 90 ? a.values(i - 90, j) : a.values(i + 90, 63 - j);
            EXPECT_NEAR(b.values(i, j), ref, 1e-9);
        }
}

TEST(Radon, EvenUnderPointReflection) {
    const SinoGeometry g{45, 65, 64};
    const Image f = random_image(64, 5);
    Image refl = make_image(64);
    for (int r = 0; r < 64; ++r)
        for (int c = 0; c < 64; ++c) refl(r, c) = f(63 - r, 63 - c);
    const auto a = radon(f, g), b = radon(refl, g);
    for (int i = 0; i < 45; ++i)
        for (int j = 0; j < 65; ++j) EXPECT_NEAR(b.values(i, j), a.values(i, 64 - j), 1e-9);
}

TEST(Radon, BackprojectedBlobIsRotationSymmetric) {
    const Image f = blob(64, 0, 0, 0.1);
    const Image h = backproject(radon(f, SinoGeometry{180, 64, 64}));
    EXPECT_LE(rel_l2_error(rotate90(h), h), 0.02);
}

TEST(Radon, SingleAngleBackprojectsAlongLines) {
    const SinoGeometry g{180, 64, 64};
    Sinogram s = radon(random_image(64, 6), g);
    s.angle_mask = {0};
    const Image h = backproject(s);
    // angle 0: normal along x, lines are image columns
    for (int c = 0; c < 64; ++c)
        for (int r = 1; r < 64; ++r) EXPECT_NEAR(h(r, c), h(0, c), 1e-12);
    s.angle_mask = {90};
    const Image v = backproject(s);
    for (int r = 0; r < 64; ++r)
        for (int c = 1; c < 64; ++c) EXPECT_NEAR(v(r, c), v(r, 0), 1e-12);
}

TEST(Radon, FbpRecoversDisk) {
    const int M = 128;
    const Image f = disk(M, 0.5);
    const Image rec = fbp(radon(f, SinoGeometry{180, 128, M}));
    double num = 0, den = 0;
    for (std::size_t i = 0; i < f.size(); ++i)
        if (f.data[i] > 0) {
            num += (rec.data[i] - 1) * (rec.data[i] - 1);
            den += 1;
        }
    EXPECT_LE(std::sqrt(num / den), 0.10);
}

TEST(Radon, HannDampsHighFrequencies) {
    const SinoGeometry g{30, 128, 128};
    const auto s = radon(disk(128, 0.4), g);
    auto top_quartile = [&](const Sinogram& f) {
        double e = 0;
        for (int i = 0; i < g.num_angles; ++i) {
            std::vector<cplx> row(g.num_offsets);
            for (int j = 0; j < g.num_offsets; ++j) row[j] = f.values(i, j);
            Fft::forward1d(row.data(), g.num_offsets);
            for (int k = 0; k < g.num_offsets; ++k) {
                const int kk = k <= g.num_offsets / 2 ? k : g.num_offsets - k;
                if (kk >= 3 * g.num_offsets / 8) e += std::norm(row[k]);
            }
        }
        return e;
    };
    EXPECT_LT(top_quartile(ramp_filter(s, RampFilter::HANN)), top_quartile(ramp_filter(s, RampFilter::RAM_LAK)));
}

TEST(Radon, SubsampleAngles) {
    const SinoGeometry g{180, 32, 32};
    const auto s = radon(random_image(32, 7), g);
    const auto one = subsample_angles(s, 1);
    EXPECT_EQ(one.angle_mask, s.angle_mask);
    EXPECT_EQ(one.values.data, s.values.data);
    const auto six = subsample_angles(s, 6);
    EXPECT_EQ(six.angle_mask.size(), 30u);
    const auto twice = subsample_angles(subsample_angles(s, 2), 3);
    EXPECT_EQ(twice.angle_mask, six.angle_mask);
    EXPECT_EQ(twice.values.data, six.values.data);
    for (int j = 0; j < 32; ++j) EXPECT_EQ(six.values(1, j), 0.0);
    EXPECT_THROW(subsample_angles(s, 0), ConfigError);
}

TEST(Radon, MaskedRowsMatchFull) {
    const SinoGeometry g{60, 48, 48};
    const Image f = random_image(48, 8);
    const auto full = radon(f, g);
    const auto part = radon_masked(f, g, {0, 7, 59});
    for (int i : {0, 7, 59})
        for (int j = 0; j < 48; ++j) EXPECT_EQ(part.values(i, j), full.values(i, j));
    EXPECT_THROW(radon_masked(f, g, {60}), ConfigError);
}

TEST(Radon, Tikhonov) {
    const SinoGeometry g{60, 64, 64};
    const auto s = subsample_angles(radon(disk(64, 0.4), g), 2);
    const Image rhs = backproject(s);
    const Image big = tikhonov(s, 1e6, 20);
    EXPECT_LE(norm(big), 1e-3 * norm(rhs));
    const Image zero = tikhonov(s, 0.1, 0);
    for (double v : zero.data) EXPECT_EQ(v, 0.0);
    const auto tr = tikhonov_trace(s, 0.01, 100);
    ASSERT_EQ(tr.objective.size(), 10u);
    EXPECT_EQ(tr.objective.front().first, 10);
    EXPECT_EQ(tr.objective.back().first, 100);
    EXPECT_LT(tr.objective.back().second, tr.objective.front().second);
    EXPECT_THROW(tikhonov(s, 0, 10), ConfigError);
    EXPECT_THROW(tikhonov(s, 1, -1), ConfigError);
}

TEST(Radon, GeometryErrors) {
    EXPECT_THROW(radon(make_image(32), SinoGeometry{1, 32, 32}), ConfigError);
    EXPECT_THROW(radon(make_image(32), SinoGeometry{10, 32, 64}), DimensionError);
    Sinogram s(SinoGeometry{10, 32, 32});
    s.angle_mask.clear();
    EXPECT_THROW(backproject(s), ConfigError);
}
