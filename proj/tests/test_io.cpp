#include <gtest/gtest.h>

#include <microshear/classifier.hpp>
#include <microshear/io.hpp>
#include <microshear/phantom.hpp>

#include <filesystem>

using namespace microshear;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / "microshear_test_io";
    fs::create_directories(d);
    return d / name;
}

std::uint32_t be32(const std::string& s, std::size_t off) {
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v = (v << 8) | std::uint8_t(s[off + k]);
    return v;
}

} // namespace

TEST(Io, Base64RoundTrip) {
    const std::vector<std::uint8_t> bytes{0, 1, 2, 250, 251, 255, 7};
    for (std::size_t n = 0; n <= bytes.size(); ++n) {
        const auto enc = io::base64_encode(bytes.data(), n);
        EXPECT_EQ(enc.size() % 4, 0u);
        EXPECT_EQ(io::base64_decode(enc), std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + n));
    }
    EXPECT_EQ(io::base64_encode(reinterpret_cast<const std::uint8_t*>("Man"), 3), "TWFu");
    const std::vector<double> v{0.0, -1.5, 1e-300, 3.141592653589793};
    EXPECT_EQ(io::decode_f64(io::encode_f64(v)), v);
    EXPECT_THROW(io::base64_decode("ab$d"), IoError);
}

TEST(Io, Pgm16IsBigEndian) {
    Image img(2, 3, 0.0);
    img(0, 1) = 1.0;
    img(1, 2) = 0.5;
    const auto p = scratch("img.pgm");
    io::write_pgm16(p, img);
    const std::string s = io::read_text(p);
    const std::string head = "P5\n3 2\n65535\n";
    ASSERT_EQ(s.substr(0, head.size()), head);
    ASSERT_EQ(s.size(), head.size() + 12);
    EXPECT_EQ(std::uint8_t(s[head.size() + 2]), 0xff);
    EXPECT_EQ(std::uint8_t(s[head.size() + 3]), 0xff);
    // 0.5 -> 32768 = 0x8000
    EXPECT_EQ(std::uint8_t(s[head.size() + 10]), 0x80);
    EXPECT_EQ(std::uint8_t(s[head.size() + 11]), 0x00);
    auto side = p;
    side += ".json";
    EXPECT_DOUBLE_EQ(io::read_json(side).at("max").get<double>(), 1.0);
}

TEST(Io, ShrvRoundTrip) {
    const auto sys = build_system(32, 1);
    const Image img = generate_phantom(2, [] {
                          PhantomConfig c;
                          c.grid_size = 32;
                          return c;
                      }())
                          .image;
    const auto vol = dsh_transform(img, sys);
    const auto p = scratch("vol.shrv");
    io::write_volume(p, vol);
    const auto back = io::read_shrv(p);
    ASSERT_EQ(int(back.size()), sys.num_slices());
    for (int s = 0; s < sys.num_slices(); ++s) EXPECT_EQ(back[s].data, vol.slices[s].data);
    const std::string raw = io::read_text(p);
    EXPECT_EQ(raw.substr(0, 4), "SHRV");
    EXPECT_EQ(std::uint8_t(raw[8]), sys.num_slices()); // little-endian L
    io::write_image_raw(scratch("img.raw"), img);
    EXPECT_EQ(io::read_image_raw(scratch("img.raw")).data, img.data);
    io::write_text(scratch("bad.shrv"), "SHRV\x01");
    EXPECT_THROW(io::read_shrv(scratch("bad.shrv")), IoError);
}

TEST(Io, WavefrontCsv) {
    WavefrontSet wf(16, 8);
    wf.add(3, 4, 5);
    wf.add(0, 0, 0);
    wf.normalize();
    const auto p = scratch("wf.csv");
    io::write_wavefront_csv(p, wf);
    EXPECT_EQ(io::read_text(p), "row,col,bin\n0,0,0\n3,4,5\n");
    EXPECT_EQ(io::read_wavefront_csv(p, 16, 8).points, wf.points);
    EXPECT_THROW(io::read_wavefront_csv(p, 16, 4), IoError);
    io::write_text(p, "row,col,bin\n1,x,2\n");
    EXPECT_THROW(io::read_wavefront_csv(p, 16, 8), IoError);
    EXPECT_THROW(io::read_wavefront_csv(scratch("missing.csv"), 16, 8), IoError);
}

TEST(Io, SinogramWithSidecar) {
    Sinogram s(SinoGeometry{6, 5, 8});
    for (std::size_t i = 0; i < s.values.size(); ++i) s.values.data[i] = double(i) / 3;
    s.angle_mask = {0, 3};
    const auto p = scratch("sino.shrv");
    io::write_sinogram(p, s);
    const Sinogram b = io::read_sinogram(p);
    EXPECT_EQ(b.geometry, s.geometry);
    EXPECT_EQ(b.angle_mask, s.angle_mask);
    EXPECT_EQ(b.values.data, s.values.data);
}

TEST(Io, PhantomSpecJson) {
    const auto ph = generate_phantom(4, PhantomConfig{});
    const PhantomSpec back = io::phantom_from_json(io::phantom_json(ph.spec));
    ASSERT_EQ(back.ellipses.size(), ph.spec.ellipses.size());
    EXPECT_EQ(rasterize(back).data, ph.image.data);
}

TEST(Io, ModelJsonRoundTrip) {
    for (ModelKind kind : {ModelKind::LINEAR, ModelKind::MLP1}) {
        auto m = init_model(kind, 3, 2, 4, 5, 9);
        m.mean = {0.5, 1.5};
        m.stdev = {2, 3};
        m.b = 0.25;
        m.final_loss = 0.1;
        const json j = io::model_json(m);
        EXPECT_EQ(j.at("version").get<int>(), 1);
        const auto b = io::model_from_json(j);
        EXPECT_EQ(b.kind, m.kind);
        EXPECT_EQ(b.target, 5);
        EXPECT_EQ(b.w, m.w);
        EXPECT_EQ(b.b1, m.b1);
        EXPECT_EQ(b.w2, m.w2);
        EXPECT_EQ(b.mean, m.mean);
        EXPECT_EQ(b.stdev, m.stdev);
        EXPECT_DOUBLE_EQ(b.b, m.b);
    }
    auto e = init_model(ModelKind::LINEAR, 1, 2, 0, EDGE, 1);
    EXPECT_EQ(io::model_from_json(io::model_json(e)).target, EDGE);
    json bad = io::model_json(e);
    bad["version"] = 99;
    EXPECT_THROW(io::model_from_json(bad), ConfigError);
}

TEST(Io, OrientationPng) {
    EXPECT_EQ(io::bin_color(0, 180), (std::array<std::uint8_t, 3>{255, 0, 0}));
    WavefrontSet wf(24, 180);
    wf.add(2, 3, 0);
    wf.add(5, 5, 90);
    wf.normalize();
    const auto rgb = io::orientation_rgb(wf);
    ASSERT_EQ(rgb.size(), 24u * 24 * 3);
    EXPECT_EQ(rgb[(2 * 24 + 3) * 3], 255);
    EXPECT_EQ(rgb[0], 0);
    const auto p = scratch("wf.png");
    io::write_orientation_png(p, wf);
    const std::string s = io::read_text(p);
    ASSERT_GT(s.size(), 24u);
    EXPECT_EQ(s.substr(1, 3), "PNG");
    EXPECT_EQ(be32(s, 16), 24u); // IHDR width
    EXPECT_EQ(be32(s, 20), 24u); // IHDR height
}
