#pragma once

#include <png.h>

#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "canonical.hpp"
#include "classifier.hpp"
#include "core.hpp"
#include "metrics.hpp"
#include "phantom.hpp"
#include "radon.hpp"
#include "shearlet.hpp"
#include "wavefront.hpp"

namespace microshear::io {

using json = nlohmann::json;
namespace fs = std::filesystem;

inline void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f << text;
    if (!f) throw IoError("write failed: " + path.string());
}

inline std::string read_text(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

inline json read_json(const fs::path& path) {
    try {
        return json::parse(read_text(path));
    } catch (const json::exception& e) {
        throw IoError("bad JSON in " + path.string() + ": " + e.what());
    }
}

// ---- base64 ----

inline std::string base64_encode(const std::uint8_t* p, std::size_t n) {
    static constexpr char tbl[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((n + 2) / 3 * 4);
    for (std::size_t i = 0; i < n; i += 3) {
        std::uint32_t v = std::uint32_t(p[i]) << 16;
        if (i + 1 < n) v |= std::uint32_t(p[i + 1]) << 8;
        if (i + 2 < n) v |= p[i + 2];
        out += tbl[(v >> 18) & 63];
        out += tbl[(v >> 12) & 63];
        out += i + 1 < n ? tbl[(v >> 6) & 63] : '=';
        out += i + 2 < n ? tbl[v & 63] : '=';
    }
    return out;
}

inline std::vector<std::uint8_t> base64_decode(const std::string& s) {
    auto val = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        return -1;
    };
    if (s.size() % 4 != 0) throw IoError("base64: length is not a multiple of 4");
    std::vector<std::uint8_t> out;
    for (std::size_t i = 0; i < s.size(); i += 4) {
        std::uint32_t v = 0;
        int pad = 0;
        for (int k = 0; k < 4; ++k) {
            const char c = s[i + k];
            if (c == '=') {
                ++pad;
                v <<= 6;
                continue;
            }
            const int d = val(c);
            if (d < 0 || pad) throw IoError("base64: invalid character");
            v = (v << 6) | std::uint32_t(d);
        }
        out.push_back(std::uint8_t(v >> 16));
        if (pad < 2) out.push_back(std::uint8_t(v >> 8));
        if (pad < 1) out.push_back(std::uint8_t(v));
    }
    return out;
}

// little-endian f64 arrays
inline std::string encode_f64(const std::vector<double>& v) {
    std::vector<std::uint8_t> bytes(v.size() * 8);
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::uint64_t u = std::bit_cast<std::uint64_t>(v[i]);
        for (int k = 0; k < 8; ++k) bytes[i * 8 + k] = std::uint8_t(u >> (8 * k));
    }
    return base64_encode(bytes.data(), bytes.size());
}

inline std::vector<double> decode_f64(const std::string& s) {
    const auto bytes = base64_decode(s);
    if (bytes.size() % 8 != 0) throw IoError("f64 array: byte count is not a multiple of 8");
    std::vector<double> v(bytes.size() / 8);
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::uint64_t u = 0;
        for (int k = 0; k < 8; ++k) u |= std::uint64_t(bytes[i * 8 + k]) << (8 * k);
        v[i] = std::bit_cast<double>(u);
    }
    return v;
}

// ---- wavefront CSV ----

inline std::string wavefront_csv(const WavefrontSet& wf, const char* header = "row,col,bin") {
    std::string s = std::string(header) + "\n";
    for (const auto& p : wf.points)
        s += std::to_string(p.row) + "," + std::to_string(p.col) + "," + std::to_string(p.bin) + "\n";
    return s;
}

inline void write_wavefront_csv(const fs::path& path, const WavefrontSet& wf) { write_text(path, wavefront_csv(wf)); }

inline void write_sino_wavefront_csv(const fs::path& path, const SinoWavefrontSet& wf) {
    write_text(path, wavefront_csv(wf, "angle_idx,offset_idx,dir_bin"));
}

inline WavefrontSet read_wavefront_csv(const fs::path& path, int M, int N) {
    std::istringstream in(read_text(path));
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty wavefront CSV: " + path.string());
    WavefrontSet wf(M, N);
    int ln = 1;
    while (std::getline(in, line)) {
        ++ln;
        if (line.empty()) continue;
        int r, c, b;
        if (std::sscanf(line.c_str(), "%d,%d,%d", &r, &c, &b) != 3)
            throw IoError(path.string() + ":" + std::to_string(ln) + ": malformed row");
        wf.add(r, c, b);
    }
    wf.normalize();
    if (!wf.valid()) throw IoError(path.string() + ": index out of range for grid " + std::to_string(M) +
                                     " and " + std::to_string(N) + " bins");
    return wf;
}

// ---- images ----

// 16-bit binary PGM, min-max scaled; the scale goes to a JSON sidecar.
inline void write_pgm16(const fs::path& path, const Image& img) {
    double lo = img.data.empty() ? 0 : img.data[0], hi = lo;
    for (double v : img.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = hi > lo ? hi - lo : 1.0;
    std::string out = "P5\n" + std::to_string(img.cols) + " " + std::to_string(img.rows) + "\n65535\n";
    out.reserve(out.size() + img.size() * 2);
    for (double v : img.data) {
        const auto q = std::uint16_t(std::lround((v - lo) / span * 65535.0));
        out += char(q >> 8);
        out += char(q & 0xff);
    }
    write_text(path, out);
    fs::path side = path;
    side += ".json";
    write_json(side, json{{"min", lo}, {"max", hi}, {"rows", img.rows}, {"cols", img.cols}, {"maxval", 65535}});
}

// SHRV: "SHRV", u32 LE {version=1, L, rows, cols}, then (re, im) f64 LE.
inline void write_shrv(const fs::path& path, const std::vector<const CGrid*>& slices) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    const int rows = slices.empty() ? 0 : slices[0]->rows, cols = slices.empty() ? 0 : slices[0]->cols;
    auto u32 = [&](std::uint32_t v) {
        char b[4];
        for (int k = 0; k < 4; ++k) b[k] = char((v >> (8 * k)) & 0xff);
        f.write(b, 4);
    };
    auto f64 = [&](double d) {
        const std::uint64_t u = std::bit_cast<std::uint64_t>(d);
        char b[8];
        for (int k = 0; k < 8; ++k) b[k] = char((u >> (8 * k)) & 0xff);
        f.write(b, 8);
    };
    f.write("SHRV", 4);
    u32(1);
    u32(std::uint32_t(slices.size()));
    u32(std::uint32_t(rows));
    u32(std::uint32_t(cols));
    for (const auto* s : slices)
        for (const auto& v : s->data) {
            f64(v.real());
            f64(v.imag());
        }
    if (!f) throw IoError("write failed: " + path.string());
}

inline void write_volume(const fs::path& path, const CoeffVolume& vol) {
    std::vector<const CGrid*> p;
    for (const auto& s : vol.slices) p.push_back(&s);
    write_shrv(path, p);
}

inline std::vector<CGrid> read_shrv(const fs::path& path) {
    const std::string buf = read_text(path);
    if (buf.size() < 20 || buf.compare(0, 4, "SHRV") != 0) throw IoError(path.string() + ": not an SHRV file");
    auto u32 = [&](std::size_t off) {
        std::uint32_t v = 0;
        for (int k = 0; k < 4; ++k) v |= std::uint32_t(std::uint8_t(buf[off + k])) << (8 * k);
        return v;
    };
    if (u32(4) != 1) throw IoError(path.string() + ": unsupported SHRV version");
    const std::uint32_t L = u32(8), rows = u32(12), cols = u32(16);
    const std::size_t need = 20 + std::size_t(L) * rows * cols * 16;
    if (buf.size() != need) throw IoError(path.string() + ": SHRV size does not match header");
    std::vector<CGrid> out(L, CGrid(int(rows), int(cols)));
    std::size_t off = 20;
    auto f64 = [&] {
        std::uint64_t u = 0;
        for (int k = 0; k < 8; ++k) u |= std::uint64_t(std::uint8_t(buf[off + k])) << (8 * k);
        off += 8;
        return std::bit_cast<double>(u);
    };
    for (auto& g : out)
        for (auto& v : g.data) {
            const double re = f64();
            v = {re, f64()};
        }
    return out;
}

inline void write_image_raw(const fs::path& path, const Image& img) {
    CGrid g = to_complex(img);
    write_shrv(path, {&g});
}

inline Image read_image_raw(const fs::path& path) {
    auto s = read_shrv(path);
    if (s.size() != 1) throw IoError(path.string() + ": expected a single-slice SHRV image");
    return real_part(s[0]);
}

inline json geometry_json(const SinoGeometry& g) {
    return {{"num_angles", g.num_angles}, {"num_offsets", g.num_offsets}, {"grid_size", g.grid_size}};
}

inline SinoGeometry geometry_from_json(const json& j) {
    SinoGeometry g;
    g.num_angles = j.at("num_angles").get<int>();
    g.num_offsets = j.at("num_offsets").get<int>();
    g.grid_size = j.at("grid_size").get<int>();
    g.validate();
    return g;
}

inline void write_sinogram(const fs::path& path, const Sinogram& s) {
    CGrid g(s.values.rows, s.values.cols);
    for (std::size_t i = 0; i < g.size(); ++i) g.data[i] = s.values.data[i];
    write_shrv(path, {&g});
    fs::path side = path;
    side += ".json";
    write_json(side, json{{"geometry", geometry_json(s.geometry)}, {"angle_mask", s.angle_mask}});
}

inline Sinogram read_sinogram(const fs::path& path) {
    fs::path side = path;
    side += ".json";
    const json meta = read_json(side);
    auto slices = read_shrv(path);
    if (slices.size() != 1) throw IoError(path.string() + ": expected a single-slice sinogram");
    Sinogram s(geometry_from_json(meta.at("geometry")));
    if (slices[0].rows != s.values.rows || slices[0].cols != s.values.cols)
        throw IoError(path.string() + ": sinogram shape does not match its sidecar");
    for (std::size_t i = 0; i < s.values.size(); ++i) s.values.data[i] = slices[0].data[i].real();
    s.angle_mask = meta.at("angle_mask").get<std::vector<int>>();
    return s;
}

// ---- phantom spec JSON ----

inline json phantom_json(const PhantomSpec& spec) {
    json els = json::array();
    for (const auto& e : spec.ellipses)
        els.push_back({{"cx", e.cx}, {"cy", e.cy}, {"a", e.a}, {"b", e.b}, {"alpha", e.alpha},
                       {"intensity", e.intensity}, {"edge_sigma", e.edge_sigma}});
    return {{"grid_size", spec.grid_size}, {"orientation_bins", spec.orientation_bins}, {"ellipses", els}};
}

inline PhantomSpec phantom_from_json(const json& j) {
    PhantomSpec s;
    try {
        s.grid_size = j.at("grid_size").get<int>();
        s.orientation_bins = j.value("orientation_bins", 180);
        for (const auto& e : j.at("ellipses")) {
            EllipseSpec el;
            el.cx = e.at("cx").get<double>();
            el.cy = e.at("cy").get<double>();
            el.a = e.at("a").get<double>();
            el.b = e.at("b").get<double>();
            el.alpha = e.value("alpha", 0.0);
            el.intensity = e.value("intensity", 1.0);
            el.edge_sigma = e.value("edge_sigma", 0.0);
            s.ellipses.push_back(el);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("phantom JSON: ") + e.what());
    }
    validate_spec(s);
    return s;
}

// ---- classifier model JSON ----

inline json model_json(const ClassifierModel& m) {
    json j{{"format", "microshear-classifier"},
           {"version", 1},
           {"kind", m.kind == ModelKind::LINEAR ? "LINEAR" : "MLP1"},
           {"target", target_name(m.target)},
           {"patch", m.patch},
           {"slices", m.slices},
           {"hidden", m.hidden},
           {"mean", encode_f64(m.mean)},
           {"stdev", encode_f64(m.stdev)},
           {"w", encode_f64(m.w)},
           {"b", encode_f64({m.b})},
           {"initial_loss", m.initial_loss},
           {"final_loss", m.final_loss},
           {"epoch_loss", m.epoch_loss}};
    if (m.kind == ModelKind::MLP1) {
        j["b1"] = encode_f64(m.b1);
        j["w2"] = encode_f64(m.w2);
    }
    if (!m.floor.empty()) j["log_floor"] = encode_f64(m.floor);
    return j;
}

inline ClassifierModel model_from_json(const json& j) {
    ClassifierModel m;
    try {
        if (j.at("version").get<int>() != 1) throw ConfigError("model JSON: unsupported version");
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "LINEAR") m.kind = ModelKind::LINEAR;
        else if (kind == "MLP1") m.kind = ModelKind::MLP1;
        else throw ConfigError("model JSON: unknown kind " + kind);
        const std::string t = j.at("target").get<std::string>();
        m.target = t == "EDGE" ? EDGE : std::stoi(t);
        m.patch = j.at("patch").get<int>();
        m.slices = j.at("slices").get<int>();
        m.hidden = j.at("hidden").get<int>();
        m.mean = decode_f64(j.at("mean").get<std::string>());
        m.stdev = decode_f64(j.at("stdev").get<std::string>());
        m.w = decode_f64(j.at("w").get<std::string>());
        m.b = decode_f64(j.at("b").get<std::string>()).at(0);
        if (m.kind == ModelKind::MLP1) {
            m.b1 = decode_f64(j.at("b1").get<std::string>());
            m.w2 = decode_f64(j.at("w2").get<std::string>());
        }
        if (j.contains("log_floor")) m.floor = decode_f64(j.at("log_floor").get<std::string>());
        m.initial_loss = j.value("initial_loss", 0.0);
        m.final_loss = j.value("final_loss", 0.0);
        m.epoch_loss = j.value("epoch_loss", std::vector<double>{});
    } catch (const json::exception& e) {
        throw ConfigError(std::string("model JSON: ") + e.what());
    }
    const std::size_t d = std::size_t(m.dim());
    const bool ok = m.mean.size() == std::size_t(m.slices) && m.stdev.size() == std::size_t(m.slices) &&
                    (m.kind == ModelKind::LINEAR ? m.w.size() == d
                                                 : m.w.size() == d * m.hidden && m.b1.size() == std::size_t(m.hidden) &&
                                                       m.w2.size() == std::size_t(m.hidden));
    if (!ok || (!m.floor.empty() && m.floor.size() != std::size_t(m.slices)))
        throw ConfigError("model JSON: array sizes do not match dims");
    for (double s : m.stdev)
        if (!(s > 0)) throw ConfigError("model JSON: normalization std must be > 0");
    return m;
}

inline json report_json(const EvalReport& r) {
    json bins = json::array();
    for (const auto& b : r.per_bin)
        bins.push_back({{"bin", b.bin}, {"precision", b.precision}, {"recall", b.recall}, {"f_score", b.f_score},
                        {"tp", b.tp}, {"fp", b.fp}, {"fn", b.fn}});
    return {{"mf_score", r.mf_score},
            {"match_tolerance", r.match_tolerance},
            {"angular_tolerance", r.angular_tolerance},
            {"per_bin", bins}};
}

// ---- PNG ----

inline void write_png_rgb(const fs::path& path, int width, int height, const std::vector<std::uint8_t>& rgb) {
    if (rgb.size() != std::size_t(width) * height * 3) throw DimensionError("write_png_rgb: buffer size mismatch");
    FILE* fp = std::fopen(path.string().c_str(), "wb");
    if (!fp) throw IoError("cannot open " + path.string() + " for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw IoError("libpng failed writing " + path.string());
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int r = 0; r < height; ++r)
        png_write_row(png, const_cast<png_bytep>(rgb.data() + std::size_t(r) * width * 3));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

// HSV hue wheel over the bins, full saturation and value; bin 0 is red.
inline std::array<std::uint8_t, 3> bin_color(int bin, int N) {
    const double h = 6.0 * bin / N;
    const int sector = int(h) % 6;
    const double f = h - std::floor(h);
    const auto up = std::uint8_t(std::lround(255 * f)), down = std::uint8_t(std::lround(255 * (1 - f)));
    switch (sector) {
    case 0: return {255, up, 0};
    case 1: return {down, 255, 0};
    case 2: return {0, 255, up};
    case 3: return {0, down, 255};
    case 4: return {up, 0, 255};
    default: return {255, 0, down};
    }
}

// Orientation map on black. Pixels holding several bins take the smallest.
inline std::vector<std::uint8_t> orientation_rgb(const WavefrontSet& wf) {
    std::vector<std::uint8_t> rgb(std::size_t(wf.rows) * wf.cols * 3, 0);
    std::vector<char> seen(std::size_t(wf.rows) * wf.cols, 0);
    for (const auto& p : wf.points) {
        const std::size_t i = std::size_t(p.row) * wf.cols + p.col;
        if (seen[i]) continue;
        seen[i] = 1;
        const auto c = bin_color(p.bin, wf.bins);
        for (int k = 0; k < 3; ++k) rgb[i * 3 + k] = c[k];
    }
    return rgb;
}

inline void write_orientation_png(const fs::path& path, const WavefrontSet& wf) {
    write_png_rgb(path, wf.cols, wf.rows, orientation_rgb(wf));
}

inline void write_gray_png(const fs::path& path, const Image& img) {
    double lo = img.data.empty() ? 0 : img.data[0], hi = lo;
    for (double v : img.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = hi > lo ? hi - lo : 1.0;
    std::vector<std::uint8_t> rgb(img.size() * 3);
    for (std::size_t i = 0; i < img.size(); ++i) {
        const auto q = std::uint8_t(std::lround((img.data[i] - lo) / span * 255));
        rgb[3 * i] = rgb[3 * i + 1] = rgb[3 * i + 2] = q;
    }
    write_png_rgb(path, img.cols, img.rows, rgb);
}

} // namespace microshear::io
