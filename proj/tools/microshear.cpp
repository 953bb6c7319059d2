// microshear: phantoms, shearlet transforms, wavefront-set extraction,
// classifier training and tomography experiments from the command line.
//
// Every command writes manifest_<command>.json with its resolved settings.
// Exit codes: 0 success, 1 numerical failure, 2 I/O or configuration error.

#include <CLI11.hpp>

#include <microshear/canonical.hpp>
#include <microshear/classifier.hpp>
#include <microshear/experiment.hpp>
#include <microshear/extract_decay.hpp>
#include <microshear/io.hpp>
#include <microshear/metrics.hpp>
#include <microshear/phantom.hpp>
#include <microshear/radon.hpp>
#include <microshear/shearlet.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace microshear;
using io::json;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Globals {
    std::string out = ".";
};

fs::path resolve(const Globals& g, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path : fs::path(g.out) / path;
}

void ensure_out(const Globals& g) {
    std::error_code ec;
    fs::create_directories(g.out, ec);
    if (ec || !fs::is_directory(g.out)) throw IoError("cannot create output directory " + g.out);
}

void write_manifest(const Globals& g, const std::string& command, json config, const std::vector<std::string>& outputs) {
    json m{{"tool", "microshear"}, {"version", kVersion}, {"command", command}, {"config", std::move(config)},
           {"outputs", outputs}};
    std::string name = command;
    std::replace(name.begin(), name.end(), ' ', '_');
    io::write_json(resolve(g, "manifest_" + name + ".json"), m);
}

json decay_json(const DecayParams& p) {
    return {{"edge_quantile", p.edge_quantile},     {"slope_threshold", p.slope_threshold},
            {"min_scales", p.min_scales},           {"coarse_sigma", p.coarse_sigma},
            {"fine_sigma", p.fine_sigma},           {"coherence_threshold", p.coherence_threshold},
            {"suppress_non_maxima", p.suppress_non_maxima}, {"dominance", p.dominance},
            {"dominance_reach", p.dominance_reach}};
}

void add_decay_flags(CLI::App* c, DecayParams& p) {
    c->add_option("--quantile", p.edge_quantile, "finest-scale magnitude quantile")->capture_default_str();
    c->add_option("--slope", p.slope_threshold, "minimum log2-magnitude slope across scales")->capture_default_str();
    c->add_option("--min-scales", p.min_scales, "finest scales in the decay fit")->capture_default_str();
    c->add_option("--dominance", p.dominance, "side-lobe rejection ratio, 0 disables")->capture_default_str();
}

Image load_image(const Globals& g, const std::string& path) {
    const fs::path p = resolve(g, path);
    if (!fs::exists(p)) throw IoError("input image not found: " + p.string());
    return io::read_image_raw(p);
}

std::string fixed_table(const std::vector<std::string>& head, const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> w(head.size());
    for (std::size_t i = 0; i < head.size(); ++i) w[i] = head[i].size();
    for (const auto& r : rows)
        for (std::size_t i = 0; i < r.size(); ++i) w[i] = std::max(w[i], r[i].size());
    std::ostringstream os;
    auto line = [&](const std::vector<std::string>& r) {
        for (std::size_t i = 0; i < r.size(); ++i) {
            os << (i ? "  " : "") << r[i];
            if (i + 1 < r.size()) os << std::string(w[i] - r[i].size(), ' ');
        }
        os << "\n";
    };
    line(head);
    std::size_t total = 0;
    for (auto x : w) total += x;
    os << std::string(total + 2 * (w.size() - 1), '-') << "\n";
    for (const auto& r : rows) line(r);
    return os.str();
}

std::string fmt(double v, int prec = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", prec, v);
    return buf;
}

// ---- phantom ----

struct PhantomOpts {
    std::uint64_t seed = 1;
    int size = 128;
    int ellipses = 5;
    int bins = 180;
    double edge_sigma = 0;
    int count = 1;
    std::string prefix = "phantom";
};

void cmd_phantom(const Globals& g, const PhantomOpts& o) {
    ensure_out(g);
    PhantomConfig cfg;
    cfg.grid_size = o.size;
    cfg.num_inner = o.ellipses;
    cfg.orientation_bins = o.bins;
    cfg.edge_sigma = o.edge_sigma;
    cfg.validate();
    if (o.count < 1) throw ConfigError("phantom: --count must be >= 1");
    std::vector<std::string> outs;
    for (int k = 0; k < o.count; ++k) {
        const std::uint64_t seed = o.seed + std::uint64_t(k);
        const Phantom ph = generate_phantom(seed, cfg);
        const std::string stem = o.count == 1 ? o.prefix : o.prefix + "_" + std::to_string(seed);
        io::write_pgm16(resolve(g, stem + ".pgm"), ph.image);
        io::write_image_raw(resolve(g, stem + ".raw"), ph.image);
        io::write_wavefront_csv(resolve(g, stem + "_wf.csv"), ph.wavefront);
        json spec = io::phantom_json(ph.spec);
        spec["seed"] = seed;
        spec["rejected_ellipses"] = ph.rejected_ellipses;
        io::write_json(resolve(g, stem + ".json"), spec);
        for (const char* ext : {".pgm", ".pgm.json", ".raw", "_wf.csv", ".json"}) outs.push_back(stem + ext);
        if (ph.rejected_ellipses > 0)
            std::cerr << "phantom " << seed << ": " << ph.rejected_ellipses << " inner ellipse(s) could not be placed\n";
    }
    write_manifest(g, "phantom",
                   {{"seed", o.seed}, {"size", o.size}, {"ellipses", o.ellipses}, {"bins", o.bins},
                    {"edge_sigma", o.edge_sigma}, {"count", o.count}, {"prefix", o.prefix}},
                   outs);
    std::cout << "wrote " << outs.size() << " files to " << g.out << "\n";
}

// ---- shearlet ----

struct ShearletOpts {
    std::string input;
    std::uint64_t seed = 1;
    int size = 128;
    int scales = 4;
    std::string output = "volume.shrv";
};

Image shearlet_input(const Globals& g, const ShearletOpts& o) {
    if (!o.input.empty()) return load_image(g, o.input);
    PhantomConfig cfg;
    cfg.grid_size = o.size;
    return generate_phantom(o.seed, cfg).image;
}

json shearlet_config(const ShearletOpts& o, const Image& img) {
    json c{{"scales", o.scales}, {"size", img.rows}};
    if (o.input.empty()) c["phantom_seed"] = o.seed;
    else c["input"] = o.input;
    return c;
}

void cmd_shearlet_transform(const Globals& g, const ShearletOpts& o) {
    ensure_out(g);
    const Image img = shearlet_input(g, o);
    const ShearletSystem sys(img.rows, o.scales);
    const CoeffVolume vol = dsh_transform(img, sys);
    io::write_volume(resolve(g, o.output), vol);
    json keys = json::array();
    for (const auto& k : sys.keys()) keys.push_back(to_string(k));
    json c = shearlet_config(o, img);
    c["slices"] = sys.num_slices();
    c["slice_keys"] = keys;
    write_manifest(g, "shearlet transform", c, {o.output});
    std::cout << "L=" << sys.num_slices() << " slices of " << img.rows << "x" << img.cols << " -> " << o.output << "\n";
}

void cmd_shearlet_roundtrip(const Globals& g, const ShearletOpts& o) {
    ensure_out(g);
    const Image img = shearlet_input(g, o);
    const ShearletSystem sys(img.rows, o.scales);
    const Image rec = dsh_inverse(dsh_transform(img, sys), sys);
    const double err = rel_l2_error(rec, img);
    if (!std::isfinite(err)) throw NumericalError("roundtrip: non-finite reconstruction error");
    json c = shearlet_config(o, img);
    io::write_json(resolve(g, "roundtrip.json"), {{"relative_l2_error", err}, {"slices", sys.num_slices()}});
    write_manifest(g, "shearlet roundtrip", c, {"roundtrip.json"});
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3e", err);
    std::cout << "roundtrip relative L2 error " << buf << "\n";
}

// ---- extract ----

struct ExtractOpts {
    std::string input;
    int scales = 4;
    int bins = 180;
    DecayParams decay;
    std::string models = "models";
    double tau = LearnedSetup{}.tau;
    bool thin = LearnedSetup{}.thin;
    std::string rule = "ARGMAX";
    std::string output = "wf.csv";
    std::string png;
};

std::map<int, ClassifierModel> load_models(const fs::path& dir, int bins) {
    std::map<int, ClassifierModel> models;
    for (int t : learned_targets(bins)) {
        const fs::path p = dir / ("model_" + target_name(t) + ".json");
        if (!fs::exists(p)) throw IoError("missing model file: " + p.string());
        models[t] = io::model_from_json(io::read_json(p));
        if (models[t].target != t) throw ConfigError("model file " + p.string() + " holds another target");
    }
    return models;
}

void finish_extract(const Globals& g, const ExtractOpts& o, const WavefrontSet& wf, const std::string& command,
                    json c) {
    std::vector<std::string> outs{o.output};
    io::write_wavefront_csv(resolve(g, o.output), wf);
    if (!o.png.empty()) {
        io::write_orientation_png(resolve(g, o.png), wf);
        outs.push_back(o.png);
    }
    c["input"] = o.input;
    c["scales"] = o.scales;
    c["bins"] = o.bins;
    write_manifest(g, command, c, outs);
    std::cout << wf.size() << " wavefront points -> " << o.output << "\n";
}

void cmd_extract_decay(const Globals& g, const ExtractOpts& o) {
    ensure_out(g);
    const Image img = load_image(g, o.input);
    const ShearletSystem sys(img.rows, o.scales);
    const WavefrontSet wf = extract_wavefront_decay(img, sys, o.decay, o.bins);
    finish_extract(g, o, wf, "extract decay", {{"decay", decay_json(o.decay)}});
}

void cmd_extract_learned(const Globals& g, const ExtractOpts& o) {
    ensure_out(g);
    const Image img = load_image(g, o.input);
    const fs::path dir = resolve(g, o.models);
    if (!fs::is_directory(dir)) throw IoError("model directory not found: " + dir.string());
    ExtractOpts eff = o;
    if (eff.bins <= 0) {
        // one model per orientation bin next to the EDGE gate
        eff.bins = 0;
        for (const auto& e : fs::directory_iterator(dir)) {
            const std::string f = e.path().filename().string();
            if (f.rfind("model_", 0) == 0 && f != "model_EDGE.json" && e.path().extension() == ".json") ++eff.bins;
        }
        if (eff.bins < 2) throw IoError("no per-bin model files in " + dir.string());
    }
    BinRule rule;
    if (o.rule == "ARGMAX") rule = BinRule::ARGMAX;
    else if (o.rule == "ALL_ABOVE") rule = BinRule::ALL_ABOVE;
    else throw ConfigError("extract learned: --rule must be ARGMAX or ALL_ABOVE");
    const auto models = load_models(dir, eff.bins);
    const ShearletSystem sys(img.rows, o.scales);
    const WavefrontSet wf = classify_image(img, sys, models, eff.bins, o.tau, o.thin, rule);
    finish_extract(g, eff, wf, "extract learned",
                   {{"models", o.models}, {"tau", o.tau}, {"thin", o.thin}, {"rule", o.rule}});
}

// ---- train ----

struct TrainOpts {
    std::string dataset = "dataset";
    int num_images = 0; // 0 = all
    int bins = 8;
    int truth_bins = 180;
    int scales = 4;
    std::string kind = "MLP1";
    LearnedSetup setup;
    std::uint64_t seed = 1;
    std::string models = "models";
};

void cmd_train(const Globals& g, TrainOpts o) {
    ensure_out(g);
    o.setup.bins = o.bins;
    if (o.kind == "LINEAR") o.setup.kind = ModelKind::LINEAR;
    else if (o.kind == "MLP1") o.setup.kind = ModelKind::MLP1;
    else throw ConfigError("train: --kind must be LINEAR or MLP1");
    o.setup.train.validate();
    const fs::path dir = resolve(g, o.dataset);
    if (!fs::is_directory(dir)) throw IoError("dataset directory not found: " + dir.string());
    std::vector<fs::path> raws;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".raw") raws.push_back(e.path());
    std::sort(raws.begin(), raws.end());
    if (o.num_images > 0 && std::size_t(o.num_images) < raws.size()) raws.resize(o.num_images);
    if (raws.empty()) throw IoError("dataset has no .raw images: " + dir.string());

    std::vector<Image> images;
    std::vector<WavefrontSet> truths;
    for (const auto& r : raws) {
        fs::path csv = r;
        csv.replace_filename(r.stem().string() + "_wf.csv");
        if (!fs::exists(csv)) throw IoError("missing ground-truth CSV: " + csv.string());
        images.push_back(io::read_image_raw(r));
        truths.push_back(rebin(io::read_wavefront_csv(csv, images.back().rows, o.truth_bins), o.bins));
    }
    const ShearletSystem sys(images.front().rows, o.scales);
    const auto models = train_models(images, truths, sys, o.setup, o.seed);

    const fs::path mdir = resolve(g, o.models);
    fs::create_directories(mdir);
    std::string log = "target,epoch,loss\n";
    std::vector<std::string> outs;
    json summary = json::array();
    for (const auto& [t, m] : models) {
        const std::string name = "model_" + target_name(t) + ".json";
        io::write_json(mdir / name, io::model_json(m));
        outs.push_back((fs::path(o.models) / name).string());
        for (std::size_t e = 0; e < m.epoch_loss.size(); ++e)
            log += target_name(t) + "," + std::to_string(e + 1) + "," + fmt(m.epoch_loss[e], 8) + "\n";
        summary.push_back({{"target", target_name(t)}, {"initial_loss", m.initial_loss}, {"final_loss", m.final_loss}});
    }
    io::write_text(resolve(g, "train_log.csv"), log);
    outs.push_back("train_log.csv");
    const auto& tc = o.setup.train;
    write_manifest(g, "train",
                   {{"dataset", o.dataset}, {"images", raws.size()}, {"bins", o.bins}, {"truth_bins", o.truth_bins},
                    {"scales", o.scales}, {"kind", o.kind}, {"hidden", o.setup.hidden}, {"patch", o.setup.patch},
                    {"per_image", o.setup.per_image}, {"seed", o.seed},
                    {"train", {{"learning_rate", tc.learning_rate}, {"batch_size", tc.batch_size},
                               {"epochs", tc.epochs}, {"l2_penalty", tc.l2_penalty}}},
                    {"models", summary}},
                   outs);
    std::cout << "trained " << models.size() << " models on " << raws.size() << " images -> " << o.models << "\n";
}

// ---- evaluate ----

struct EvalOpts {
    std::string pred, truth;
    int size = 128;
    int bins = 180;
    double tol_px = 1;
    int tol_bin = 1;
    std::string output = "report.json";
};

void cmd_evaluate(const Globals& g, const EvalOpts& o) {
    ensure_out(g);
    for (const auto* p : {&o.pred, &o.truth})
        if (!fs::exists(resolve(g, *p))) throw IoError("wavefront CSV not found: " + resolve(g, *p).string());
    const auto pred = io::read_wavefront_csv(resolve(g, o.pred), o.size, o.bins);
    const auto truth = io::read_wavefront_csv(resolve(g, o.truth), o.size, o.bins);
    const EvalReport r = evaluate(pred, truth, o.tol_px, o.tol_bin);
    io::write_json(resolve(g, o.output), io::report_json(r));
    std::vector<std::vector<std::string>> rows;
    for (const auto& b : r.per_bin)
        rows.push_back({std::to_string(b.bin), fmt(b.precision), fmt(b.recall), fmt(b.f_score), std::to_string(b.tp),
                        std::to_string(b.fp), std::to_string(b.fn)});
    std::cout << fixed_table({"bin", "precision", "recall", "F", "tp", "fp", "fn"}, rows);
    std::cout << "MF-score " << fmt(r.mf_score) << "\n";
    write_manifest(g, "evaluate",
                   {{"pred", o.pred}, {"truth", o.truth}, {"size", o.size}, {"bins", o.bins}, {"tol_px", o.tol_px},
                    {"tol_bin", o.tol_bin}},
                   {o.output});
}

// ---- tomo ----

struct TomoOpts {
    std::string input;
    std::string sino = "sinogram.shrv";
    std::string wf = "wf.csv";
    std::string sino_wf = "sino_wf.csv";
    std::string output;
    int angles = 180;
    int offsets = 0; // 0 = grid size
    int size = 128;
    int bins = 180;
    int dir_bins = 1440;
    int step = 1;
    std::string filter = "RAM_LAK";
    double lambda = 0.01;
    int iters = 100;
    std::uint64_t seed = 1;
    LowdoseConfig lowdose;
};

SinoGeometry tomo_geometry(const TomoOpts& o, int M) {
    SinoGeometry geom{o.angles, o.offsets > 0 ? o.offsets : M, M};
    geom.validate();
    return geom;
}

std::string out_or(const TomoOpts& o, const char* fallback) { return o.output.empty() ? fallback : o.output; }

Sinogram load_sino(const Globals& g, const TomoOpts& o) {
    const fs::path p = resolve(g, o.sino);
    if (!fs::exists(p)) throw IoError("sinogram not found: " + p.string());
    return io::read_sinogram(p);
}

void cmd_tomo_forward(const Globals& g, const TomoOpts& o) {
    ensure_out(g);
    const Image img = load_image(g, o.input);
    const SinoGeometry geom = tomo_geometry(o, img.rows);
    const Sinogram s = subsample_angles(radon(img, geom), o.step);
    const std::string out = out_or(o, "sinogram.shrv");
    io::write_sinogram(resolve(g, out), s);
    write_manifest(g, "tomo forward",
                   {{"input", o.input}, {"geometry", io::geometry_json(geom)}, {"step", o.step}},
                   {out, out + ".json"});
    std::cout << geom.num_angles << "x" << geom.num_offsets << " sinogram, " << s.angle_mask.size()
              << " measured angles -> " << out << "\n";
}

void write_recon(const Globals& g, const Image& rec, const std::string& out) {
    io::write_image_raw(resolve(g, out), rec);
    fs::path png = out;
    png.replace_extension(".png");
    io::write_gray_png(resolve(g, png.string()), rec);
}

void cmd_tomo_fbp(const Globals& g, const TomoOpts& o) {
    ensure_out(g);
    RampFilter f;
    if (o.filter == "RAM_LAK") f = RampFilter::RAM_LAK;
    else if (o.filter == "HANN") f = RampFilter::HANN;
    else throw ConfigError("fbp: --filter must be RAM_LAK or HANN");
    const Image rec = fbp(load_sino(g, o), f);
    const std::string out = out_or(o, "fbp.raw");
    write_recon(g, rec, out);
    fs::path png = out;
    png.replace_extension(".png");
    write_manifest(g, "tomo fbp", {{"sino", o.sino}, {"filter", o.filter}}, {out, png.string()});
    std::cout << "FBP reconstruction -> " << out << "\n";
}

void cmd_tomo_tikhonov(const Globals& g, const TomoOpts& o) {
    ensure_out(g);
    const TikhonovResult r = tikhonov_trace(load_sino(g, o), o.lambda, o.iters);
    const std::string out = out_or(o, "tikhonov.raw");
    write_recon(g, r.image, out);
    std::string log = "iteration,objective\n";
    for (const auto& [it, v] : r.objective) log += std::to_string(it) + "," + fmt(v, 10) + "\n";
    io::write_text(resolve(g, "tikhonov_objective.csv"), log);
    fs::path png = out;
    png.replace_extension(".png");
    write_manifest(g, "tomo tikhonov",
                   {{"sino", o.sino}, {"lambda", o.lambda}, {"iters", o.iters}, {"step", r.step},
                    {"norm_estimate", r.norm_estimate}},
                   {out, png.string(), "tikhonov_objective.csv"});
    std::cout << "Tikhonov reconstruction -> " << out << "\n";
}

void cmd_tomo_canonical_fwd(const Globals& g, const TomoOpts& o) {
    ensure_out(g);
    const fs::path in = resolve(g, o.wf);
    if (!fs::exists(in)) throw IoError("wavefront CSV not found: " + in.string());
    const WavefrontSet wf = io::read_wavefront_csv(in, o.size, o.bins);
    const SinoGeometry geom = tomo_geometry(o, o.size);
    const auto swf = image_wf_to_sino_wf(wf, geom, o.dir_bins);
    const std::string out = out_or(o, "sino_wf.csv");
    io::write_sino_wavefront_csv(resolve(g, out), swf);
    write_manifest(g, "tomo canonical-fwd",
                   {{"wf", o.wf}, {"bins", o.bins}, {"dir_bins", o.dir_bins}, {"geometry", io::geometry_json(geom)}},
                   {out});
    std::cout << swf.size() << " sinogram wavefront points -> " << out << "\n";
}

void cmd_tomo_canonical_inv(const Globals& g, const TomoOpts& o) {
    ensure_out(g);
    const fs::path in = resolve(g, o.sino_wf);
    if (!fs::exists(in)) throw IoError("sinogram wavefront CSV not found: " + in.string());
    const SinoGeometry geom = tomo_geometry(o, o.size);
    // the reader checks rows against the grid size; sinogram charts are not square
    std::istringstream txt(io::read_text(in));
    std::string line;
    std::getline(txt, line);
    SinoWavefrontSet swf(geom, o.dir_bins);
    int ln = 1;
    while (std::getline(txt, line)) {
        ++ln;
        if (line.empty()) continue;
        int a, p, b;
        if (std::sscanf(line.c_str(), "%d,%d,%d", &a, &p, &b) != 3)
            throw IoError(in.string() + ":" + std::to_string(ln) + ": malformed row");
        swf.add(a, p, b);
    }
    swf.normalize();
    if (!swf.valid()) throw IoError(in.string() + ": index out of range for the geometry");
    const WavefrontSet wf = sino_wf_to_image_wf(swf, o.bins);
    const std::string out = out_or(o, "wf_from_sino.csv");
    io::write_wavefront_csv(resolve(g, out), wf);
    write_manifest(g, "tomo canonical-inv",
                   {{"sino_wf", o.sino_wf}, {"bins", o.bins}, {"dir_bins", o.dir_bins},
                    {"geometry", io::geometry_json(geom)}},
                   {out});
    std::cout << wf.size() << " image wavefront points -> " << out << "\n";
}

void cmd_tomo_lowdose(const Globals& g, const TomoOpts& o) {
    ensure_out(g);
    LowdoseConfig cfg = o.lowdose;
    cfg.phantom.grid_size = cfg.grid_size;
    const LowdoseResult r = run_lowdose(o.seed, cfg);

    std::string csv = "method,wf_mse,points\n";
    std::vector<std::vector<std::string>> rows;
    json jrows = json::array();
    for (const auto& row : r.rows) {
        csv += row.method + "," + fmt(row.wf_mse, 6) + "," + std::to_string(row.points) + "\n";
        rows.push_back({row.method, fmt(row.wf_mse, 3), std::to_string(row.points)});
        jrows.push_back({{"method", row.method}, {"wf_mse", row.wf_mse}, {"points", row.points}});
    }
    io::write_text(resolve(g, "lowdose.csv"), csv);
    io::write_wavefront_csv(resolve(g, "lowdose_truth_wf.csv"), r.phantom.wavefront);
    io::write_wavefront_csv(resolve(g, "lowdose_canonical_wf.csv"), r.canonical);
    io::write_wavefront_csv(resolve(g, "lowdose_fbp_wf.csv"), r.fbp);
    io::write_wavefront_csv(resolve(g, "lowdose_tikhonov_wf.csv"), r.tikhonov);
    io::write_sino_wavefront_csv(resolve(g, "lowdose_sino_wf.csv"), r.sino_wf);
    const json config{{"seed", o.seed},
                      {"grid_size", cfg.grid_size},
                      {"geometry", io::geometry_json(cfg.geometry())},
                      {"step", cfg.step},
                      {"measured_angles", r.sinogram.angle_mask.size()},
                      {"num_scales", cfg.num_scales},
                      {"image_bins", cfg.image_bins},
                      {"dir_bins", cfg.dir_bins},
                      {"lambda", cfg.lambda},
                      {"iters", cfg.iters},
                      {"angle_weight", cfg.angle_weight},
                      {"image_decay", decay_json(cfg.image_decay)},
                      {"sino_decay", decay_json(cfg.sino_decay)},
                      {"sino_angle_sigma", cfg.sino_angle_sigma}};
    io::write_json(resolve(g, "lowdose.json"), {{"config", config}, {"rows", jrows}});
    write_manifest(g, "tomo lowdose-experiment", config,
                   {"lowdose.csv", "lowdose.json", "lowdose_truth_wf.csv", "lowdose_canonical_wf.csv",
                    "lowdose_fbp_wf.csv", "lowdose_tikhonov_wf.csv", "lowdose_sino_wf.csv"});
    std::cout << "Error of wavefront set estimation (every " << cfg.step << " angle steps, seed " << o.seed << ")\n";
    std::cout << fixed_table({"method", "wf_mse", "points"}, rows);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"microshear: digital wavefront sets, shearlets and tomography"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);
    Globals g;
    app.add_option("--out", g.out, "output directory; relative paths resolve against it")->capture_default_str();

    // phantom
    PhantomOpts po;
    auto* ph = app.add_subcommand("phantom", "random ellipse head phantom: PGM, raw, WF CSV, spec JSON");
    ph->add_option("--seed", po.seed)->capture_default_str();
    ph->add_option("--size", po.size)->capture_default_str();
    ph->add_option("--ellipses", po.ellipses, "inner ellipses")->capture_default_str();
    ph->add_option("--bins", po.bins, "orientation bins of the wavefront set")->capture_default_str();
    ph->add_option("--edge-sigma", po.edge_sigma, "edge ramp width in pixels")->capture_default_str();
    ph->add_option("--count", po.count, "phantoms with consecutive seeds (dataset mode)")->capture_default_str();
    ph->add_option("--prefix", po.prefix)->capture_default_str();

    // shearlet
    ShearletOpts so;
    auto* sh = app.add_subcommand("shearlet", "digital shearlet transform");
    sh->require_subcommand(1);
    auto* sht = sh->add_subcommand("transform", "write the coefficient volume (SHRV)");
    auto* shr = sh->add_subcommand("roundtrip", "report the frame reconstruction error");
    for (auto* c : {sht, shr}) {
        c->add_option("--input", so.input, "raw image; default is a phantom");
        c->add_option("--seed", so.seed, "phantom seed when no input is given")->capture_default_str();
        c->add_option("--size", so.size, "phantom size when no input is given")->capture_default_str();
        c->add_option("--scales", so.scales)->capture_default_str();
    }
    sht->add_option("--output", so.output)->capture_default_str();

    // extract
    ExtractOpts eo;
    auto* ex = app.add_subcommand("extract", "wavefront-set extraction");
    ex->require_subcommand(1);
    auto* exd = ex->add_subcommand("decay", "model-based extractor (coefficient decay)");
    auto* exl = ex->add_subcommand("learned", "N+1 binary classifiers");
    for (auto* c : {exd, exl}) {
        c->add_option("--input", eo.input, "raw image")->required();
        c->add_option("--scales", eo.scales)->capture_default_str();
        c->add_option("--output", eo.output)->capture_default_str();
        c->add_option("--png", eo.png, "orientation map PNG");
    }
    exd->add_option("--bins", eo.bins)->capture_default_str();
    add_decay_flags(exd, eo.decay);
    auto* exl_bins = exl->add_option("--bins", eo.bins, "orientation bins, default one per model file");
    exl->add_option("--models", eo.models, "directory of model_<target>.json")->capture_default_str();
    exl->add_option("--tau", eo.tau, "probability threshold")->capture_default_str();
    exl->add_option("--thin", eo.thin, "non-maximum suppression of the EDGE map")->capture_default_str();
    exl->add_option("--rule", eo.rule, "ARGMAX (most probable bin) or ALL_ABOVE (every bin >= tau)")
        ->capture_default_str();

    // train
    TrainOpts to;
    auto* tr = app.add_subcommand("train", "train the EDGE gate and per-bin classifiers");
    tr->add_option("--dataset", to.dataset, "directory with <name>.raw and <name>_wf.csv")->capture_default_str();
    tr->add_option("--num-images", to.num_images, "use the first n images, 0 = all")->capture_default_str();
    tr->add_option("--bins", to.bins, "target orientation bins")->capture_default_str();
    tr->add_option("--truth-bins", to.truth_bins, "orientation bins of the ground-truth CSVs")->capture_default_str();
    tr->add_option("--scales", to.scales)->capture_default_str();
    tr->add_option("--kind", to.kind, "LINEAR or MLP1")->capture_default_str();
    tr->add_option("--hidden", to.setup.hidden)->capture_default_str();
    tr->add_option("--patch", to.setup.patch)->capture_default_str();
    tr->add_option("--per-image", to.setup.per_image, "patches per image and target")->capture_default_str();
    tr->add_option("--lr", to.setup.train.learning_rate)->capture_default_str();
    tr->add_option("--batch", to.setup.train.batch_size)->capture_default_str();
    tr->add_option("--epochs", to.setup.train.epochs)->capture_default_str();
    tr->add_option("--l2", to.setup.train.l2_penalty)->capture_default_str();
    tr->add_option("--seed", to.seed)->capture_default_str();
    tr->add_option("--models", to.models, "output directory for model files")->capture_default_str();

    // evaluate
    EvalOpts vo;
    auto* ev = app.add_subcommand("evaluate", "per-bin F-scores and MF-score of a WF CSV");
    ev->add_option("--pred", vo.pred)->required();
    ev->add_option("--truth", vo.truth)->required();
    ev->add_option("--size", vo.size)->capture_default_str();
    ev->add_option("--bins", vo.bins)->capture_default_str();
    ev->add_option("--tol-px", vo.tol_px)->capture_default_str();
    ev->add_option("--tol-bin", vo.tol_bin)->capture_default_str();
    ev->add_option("--output", vo.output)->capture_default_str();

    // tomo
    TomoOpts oo;
    auto* tm = app.add_subcommand("tomo", "Radon transform, reconstruction and canonical relation");
    tm->require_subcommand(1);
    auto* tf = tm->add_subcommand("forward", "sinogram of a raw image");
    tf->add_option("--input", oo.input)->required();
    tf->add_option("--angles", oo.angles)->capture_default_str();
    tf->add_option("--offsets", oo.offsets, "0 = grid size")->capture_default_str();
    tf->add_option("--step", oo.step, "keep every step-th angle")->capture_default_str();
    auto* tb = tm->add_subcommand("fbp", "filtered backprojection");
    tb->add_option("--filter", oo.filter, "RAM_LAK or HANN")->capture_default_str();
    auto* tk = tm->add_subcommand("tikhonov", "Landweber iteration for Tikhonov regularization");
    tk->add_option("--lambda", oo.lambda)->capture_default_str();
    tk->add_option("--iters", oo.iters)->capture_default_str();
    for (auto* c : {tb, tk}) c->add_option("--sino", oo.sino)->capture_default_str();
    for (auto* c : {tf, tb, tk}) c->add_option("--output", oo.output);
    auto* tcf = tm->add_subcommand("canonical-fwd", "image WF CSV to sinogram WF CSV");
    tcf->add_option("--wf", oo.wf)->capture_default_str();
    auto* tci = tm->add_subcommand("canonical-inv", "sinogram WF CSV to image WF CSV");
    tci->add_option("--sino-wf", oo.sino_wf)->capture_default_str();
    for (auto* c : {tcf, tci}) {
        c->add_option("--size", oo.size)->capture_default_str();
        c->add_option("--bins", oo.bins, "image orientation bins")->capture_default_str();
        c->add_option("--dir-bins", oo.dir_bins, "sinogram covector bins")->capture_default_str();
        c->add_option("--angles", oo.angles)->capture_default_str();
        c->add_option("--offsets", oo.offsets, "0 = grid size")->capture_default_str();
        c->add_option("--output", oo.output);
    }
    auto* tl = tm->add_subcommand("lowdose-experiment", "extract-then-map against FBP and Tikhonov, subsampled angles");
    auto& ld = oo.lowdose;
    tl->add_option("--seed", oo.seed)->capture_default_str();
    tl->add_option("--size", ld.grid_size)->capture_default_str();
    tl->add_option("--angles", ld.num_angles)->capture_default_str();
    tl->add_option("--offsets", ld.num_offsets)->capture_default_str();
    tl->add_option("--step", ld.step)->capture_default_str();
    tl->add_option("--scales", ld.num_scales)->capture_default_str();
    tl->add_option("--bins", ld.image_bins)->capture_default_str();
    tl->add_option("--dir-bins", ld.dir_bins)->capture_default_str();
    tl->add_option("--lambda", ld.lambda)->capture_default_str();
    tl->add_option("--iters", ld.iters)->capture_default_str();
    tl->add_option("--angle-weight", ld.angle_weight)->capture_default_str();
    tl->add_option("--angle-sigma", ld.sino_angle_sigma, "sinogram smoothing along the angle axis, in rows")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*ph) cmd_phantom(g, po);
        else if (*sht) cmd_shearlet_transform(g, so);
        else if (*shr) cmd_shearlet_roundtrip(g, so);
        else if (*exd) cmd_extract_decay(g, eo);
        else if (*exl) {
            if (exl_bins->count() == 0) eo.bins = 0;
            cmd_extract_learned(g, eo);
        }
        else if (*tr) cmd_train(g, to);
        else if (*ev) cmd_evaluate(g, vo);
        else if (*tf) cmd_tomo_forward(g, oo);
        else if (*tb) cmd_tomo_fbp(g, oo);
        else if (*tk) cmd_tomo_tikhonov(g, oo);
        else if (*tcf) cmd_tomo_canonical_fwd(g, oo);
        else if (*tci) cmd_tomo_canonical_inv(g, oo);
        else if (*tl) cmd_tomo_lowdose(g, oo);
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
