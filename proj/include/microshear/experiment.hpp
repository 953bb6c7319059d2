#pragma once

#include <limits>
#include <map>
#include <string>
#include <vector>

#include "canonical.hpp"
#include "classifier.hpp"
#include "extract_decay.hpp"
#include "metrics.hpp"
#include "phantom.hpp"
#include "radon.hpp"
#include "shearlet.hpp"

namespace microshear {

// Low-dose comparison: extract-then-map against invert-then-extract.
struct LowdoseConfig {
    int grid_size = 128;
    int num_angles = 180;
    int num_offsets = 257;
    int step = 6;
    int num_scales = 4;
    int image_bins = 180;
    int dir_bins = 1440;
    double lambda = 0.01;
    int iters = 100;
    double angle_weight = 0.1;
    PhantomConfig phantom;
    DecayParams image_decay;
    DecayParams sino_decay = sinogram_decay_params();
    double sino_angle_sigma = 2.0;

    void validate() const {
        phantom.validate();
        if (phantom.grid_size != grid_size) throw ConfigError("lowdose: phantom grid differs from grid_size");
        if (step < 1) throw ConfigError("lowdose: step must be >= 1");
        if (!(lambda > 0)) throw ConfigError("lowdose: lambda must be > 0");
        if (iters < 1) throw ConfigError("lowdose: iters must be >= 1");
        if (!(sino_angle_sigma >= 0)) throw ConfigError("lowdose: sino_angle_sigma must be >= 0");
        if (dir_bins < 2 || image_bins < 2) throw ConfigError("lowdose: bin counts must be >= 2");
        SinoGeometry{num_angles, num_offsets, grid_size}.validate();
    }
    SinoGeometry geometry() const { return {num_angles, num_offsets, grid_size}; }
};

struct LowdoseRow {
    std::string method;
    double wf_mse = 0;
    std::size_t points = 0;
};

struct LowdoseResult {
    Phantom phantom;
    Sinogram sinogram; // subsampled
    SinoWavefrontSet sino_wf;
    Image fbp_image, tikhonov_image;
    WavefrontSet canonical, fbp, tikhonov;
    std::vector<LowdoseRow> rows; // canonical, FBP, Tikhonov
};

// wf_mse with an empty prediction scored as infinitely bad instead of failing.
inline double wf_mse_or_inf(const WavefrontSet& pred, const WavefrontSet& truth, double w) {
    if (pred.empty()) return std::numeric_limits<double>::infinity();
    return wf_mse(pred, truth, w);
}

inline LowdoseResult run_lowdose(std::uint64_t seed, const LowdoseConfig& cfg) {
    cfg.validate();
    LowdoseResult res;
    res.phantom = generate_phantom(seed, cfg.phantom);
    const auto& truth = res.phantom.wavefront;
    if (truth.empty()) throw NumericalError("lowdose: phantom has an empty wavefront set");
    res.sinogram = subsample_angles(radon(res.phantom.image, cfg.geometry()), cfg.step);

    res.sino_wf = extract_sinogram_wavefront(res.sinogram, cfg.sino_decay, cfg.dir_bins, cfg.num_scales,
                                             180, cfg.sino_angle_sigma);
    res.canonical = sino_wf_to_image_wf(res.sino_wf, cfg.image_bins);

    const ShearletSystem sys(cfg.grid_size, cfg.num_scales);
    res.fbp_image = fbp(res.sinogram);
    res.fbp = extract_wavefront_decay(res.fbp_image, sys, cfg.image_decay, cfg.image_bins);
    res.tikhonov_image = tikhonov(res.sinogram, cfg.lambda, cfg.iters);
    res.tikhonov = extract_wavefront_decay(res.tikhonov_image, sys, cfg.image_decay, cfg.image_bins);

    res.rows = {{"canonical", wf_mse_or_inf(res.canonical, truth, cfg.angle_weight), res.canonical.size()},
                {"FBP", wf_mse_or_inf(res.fbp, truth, cfg.angle_weight), res.fbp.size()},
                {"Tikhonov", wf_mse_or_inf(res.tikhonov, truth, cfg.angle_weight), res.tikhonov.size()}};
    return res;
}

// Learned extractor at desk scale: EDGE gate plus one model per bin.
// Defaults are the held-out comparison setup against the decay extractor.
struct LearnedSetup {
    int bins = 8;
    int patch = 7;
    int per_image = 10;
    ModelKind kind = ModelKind::MLP1;
    int hidden = 16;
    double tau = 0.4;
    bool thin = true;
    BinRule rule = BinRule::ARGMAX;
    TrainConfig train = [] {
        TrainConfig t;
        t.learning_rate = 0.01;
        t.l2_penalty = 1e-3;
        return t;
    }();
};

inline std::vector<int> learned_targets(int bins) {
    std::vector<int> t{EDGE};
    for (int b = 0; b < bins; ++b) t.push_back(b);
    return t;
}

inline std::map<int, ClassifierModel> train_models(const std::vector<Image>& images, const std::vector<WavefrontSet>& truths,
                                                   const ShearletSystem& sys, const LearnedSetup& setup,
                                                   std::uint64_t seed) {
    for (const auto& t : truths)
        if (t.bins != setup.bins) throw ConfigError("train_models: truth bins differ from the setup");
    const auto targets = learned_targets(setup.bins);
    auto data = build_datasets(images, truths, sys, targets, setup.per_image, seed, setup.patch);
    std::vector<ClassifierModel> ms(targets.size());
    // one model per task; each training run is sequential, so the result
    // does not depend on the thread count
    parallel_for(int(targets.size()), [&](int i) {
        TrainConfig tc = setup.train;
        tc.seed = setup.train.seed + std::uint64_t(i);
        ms[i] = train_binary(data.at(targets[i]), tc, setup.kind, setup.hidden, setup.patch);
    });
    std::map<int, ClassifierModel> out;
    for (std::size_t i = 0; i < targets.size(); ++i) out[targets[i]] = std::move(ms[i]);
    return out;
}

} // namespace microshear
