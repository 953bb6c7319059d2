#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "core.hpp"
#include "fft.hpp"
#include "wavefront.hpp"

namespace microshear {

struct SliceKey {
    int j = 0;    // scale, 1..num_scales
    int k = 0;    // shear
    int iota = 0; // cone: +1 horizontal, -1 vertical, 0 low-pass
    bool operator==(const SliceKey&) const = default;
};

inline std::string to_string(const SliceKey& s) {
    return "(" + std::to_string(s.j) + "," + std::to_string(s.k) + "," + std::to_string(s.iota) + ")";
}

// 2^ceil(j/2); the scale has 2*k_j + 1 shears per cone.
inline int shear_half_count(int j) { return 1 << ((j + 1) / 2); }

// Normal angle of a cone slice in degrees, mod 180.
inline double slice_angle(const SliceKey& s) {
    if (s.iota == 0) throw ConfigError("slice_angle: low-pass slice has no orientation");
    const double a = std::atan(double(s.k) / shear_half_count(s.j)) * 180.0 / pi;
    return s.iota == 1 ? wrap180(a) : wrap180(90.0 - a);
}

inline int orientation_of_slice(const SliceKey& s, int N) { return quantize_angle(slice_angle(s), N); }

// Position of a slice on the circle of the 4*k_j shears of its scale.
// Cone +1 runs from 135 deg (w=0) through 0 to 45 (w=2k); cone -1 continues
// through 90 back towards 135.
inline int circular_shear_coord(const SliceKey& s) {
    const int kj = shear_half_count(s.j);
    return s.iota == 1 ? s.k + kj : 3 * kj - s.k;
}

inline double angle_of_circular_coord(double w, int kj) {
    const double P = 4.0 * kj;
    w = std::fmod(w, P);
    if (w < 0) w += P;
    if (w <= 2.0 * kj) return wrap180(std::atan((w - kj) / kj) * 180.0 / pi);
    return wrap180(90.0 - std::atan((3.0 * kj - w) / kj) * 180.0 / pi);
}

namespace detail {

inline double meyer_v(double x) {
    if (x <= 0) return 0;
    if (x >= 1) return 1;
    const double x4 = x * x * x * x;
    return x4 * (35 - 84 * x + 70 * x * x - 20 * x * x * x);
}

// Low-pass window: 1 up to 1/2, 0 from 1 on.
inline double meyer_low(double r) {
    if (r <= 0.5) return 1;
    if (r >= 1) return 0;
    return std::cos(pi / 2 * meyer_v(2 * r - 1));
}

// Shear bump, supported on |u| < 1; integer translates square-sum to 1.
inline double meyer_bump(double u) {
    const double a = std::abs(u);
    if (a >= 1) return 0;
    return std::cos(pi / 2 * meyer_v(a));
}

inline int dft_freq(int idx, int M) { return idx < M / 2 ? idx : idx - M; }

} // namespace detail

// Cone-adapted bandlimited shearlet bank on an M x M periodic grid.
// Filters are real-valued frequency responses in unshifted DFT order.
class ShearletSystem {
public:
    ShearletSystem(int M, int num_scales, double asymmetry = 0.05) : M_(M), S_(num_scales), eps_(asymmetry) {
        if (M < 32) throw ConfigError("build_system: M must be >= 32");
        if (M % 2 != 0) throw ConfigError("build_system: M must be even");
        if (num_scales < 1 || num_scales > 6) throw ConfigError("build_system: num_scales must be in 1..6");
        if (M < (1 << (num_scales + 2)))
            throw ConfigError("build_system: grid too small for " + std::to_string(num_scales) + " scales (need M >= " +
                              std::to_string(1 << (num_scales + 2)) + ")");
        if (!(asymmetry > 0 && asymmetry <= 1)) throw ConfigError("build_system: asymmetry must be in (0,1]");
        enumerate();
        build();
    }

    int grid_size() const { return M_; }
    int num_scales() const { return S_; }
    double asymmetry() const { return eps_; }
    int num_slices() const { return int(keys_.size()); }
    const std::vector<SliceKey>& keys() const { return keys_; }
    const std::vector<double>& filter(int i) const { return filters_.at(i); }
    const std::vector<double>& frame_weights() const { return weights_; }

    static int expected_slices(int num_scales) {
        int L = 1;
        for (int j = 1; j <= num_scales; ++j) L += 2 * (2 * shear_half_count(j) + 1 - 1);
        return L;
    }

    int slice_index(const SliceKey& key) const {
        if (key.iota == 0) return 0;
        if (key.j < 1 || key.j > S_ || (key.iota != 1 && key.iota != -1))
            throw ConfigError("slice_index: key out of range " + to_string(key));
        const int kj = shear_half_count(key.j);
        const int lim = key.iota == 1 ? kj : kj - 1;
        if (std::abs(key.k) > lim) throw ConfigError("slice_index: shear out of range " + to_string(key));
        int idx = 1;
        for (int j = 1; j < key.j; ++j) idx += 4 * shear_half_count(j);
        if (key.iota == 1) return idx + key.k + kj;
        return idx + (2 * kj + 1) + key.k + kj - 1;
    }

    SliceKey key_of(int index) const {
        if (index < 0 || index >= num_slices()) throw ConfigError("key_of: index out of range");
        return keys_[index];
    }

    std::vector<int> slices_of_scale(int j) const {
        std::vector<int> out;
        for (int i = 0; i < num_slices(); ++i)
            if (keys_[i].iota != 0 && keys_[i].j == j) out.push_back(i);
        return out;
    }

private:
    void enumerate() {
        keys_.push_back({0, 0, 0});
        for (int j = 1; j <= S_; ++j) {
            const int kj = shear_half_count(j);
            for (int k = -kj; k <= kj; ++k) keys_.push_back({j, k, 1});
            for (int k = -kj + 1; k <= kj - 1; ++k) keys_.push_back({j, k, -1});
        }
    }

    void build() {
        const int M = M_;
        const std::size_t n = std::size_t(M) * M;
        filters_.assign(keys_.size(), std::vector<double>(n, 0.0));
        weights_.assign(n, 0.0);

        auto lowpass = [&](int i, double r) { return detail::meyer_low(std::ldexp(r, i)); };

        parallel_for(int(keys_.size()), [&](int s) {
            const SliceKey key = keys_[s];
            auto& f = filters_[s];
            const int kj = key.iota == 0 ? 1 : shear_half_count(key.j);
            double dx = 0, dy = 0;
            if (key.iota != 0) {
                const double a = slice_angle(key) * pi / 180.0;
                dx = std::cos(a);
                dy = std::sin(a);
            }
            for (int kr = 0; kr < M; ++kr) {
                const double xi2 = -detail::dft_freq(kr, M);
                for (int kc = 0; kc < M; ++kc) {
                    const double xi1 = detail::dft_freq(kc, M);
                    const double r = std::max(std::abs(xi1), std::abs(xi2)) / (M / 2.0);
                    double val;
                    if (key.iota == 0) {
                        val = lowpass(S_, r);
                    } else {
                        const double hi = key.j == S_ ? 1.0 : lowpass(S_ - key.j, r);
                        const double lo = lowpass(S_ - key.j + 1, r);
                        const double w2 = hi * hi - lo * lo;
                        if (w2 <= 0) {
                            f[std::size_t(kr) * M + kc] = 0;
                            continue;
                        }
                        const bool horiz = std::abs(xi2) <= std::abs(xi1);
                        double bump = 0;
                        if (key.iota == 1) {
                            if (horiz) bump = detail::meyer_bump(kj * xi2 / xi1 - key.k);
                            else if (std::abs(key.k) == kj) bump = detail::meyer_bump(kj * xi1 / xi2 - key.k);
                        } else if (!horiz) {
                            bump = detail::meyer_bump(kj * xi1 / xi2 - key.k);
                        }
                        const double side = (xi1 * dx + xi2 * dy) > 0 ? 1.0 : eps_;
                        val = std::sqrt(w2) * bump * side;
                    }
                    f[std::size_t(kr) * M + kc] = val;
                }
            }
        });
        for (const auto& f : filters_)
            for (std::size_t i = 0; i < n; ++i) weights_[i] += f[i] * f[i];
        const double wmin = *std::min_element(weights_.begin(), weights_.end());
        if (!(wmin > 1e-12)) throw NumericalError("build_system: frame weights vanish somewhere on the grid");
    }

    int M_, S_;
    double eps_;
    std::vector<SliceKey> keys_;
    std::vector<std::vector<double>> filters_;
    std::vector<double> weights_;
};

inline ShearletSystem build_system(int M, int num_scales) { return ShearletSystem(M, num_scales); }

// The shearlet volume: one complex M x M slice per key.
struct CoeffVolume {
    int grid_size = 0;
    std::vector<SliceKey> keys;
    std::vector<CGrid> slices;

    int num_slices() const { return int(slices.size()); }

    Grid<double> magnitude(int i) const {
        const auto& s = slices.at(i);
        Grid<double> out(s.rows, s.cols);
        for (std::size_t p = 0; p < s.size(); ++p) out.data[p] = std::abs(s.data[p]);
        return out;
    }
};

// slice = IDFT(DFT(img) * conj(filter)); filters are real so conj is a no-op
// on the response but kept for the correlation reading.
inline CoeffVolume dsh_transform(const Image& img, const ShearletSystem& sys) {
    const int M = sys.grid_size();
    if (img.rows != M || img.cols != M)
        throw DimensionError("dsh_transform: image is " + std::to_string(img.rows) + "x" + std::to_string(img.cols) +
                             ", system is " + std::to_string(M));
    CGrid spec = to_complex(img);
    Fft::forward2d(spec);
    CoeffVolume vol;
    vol.grid_size = M;
    vol.keys = sys.keys();
    vol.slices.resize(sys.num_slices());
    parallel_for(sys.num_slices(), [&](int s) {
        const auto& f = sys.filter(s);
        CGrid g(M, M);
        for (std::size_t i = 0; i < g.size(); ++i) g.data[i] = spec.data[i] * f[i];
        Fft::inverse2d(g);
        vol.slices[s] = std::move(g);
    });
    return vol;
}

inline Image dsh_inverse(const CoeffVolume& vol, const ShearletSystem& sys) {
    const int M = sys.grid_size();
    if (vol.grid_size != M || vol.num_slices() != sys.num_slices() || vol.keys != sys.keys())
        throw DimensionError("dsh_inverse: volume does not match the system");
    const auto& w = sys.frame_weights();
    for (double x : w)
        if (!(x >= 1e-12)) throw NumericalError("dsh_inverse: degenerate frame weights");
    const std::size_t n = std::size_t(M) * M;
    // Slices are transformed in chunks and accumulated in index order, so
    // the sum does not depend on the worker count.
    CGrid acc(M, M);
    const int chunk = std::max(1, thread_count());
    for (int s0 = 0; s0 < vol.num_slices(); s0 += chunk) {
        const int cnt = std::min(chunk, vol.num_slices() - s0);
        std::vector<CGrid> spec(cnt);
        parallel_for(cnt, [&](int t) {
            spec[t] = vol.slices[s0 + t];
            Fft::forward2d(spec[t]);
        });
        for (int t = 0; t < cnt; ++t) {
            const auto& f = sys.filter(s0 + t);
            for (std::size_t i = 0; i < n; ++i) acc.data[i] += spec[t].data[i] * f[i];
        }
    }
    for (std::size_t i = 0; i < n; ++i) acc.data[i] /= w[i];
    Fft::inverse2d(acc);
    return real_part(acc);
}

} // namespace microshear
