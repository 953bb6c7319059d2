#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace microshear {

using cplx = std::complex<double>;
constexpr double pi = std::numbers::pi;

// Error types. The CLI maps NumericalError to exit code 1 and the rest to 2.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : Error {
    using Error::Error;
};
struct DimensionError : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};
struct NumericalError : Error {
    using Error::Error;
};

// Row-major rows x cols array.
template <class T>
struct Grid {
    int rows = 0;
    int cols = 0;
    std::vector<T> data;

    Grid() = default;
    Grid(int r, int c, T fill = T{}) : rows(r), cols(c), data(std::size_t(r) * c, fill) {}

    T& operator()(int r, int c) { return data[std::size_t(r) * cols + c]; }
    const T& operator()(int r, int c) const { return data[std::size_t(r) * cols + c]; }
    std::size_t size() const { return data.size(); }
    bool same_shape(const Grid& o) const { return rows == o.rows && cols == o.cols; }
};

// Square real image on [-1,1]^2. Row 0 is the top, y grows upward.
using Image = Grid<double>;
using CGrid = Grid<cplx>;

inline Image make_image(int M) { return Image(M, M, 0.0); }

// Physical coordinates of a pixel centre.
inline double pixel_x(int c, int M) { return -1.0 + (2.0 * c + 1.0) / M; }
inline double pixel_y(int r, int M) { return 1.0 - (2.0 * r + 1.0) / M; }
// Inverse map, continuous pixel indices.
inline double col_of_x(double x, int M) { return (x + 1.0) * M / 2.0 - 0.5; }
inline double row_of_y(double y, int M) { return (1.0 - y) * M / 2.0 - 0.5; }

inline double l2_norm(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

inline double rel_l2_error(const Image& a, const Image& ref) {
    if (!a.same_shape(ref)) throw DimensionError("rel_l2_error: shape mismatch");
    double num = 0, den = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a.data[i] - ref.data[i];
        num += d * d;
        den += ref.data[i] * ref.data[i];
    }
    if (den == 0) return std::sqrt(num);
    return std::sqrt(num / den);
}

// Worker count: MICROSHEAR_THREADS if set, else hardware concurrency.
inline int thread_count() {
    if (const char* env = std::getenv("MICROSHEAR_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : int(hw);
}

// Runs fn(i) for i in [0, n). Each index is processed exactly once and
// owns its output, so results never depend on the worker count.
template <class F>
void parallel_for(int n, F&& fn) {
    int workers = std::min(thread_count(), n);
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr err;
    std::atomic<bool> failed{false};
    for (int t = 0; t < workers; ++t) {
        pool.emplace_back([&] {
            for (int i = next++; i < n && !failed; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    if (!failed.exchange(true)) err = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

// splitmix64, used to derive independent streams from one seed
inline std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Small deterministic generator. Distribution code is local so streams are
// identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& w : s_) w = splitmix64(x);
    }
    std::uint64_t next() {
        // xoshiro256**
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }
    double uniform() { return double(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    // integer in [0, n)
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) return 0;
        std::uint64_t lim = (~std::uint64_t(0)) - (~std::uint64_t(0)) % n;
        std::uint64_t v;
        do v = next();
        while (v >= lim);
        return v % n;
    }
    double normal() {
        double u1 = uniform(), u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * pi * u2);
    }
    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t s_[4];
};

} // namespace microshear
