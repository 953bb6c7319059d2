#pragma once

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>
#include <utility>

#include "core.hpp"

namespace microshear {

// Thin FFTW wrapper. Plans are created once per shape under a lock and then
// executed through the new-array interface, which is thread safe. Forward is
// unnormalized, inverse carries 1/(rows*cols).
class Fft {
public:
    static void forward2d(CGrid& g) { run2d(g, FFTW_FORWARD); }

    static void inverse2d(CGrid& g) {
        run2d(g, FFTW_BACKWARD);
        const double s = 1.0 / double(g.size());
        for (auto& v : g.data) v *= s;
    }

    // In-place 1D transforms of length n on a contiguous buffer.
    static void forward1d(cplx* data, int n) { run1d(data, n, FFTW_FORWARD); }
    static void inverse1d(cplx* data, int n) {
        run1d(data, n, FFTW_BACKWARD);
        const double s = 1.0 / n;
        for (int i = 0; i < n; ++i) data[i] *= s;
    }

private:
    struct Plans {
        std::mutex mu;
        std::map<std::tuple<int, int, int>, fftw_plan> cache;
        ~Plans() {
            for (auto& [k, p] : cache) fftw_destroy_plan(p);
        }
    };
    static Plans& plans() {
        static Plans p;
        return p;
    }

    static fftw_plan plan_for(int rows, int cols, int sign) {
        auto& P = plans();
        std::lock_guard lock(P.mu);
        auto key = std::make_tuple(rows, cols, sign);
        auto it = P.cache.find(key);
        if (it != P.cache.end()) return it->second;
        std::vector<cplx> tmp(std::size_t(rows) * std::max(cols, 1));
        auto* buf = reinterpret_cast<fftw_complex*>(tmp.data());
        fftw_plan p = cols > 0
                          ? fftw_plan_dft_2d(rows, cols, buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED)
                          : fftw_plan_dft_1d(rows, buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (!p) throw NumericalError("fftw plan creation failed");
        P.cache.emplace(key, p);
        return p;
    }

    static void run2d(CGrid& g, int sign) {
        fftw_plan p = plan_for(g.rows, g.cols, sign);
        auto* buf = reinterpret_cast<fftw_complex*>(g.data.data());
        fftw_execute_dft(p, buf, buf);
    }
    static void run1d(cplx* data, int n, int sign) {
        fftw_plan p = plan_for(n, 0, sign);
        auto* buf = reinterpret_cast<fftw_complex*>(data);
        fftw_execute_dft(p, buf, buf);
    }
};

inline CGrid to_complex(const Image& img) {
    CGrid g(img.rows, img.cols);
    for (std::size_t i = 0; i < img.size(); ++i) g.data[i] = img.data[i];
    return g;
}

inline Image real_part(const CGrid& g) {
    Image out(g.rows, g.cols);
    for (std::size_t i = 0; i < g.size(); ++i) out.data[i] = g.data[i].real();
    return out;
}

} // namespace microshear
