#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <tuple>
#include <vector>

#include "core.hpp"
#include "wavefront.hpp"

namespace microshear {

struct BinScore {
    int bin = 0;
    double precision = 0, recall = 0, f_score = 0;
    int tp = 0, fp = 0, fn = 0;
};

struct EvalReport {
    std::vector<BinScore> per_bin;
    double mf_score = 0;
    double match_tolerance = 1;
    int angular_tolerance = 1;
};

namespace detail {

inline void check_compatible(const WavefrontSet& a, const WavefrontSet& b) {
    if (a.rows != b.rows || a.cols != b.cols || a.bins != b.bins)
        throw DimensionError("metrics: wavefront sets use different grids or bin counts");
}

// Maximum bipartite matching on a sparse edge list. Edges are first taken
// greedily nearest-first, then augmenting paths close any remaining gap.
inline int max_matching(int np, int nt, std::vector<std::tuple<double, int, int>> edges) {
    std::sort(edges.begin(), edges.end());
    std::vector<int> match_p(np, -1), match_t(nt, -1);
    std::vector<std::vector<int>> adj(np);
    for (auto& [d, i, j] : edges) {
        adj[i].push_back(j);
        if (match_p[i] < 0 && match_t[j] < 0) {
            match_p[i] = j;
            match_t[j] = i;
        }
    }
    std::vector<int> seen(nt, -1);
    // iterative DFS to keep the stack small on large edge sets
    auto augment = [&](int root, int stamp) {
        std::vector<std::pair<int, std::size_t>> st{{root, 0}};
        std::vector<int> via; // truth node used to reach each stack level
        while (!st.empty()) {
            auto& [u, ei] = st.back();
            if (ei == adj[u].size()) {
                st.pop_back();
                if (!via.empty()) via.pop_back();
                continue;
            }
            const int t = adj[u][ei++];
            if (seen[t] == stamp) continue;
            seen[t] = stamp;
            if (match_t[t] < 0) {
                // flip the path
                via.push_back(t);
                for (std::size_t lvl = 0; lvl < st.size(); ++lvl) {
                    const int p = st[lvl].first, tt = via[lvl];
                    match_p[p] = tt;
                    match_t[tt] = p;
                }
                return true;
            }
            via.push_back(t);
            st.push_back({match_t[t], 0});
        }
        return false;
    };
    int stamp = 0;
    for (int i = 0; i < np; ++i)
        if (match_p[i] < 0 && !adj[i].empty()) augment(i, stamp++);
    int tp = 0;
    for (int v : match_p) tp += v >= 0;
    return tp;
}

inline BinScore score_window(const std::vector<WfPoint>& P, const std::vector<WfPoint>& T, double tol_px) {
    BinScore s;
    std::map<std::pair<int, int>, std::vector<int>> at;
    for (int j = 0; j < int(T.size()); ++j) at[{T[j].row, T[j].col}].push_back(j);
    std::vector<std::tuple<double, int, int>> edges;
    const int rad = int(std::floor(tol_px));
    for (int i = 0; i < int(P.size()); ++i)
        for (int dr = -rad; dr <= rad; ++dr)
            for (int dc = -rad; dc <= rad; ++dc) {
                const double d = std::sqrt(double(dr * dr + dc * dc));
                if (d > tol_px) continue;
                auto it = at.find({P[i].row + dr, P[i].col + dc});
                if (it == at.end()) continue;
                for (int j : it->second) edges.emplace_back(d, i, j);
            }
    s.tp = max_matching(int(P.size()), int(T.size()), std::move(edges));
    s.fp = int(P.size()) - s.tp;
    s.fn = int(T.size()) - s.tp;
    s.precision = P.empty() ? (T.empty() ? 1.0 : 0.0) : double(s.tp) / P.size();
    s.recall = T.empty() ? 1.0 : double(s.tp) / T.size();
    s.f_score = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    return s;
}

inline std::vector<WfPoint> bin_window(const WavefrontSet& w, int bin, int tol_bin) {
    std::vector<WfPoint> out;
    for (const auto& p : w.points)
        if (circular_bin_distance(p.bin, bin, w.bins) <= tol_bin) out.push_back(p);
    return out;
}

} // namespace detail

// Precision, recall and F for one bin; both sets are restricted to the
// circular window of tol_bin around it.
inline BinScore f_score_bin(const WavefrontSet& pred, const WavefrontSet& truth, int bin, double tol_px, int tol_bin) {
    detail::check_compatible(pred, truth);
    auto s = detail::score_window(detail::bin_window(pred, bin, tol_bin), detail::bin_window(truth, bin, tol_bin), tol_px);
    s.bin = bin;
    return s;
}

inline EvalReport evaluate(const WavefrontSet& pred, const WavefrontSet& truth, double tol_px = 1, int tol_bin = 1) {
    detail::check_compatible(pred, truth);
    if (truth.empty()) throw NumericalError("mf_score: ground truth is empty, metric undefined");
    std::vector<int> bins;
    for (const auto& p : truth.points) bins.push_back(p.bin);
    std::sort(bins.begin(), bins.end());
    bins.erase(std::unique(bins.begin(), bins.end()), bins.end());
    EvalReport rep;
    rep.match_tolerance = tol_px;
    rep.angular_tolerance = tol_bin;
    rep.per_bin.resize(bins.size());
    parallel_for(int(bins.size()), [&](int i) { rep.per_bin[i] = f_score_bin(pred, truth, bins[i], tol_px, tol_bin); });
    double s = 0;
    for (const auto& b : rep.per_bin) s += b.f_score;
    rep.mf_score = s / bins.size();
    return rep;
}

inline double mf_score(const WavefrontSet& pred, const WavefrontSet& truth, double tol_px = 1, int tol_bin = 1) {
    return evaluate(pred, truth, tol_px, tol_bin).mf_score;
}

// Symmetric Chamfer mean of squared (row, col, weighted bin) distances.
inline double wf_mse(const WavefrontSet& pred, const WavefrontSet& truth, double angle_weight = 0.1) {
    detail::check_compatible(pred, truth);
    if (pred.empty() || truth.empty()) throw NumericalError("wf_mse: both sets must be nonempty");
    auto one_way = [&](const WavefrontSet& from, const WavefrontSet& to) {
        std::vector<double> best(from.size());
        parallel_for(int(from.size()), [&](int i) {
            const auto& a = from.points[i];
            double m = std::numeric_limits<double>::infinity();
            for (const auto& b : to.points) {
                const double dr = a.row - b.row, dc = a.col - b.col;
                const double spatial = dr * dr + dc * dc;
                if (spatial >= m) continue;
                const double db = circular_bin_distance(a.bin, b.bin, from.bins);
                m = std::min(m, spatial + angle_weight * db * db);
            }
            best[i] = m;
        });
        return std::accumulate(best.begin(), best.end(), 0.0) / best.size();
    };
    return 0.5 * (one_way(truth, pred) + one_way(pred, truth));
}

} // namespace microshear
