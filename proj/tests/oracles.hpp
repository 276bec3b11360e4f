// Independent brute-force reference implementations used only by tests.
// Everything here works on raw std::vector<double> with plain loops and is
// deliberately written without any dependency on the library internals it
// checks. Keep it that way.
#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<std::vector<double>>;  // [i][k]

// Fraction of [begin, end) coordinate ranges; {0, D} means "whole vector".
struct Range {
    std::size_t begin;
    std::size_t end;
};

inline double cosine(const Vec& a, const Vec& b, const Range& r) {
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t d = r.begin; d < r.end; ++d) {
        ab += a[d] * b[d];
        aa += a[d] * a[d];
        bb += b[d] * b[d];
    }
    if (aa == 0.0 || bb == 0.0) return 0.0;  // zero-update convention, off-diagonal
    double v = ab / (std::sqrt(aa) * std::sqrt(bb));
    if (v > 1.0) v = 1.0;
    if (v < -1.0) v = -1.0;
    return v;
}

inline double l2_similarity(const Vec& a, const Vec& b, const Range& r) {
    double dd = 0.0;
    for (std::size_t d = r.begin; d < r.end; ++d) {
        dd += (a[d] - b[d]) * (a[d] - b[d]);
    }
    return 1.0 / (1.0 + std::sqrt(dd));
}

inline double pearson(const Vec& a, const Vec& b, const Range& r) {
    const double n = static_cast<double>(r.end - r.begin);
    double ma = 0.0, mb = 0.0;
    for (std::size_t d = r.begin; d < r.end; ++d) {
        ma += a[d];
        mb += b[d];
    }
    ma /= n;
    mb /= n;
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t d = r.begin; d < r.end; ++d) {
        ab += (a[d] - ma) * (b[d] - mb);
        aa += (a[d] - ma) * (a[d] - ma);
        bb += (b[d] - mb) * (b[d] - mb);
    }
    if (aa == 0.0 || bb == 0.0) return 0.0;
    double v = ab / (std::sqrt(aa) * std::sqrt(bb));
    if (v > 1.0) v = 1.0;
    if (v < -1.0) v = -1.0;
    return v;
}

inline double similarity(const std::string& metric, const Vec& a, const Vec& b,
                         const Range& r) {
    if (metric == "cosine") return cosine(a, b, r);
    if (metric == "l2") return l2_similarity(a, b, r);
    return pearson(a, b, r);
}

// Task vectors: difference between each fine-tuned model and the aggregated
// model it started the round from.
inline std::vector<Vec> task_vectors(const std::vector<Vec>& bars,
                                     const std::vector<Vec>& locals) {
    std::vector<Vec> taus(bars.size());
    for (std::size_t i = 0; i < bars.size(); ++i) {
        taus[i].resize(bars[i].size());
        for (std::size_t d = 0; d < bars[i].size(); ++d) {
            taus[i][d] = locals[i][d] - bars[i][d];
        }
    }
    return taus;
}

// Client-specific weights on one range: pairwise similarities of the
// representative vectors, negatives clipped to zero, each row normalized to
// sum one. Self-similarity on the diagonal is exactly 1 for cosine/pearson.
inline Mat weight_matrix(const std::string& metric, const std::vector<Vec>& reps,
                         const Range& r) {
    const std::size_t K = reps.size();
    Mat p(K, Vec(K, 0.0));
    for (std::size_t i = 0; i < K; ++i) {
        Vec g(K);
        for (std::size_t k = 0; k < K; ++k) {
            g[k] = (i == k) ? 1.0 : similarity(metric, reps[i], reps[k], r);
            if (g[k] < 0.0) g[k] = 0.0;
        }
        double denom = 0.0;
        for (double x : g) denom += x;
        for (std::size_t k = 0; k < K; ++k) p[i][k] = g[k] / denom;
    }
    return p;
}

struct UpdateOut {
    std::vector<Vec> bars;
    std::vector<Mat> per_range_weights;
};

// Full reference update. weighting: "task_vector" | "parameter" | "uniform";
// substrate: "task_vector" | "parameter". `ranges` carries one whole-vector
// range for the global scheme or the layer ranges for the layer-wise scheme.
inline UpdateOut update(const std::string& weighting, const std::string& substrate,
                        const std::string& metric, const std::vector<Vec>& bars,
                        const std::vector<Vec>& locals, const Vec& data_sizes,
                        const std::vector<Range>& ranges) {
    const std::size_t K = bars.size();
    const std::vector<Vec> taus = task_vectors(bars, locals);

    UpdateOut out;
    out.bars = bars;  // coordinates outside every range stay untouched
    for (const Range& r : ranges) {
        Mat p;
        if (weighting == "uniform") {
            double total = 0.0;
            for (double s : data_sizes) total += s;
            Vec row(K);
            for (std::size_t k = 0; k < K; ++k) row[k] = data_sizes[k] / total;
            p.assign(K, row);
        } else {
            p = weight_matrix(metric, weighting == "parameter" ? locals : taus, r);
        }
        out.per_range_weights.push_back(p);

        for (std::size_t i = 0; i < K; ++i) {
            for (std::size_t d = r.begin; d < r.end; ++d) {
                double acc = 0.0;
                for (std::size_t k = 0; k < K; ++k) {
                    acc += p[i][k] * (substrate == "parameter" ? locals[k][d]
                                                               : taus[k][d]);
                }
                out.bars[i][d] = (substrate == "parameter") ? acc : bars[i][d] + acc;
            }
        }
    }
    return out;
}

// Central finite differences of a scalar function of a flat vector.
template <typename F>
Vec finite_difference_gradient(F&& f, const Vec& theta, double step = 1e-6) {
    Vec g(theta.size());
    Vec probe = theta;
    for (std::size_t d = 0; d < theta.size(); ++d) {
        probe[d] = theta[d] + step;
        const double hi = f(probe);
        probe[d] = theta[d] - step;
        const double lo = f(probe);
        probe[d] = theta[d];
        g[d] = (hi - lo) / (2.0 * step);
    }
    return g;
}

}  // namespace oracle
