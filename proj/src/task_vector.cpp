#include "fedbip/task_vector.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "fedbip/errors.hpp"

namespace fedbip {

std::string_view metric_name(Metric m) {
    switch (m) {
        case Metric::cosine: return "cosine";
        case Metric::l2: return "l2";
        case Metric::pearson: return "pearson";
    }
    return "cosine";
}

Metric metric_from_name(std::string_view name) {
    if (name == "cosine") return Metric::cosine;
    if (name == "l2") return Metric::l2;
    if (name == "pearson") return Metric::pearson;
    throw ConfigError("unknown similarity metric '" + std::string(name) +
                      "' (expected cosine, l2 or pearson)");
}

TaskVector compute_task_vector(const ParameterVector& fine_tuned,
                               const ParameterVector& base, int client_id,
                               int round) {
    return TaskVector{sub(fine_tuned, base), client_id, round};
}

TaskVector compute_task_vector_peft(const ParameterVector& fine_tuned,
                                    const ParameterVector& base,
                                    const TrainableMask& mask, int client_id,
                                    int round) {
    if (fine_tuned.dim() != base.dim() ||
        !(fine_tuned.partition() == base.partition())) {
        throw StructuralError("task vector: model shape mismatch");
    }
    if (mask.dim() != base.dim()) {
        throw StructuralError("task vector: mask dimension mismatch");
    }
    const auto flags = mask.dense();
    std::vector<double> delta(base.dim(), 0.0);
    for (std::size_t d = 0; d < base.dim(); ++d) {
        if (flags[d]) {
            delta[d] = fine_tuned[d] - base[d];
        } else if (fine_tuned[d] != base[d]) {
            throw StructuralError("task vector: frozen coordinate " +
                                  std::to_string(d) + " changed during fine-tuning");
        }
    }
    return TaskVector{ParameterVector(std::move(delta), base.partition()),
                      client_id, round};
}

namespace {

struct PairSums {
    double ab = 0.0;
    double aa = 0.0;
    double bb = 0.0;
};

PairSums raw_sums(std::span<const double> a, std::span<const double> b,
                  std::span<const std::size_t> coords) {
    PairSums s;
    for (std::size_t d : coords) {
        s.ab += a[d] * b[d];
        s.aa += a[d] * a[d];
        s.bb += b[d] * b[d];
    }
    return s;
}

PairSums centered_sums(std::span<const double> a, std::span<const double> b,
                       std::span<const std::size_t> coords) {
    const double n = static_cast<double>(coords.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t d : coords) {
        ma += a[d];
        mb += b[d];
    }
    ma /= n;
    mb /= n;
    PairSums s;
    for (std::size_t d : coords) {
        const double xa = a[d] - ma;
        const double xb = b[d] - mb;
        s.ab += xa * xb;
        s.aa += xa * xa;
        s.bb += xb * xb;
    }
    return s;
}

double clamp_unit(double v) {
    if (v > 1.0) return 1.0;
    if (v < -1.0) return -1.0;
    return v;
}

double l2_value(std::span<const double> a, std::span<const double> b,
                std::span<const std::size_t> coords) {
    double dd = 0.0;
    for (std::size_t d : coords) {
        const double diff = a[d] - b[d];
        dd += diff * diff;
    }
    return 1.0 / (1.0 + std::sqrt(dd));
}

std::vector<std::size_t> coord_list(std::size_t dim,
                                    const std::optional<TrainableMask>& mask) {
    if (mask) return mask->indices();
    std::vector<std::size_t> all(dim);
    for (std::size_t d = 0; d < dim; ++d) all[d] = d;
    return all;
}

void check_pair(const TaskVector& a, const TaskVector& b,
                const std::optional<TrainableMask>& mask) {
    if (a.delta.dim() != b.delta.dim()) {
        throw StructuralError("similarity: dimension mismatch");
    }
    if (mask && mask->dim() != a.delta.dim()) {
        throw StructuralError("similarity: mask dimension mismatch");
    }
}

bool same_origin(const TaskVector& a, const TaskVector& b) {
    return a.client_id == b.client_id && a.round == b.round;
}

}  // namespace

namespace detail {

// Off-diagonal pair similarity over an explicit coordinate subset: zero-norm
// (or degenerate pearson subset) gives 0, cosine/pearson are clamped to
// [-1, 1]. Callers own the exact-1 diagonal.
double pair_similarity(Metric m, std::span<const double> a,
                       std::span<const double> b,
                       std::span<const std::size_t> coords) {
    switch (m) {
        case Metric::l2:
            return l2_value(a, b, coords);
        case Metric::cosine: {
            const PairSums s = raw_sums(a, b, coords);
            if (s.aa == 0.0 || s.bb == 0.0) return 0.0;
            return clamp_unit(s.ab / (std::sqrt(s.aa) * std::sqrt(s.bb)));
        }
        case Metric::pearson: {
            if (coords.size() < 2) return 0.0;
            const PairSums s = centered_sums(a, b, coords);
            if (s.aa == 0.0 || s.bb == 0.0) return 0.0;
            return clamp_unit(s.ab / (std::sqrt(s.aa) * std::sqrt(s.bb)));
        }
    }
    return 0.0;
}

}  // namespace detail

double cosine_sim(const TaskVector& a, const TaskVector& b,
                  const std::optional<TrainableMask>& mask) {
    check_pair(a, b, mask);
    const auto coords = coord_list(a.delta.dim(), mask);
    const PairSums s = raw_sums(a.delta.values(), b.delta.values(), coords);
    if (s.aa == 0.0 && s.bb == 0.0) return same_origin(a, b) ? 1.0 : 0.0;
    if (s.aa == 0.0 || s.bb == 0.0) return 0.0;
    return clamp_unit(s.ab / (std::sqrt(s.aa) * std::sqrt(s.bb)));
}

double l2_sim(const TaskVector& a, const TaskVector& b,
              const std::optional<TrainableMask>& mask) {
    check_pair(a, b, mask);
    const auto coords = coord_list(a.delta.dim(), mask);
    return l2_value(a.delta.values(), b.delta.values(), coords);
}

double pearson_sim(const TaskVector& a, const TaskVector& b,
                   const std::optional<TrainableMask>& mask) {
    check_pair(a, b, mask);
    const auto coords = coord_list(a.delta.dim(), mask);
    if (coords.size() < 2) {
        throw StructuralError("pearson: needs at least 2 coordinates");
    }
    const PairSums s = centered_sums(a.delta.values(), b.delta.values(), coords);
    if (s.aa == 0.0 && s.bb == 0.0) return same_origin(a, b) ? 1.0 : 0.0;
    if (s.aa == 0.0 || s.bb == 0.0) return 0.0;
    return clamp_unit(s.ab / (std::sqrt(s.aa) * std::sqrt(s.bb)));
}

SimilarityMatrix similarity_matrix(std::span<const TaskVector> vectors,
                                   Metric metric,
                                   const std::optional<TrainableMask>& mask) {
    if (vectors.empty()) {
        throw StructuralError("similarity matrix: empty vector list");
    }
    const std::size_t K = vectors.size();
    const std::size_t dim = vectors[0].delta.dim();
    for (const auto& v : vectors) {
        if (v.delta.dim() != dim) {
            throw StructuralError("similarity matrix: non-uniform dimensions");
        }
    }
    if (mask && mask->dim() != dim) {
        throw StructuralError("similarity matrix: mask dimension mismatch");
    }
    const auto coords = coord_list(dim, mask);
    if (metric == Metric::pearson && coords.size() < 2) {
        throw StructuralError("pearson: needs at least 2 coordinates");
    }

    SimilarityMatrix out{SquareMatrix(K), metric};
    for (std::size_t i = 0; i < K; ++i) {
        out.values.at(i, i) = 1.0;
        for (std::size_t k = i + 1; k < K; ++k) {
            const double v = detail::pair_similarity(
                metric, vectors[i].delta.values(), vectors[k].delta.values(),
                coords);
            out.values.at(i, k) = v;
            out.values.at(k, i) = v;
        }
    }
    return out;
}

void write_similarity_csv(const std::string& path, const SimilarityMatrix& m,
                          int round) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot write " + path);
    f << "metric=" << metric_name(m.metric) << ",round=" << round << "\n";
    char buf[32];
    const std::size_t K = m.values.size();
    for (std::size_t i = 0; i < K; ++i) {
        for (std::size_t k = 0; k < K; ++k) {
            std::snprintf(buf, sizeof(buf), "%.12f", m.values.at(i, k));
            f << buf << (k + 1 < K ? "," : "\n");
        }
    }
    if (!f) throw IoError("short write to " + path);
}

}  // namespace fedbip
