#include "fedbip/aggregation.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "fedbip/errors.hpp"
#include "fedbip/rng.hpp"

namespace fedbip {

// Low-level pair similarity shared with the similarity-matrix path.
namespace detail {
double pair_similarity(Metric m, std::span<const double> a,
                       std::span<const double> b,
                       std::span<const std::size_t> coords);
}

std::string_view weighting_name(WeightingSource w) {
    switch (w) {
        case WeightingSource::task_vector: return "task_vector";
        case WeightingSource::parameter: return "parameter";
        case WeightingSource::uniform: return "uniform";
    }
    return "task_vector";
}

std::string_view substrate_name(Substrate s) {
    return s == Substrate::parameter ? "parameter" : "task_vector";
}

std::string_view granularity_name(Granularity g) {
    return g == Granularity::layer_wise ? "layer_wise" : "global";
}

WeightingSource weighting_from_name(std::string_view name) {
    if (name == "task_vector") return WeightingSource::task_vector;
    if (name == "parameter") return WeightingSource::parameter;
    if (name == "uniform") return WeightingSource::uniform;
    throw ConfigError("unknown weighting source '" + std::string(name) +
                      "' (expected task_vector, parameter or uniform)");
}

Substrate substrate_from_name(std::string_view name) {
    if (name == "task_vector") return Substrate::task_vector;
    if (name == "parameter") return Substrate::parameter;
    throw ConfigError("unknown substrate '" + std::string(name) +
                      "' (expected task_vector or parameter)");
}

Granularity granularity_from_name(std::string_view name) {
    if (name == "global") return Granularity::global;
    if (name == "layer_wise") return Granularity::layer_wise;
    throw ConfigError("unknown granularity '" + std::string(name) +
                      "' (expected global or layer_wise)");
}

const SquareMatrix& AggregationWeights::global() const {
    if (matrices.size() != 1) {
        throw StructuralError("weights: layer-wise result has no single global matrix");
    }
    return matrices.front();
}

std::vector<double> normalize_row(std::span<const double> sims,
                                  std::size_t self_index) {
    if (sims.empty()) throw StructuralError("normalize_row: empty row");
    if (self_index >= sims.size()) {
        throw StructuralError("normalize_row: self index out of range");
    }
    std::vector<double> row(sims.begin(), sims.end());
    for (double& v : row) {
        if (v < 0.0) v = 0.0;
    }
    std::vector<double> terms = row;
    const double denom = stable_sum(terms);
    if (!(denom > 0.0)) {
        throw std::logic_error("normalize_row: row vanished after clipping");
    }
    for (double& v : row) v /= denom;
    return row;
}

namespace {

struct RangeCoords {
    std::string name;
    std::vector<std::size_t> coords;  // ascending
};

std::vector<RangeCoords> active_ranges(const LayerPartition& p, Granularity g,
                                       const std::optional<TrainableMask>& mask) {
    std::vector<char> flags;
    if (mask) flags = mask->dense();
    auto coords_in = [&](std::size_t begin, std::size_t end) {
        std::vector<std::size_t> c;
        c.reserve(end - begin);
        for (std::size_t d = begin; d < end; ++d) {
            if (!mask || flags[d]) c.push_back(d);
        }
        return c;
    };
    std::vector<RangeCoords> out;
    if (g == Granularity::global) {
        out.push_back({"global", coords_in(0, p.dim())});
    } else {
        for (const auto& l : p.layers()) {
            out.push_back({l.name, coords_in(l.begin, l.end)});
        }
    }
    return out;
}

void check_cohort(std::span<const ParameterVector> bars,
                  std::span<const ParameterVector> locals,
                  const std::optional<TrainableMask>& mask) {
    if (bars.empty()) throw StructuralError("aggregation: no clients");
    if (bars.size() != locals.size()) {
        throw StructuralError("aggregation: " + std::to_string(bars.size()) +
                              " aggregated models vs " +
                              std::to_string(locals.size()) + " local models");
    }
    const auto& ref = bars.front();
    for (std::size_t i = 0; i < bars.size(); ++i) {
        if (bars[i].dim() != ref.dim() || locals[i].dim() != ref.dim() ||
            !(bars[i].partition() == ref.partition()) ||
            !(locals[i].partition() == ref.partition())) {
            throw StructuralError("aggregation: client " + std::to_string(i) +
                                  " has mismatched model shape");
        }
    }
    if (mask && mask->dim() != ref.dim()) {
        throw StructuralError("aggregation: mask dimension mismatch");
    }
}

void check_row_stochastic(const SquareMatrix& m) {
    const std::size_t K = m.size();
    for (std::size_t i = 0; i < K; ++i) {
        double sum = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            const double v = m.at(i, k);
            if (v < 0.0 || v > 1.0 + 1e-12) {
                throw std::logic_error("aggregation: weight outside [0,1]");
            }
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-9 || !(m.at(i, i) > 0.0)) {
            throw std::logic_error("aggregation: weight row invariant violated");
        }
    }
}

// Similarity-derived weights over one coordinate subset. The diagonal is the
// exact self-similarity 1; negatives are clipped by the row normalization.
SquareMatrix similarity_weights(std::span<const ParameterVector> reps,
                                const std::vector<std::size_t>& coords,
                                Metric metric) {
    const std::size_t K = reps.size();
    SquareMatrix sims(K);
    for (std::size_t i = 0; i < K; ++i) {
        sims.at(i, i) = 1.0;
        for (std::size_t k = i + 1; k < K; ++k) {
            const double v = detail::pair_similarity(
                metric, reps[i].values(), reps[k].values(), coords);
            sims.at(i, k) = v;
            sims.at(k, i) = v;
        }
    }
    SquareMatrix weights(K);
    for (std::size_t i = 0; i < K; ++i) {
        std::span<const double> row(sims.data().data() + i * K, K);
        const auto w = normalize_row(row, i);
        for (std::size_t k = 0; k < K; ++k) weights.at(i, k) = w[k];
    }
    return weights;
}

SquareMatrix uniform_rows(std::span<const double> data_sizes) {
    const std::size_t K = data_sizes.size();
    for (double s : data_sizes) {
        if (!(s >= 0.0)) throw StructuralError("aggregation: negative data size");
    }
    std::vector<double> terms(data_sizes.begin(), data_sizes.end());
    const double total = stable_sum(terms);
    if (!(total > 0.0)) throw StructuralError("aggregation: zero total data size");
    SquareMatrix w(K);
    for (std::size_t i = 0; i < K; ++i) {
        for (std::size_t k = 0; k < K; ++k) w.at(i, k) = data_sizes[k] / total;
    }
    return w;
}

}  // namespace

UpdateResult strategy_update(const StrategySpec& spec,
                             std::span<const ParameterVector> bars,
                             std::span<const ParameterVector> locals,
                             std::span<const double> data_sizes,
                             const std::optional<TrainableMask>& mask) {
    check_cohort(bars, locals, mask);
    const std::size_t K = bars.size();
    if (spec.weighting == WeightingSource::uniform && data_sizes.size() != K) {
        throw StructuralError("aggregation: need one data size per client");
    }

    // Task vectors: residuals of this round only. The PEFT variant enforces
    // that frozen coordinates did not move.
    std::vector<ParameterVector> taus;
    taus.reserve(K);
    for (std::size_t k = 0; k < K; ++k) {
        taus.push_back(mask ? compute_task_vector_peft(locals[k], bars[k], *mask,
                                                       static_cast<int>(k), 0)
                                  .delta
                            : sub(locals[k], bars[k]));
    }

    const auto ranges =
        active_ranges(bars.front().partition(), spec.granularity, mask);

    // Start from the maintained models so coordinates outside the active
    // ranges (frozen under PEFT) carry through unchanged.
    std::vector<std::vector<double>> out;
    out.reserve(K);
    for (std::size_t i = 0; i < K; ++i) out.push_back(bars[i].values());

    AggregationWeights weights;
    weights.granularity = spec.granularity;

    std::vector<double> terms(K);
    for (const auto& range : ranges) {
        SquareMatrix w(0);
        switch (spec.weighting) {
            case WeightingSource::uniform:
                w = uniform_rows(data_sizes);
                break;
            case WeightingSource::parameter:
                w = similarity_weights(locals, range.coords, spec.metric);
                break;
            case WeightingSource::task_vector:
                w = similarity_weights(taus, range.coords, spec.metric);
                break;
        }
        check_row_stochastic(w);

        const bool residual = spec.substrate == Substrate::task_vector;
        for (std::size_t i = 0; i < K; ++i) {
            for (std::size_t d : range.coords) {
                for (std::size_t k = 0; k < K; ++k) {
                    terms[k] = w.at(i, k) * (residual ? taus[k][d] : locals[k][d]);
                }
                const double acc = stable_sum(terms);
                out[i][d] = residual ? bars[i][d] + acc : acc;
            }
        }

        weights.layer_names.push_back(range.name);
        weights.matrices.push_back(std::move(w));
    }

    UpdateResult result{{}, std::move(weights)};
    result.bars.reserve(K);
    for (std::size_t i = 0; i < K; ++i) {
        result.bars.emplace_back(std::move(out[i]), bars.front().partition());
    }
    return result;
}

UpdateResult fedbip_update(std::span<const ParameterVector> bars,
                           std::span<const ParameterVector> locals,
                           Metric metric,
                           const std::optional<TrainableMask>& mask) {
    StrategySpec spec;
    spec.metric = metric;
    return strategy_update(spec, bars, locals, {}, mask);
}

UpdateResult fedbip_layerwise_update(std::span<const ParameterVector> bars,
                                     std::span<const ParameterVector> locals,
                                     Metric metric,
                                     const std::optional<TrainableMask>& mask) {
    StrategySpec spec;
    spec.granularity = Granularity::layer_wise;
    spec.metric = metric;
    return strategy_update(spec, bars, locals, {}, mask);
}

ParameterVector uniform_update(std::span<const ParameterVector> bars,
                               std::span<const ParameterVector> locals,
                               std::span<const double> data_sizes) {
    StrategySpec spec;
    spec.weighting = WeightingSource::uniform;
    spec.substrate = Substrate::parameter;
    auto result = strategy_update(spec, bars, locals, data_sizes);
    return std::move(result.bars.front());
}

std::vector<std::string> write_weights_csv(const std::string& dir, int round,
                                           const AggregationWeights& w) {
    std::vector<std::string> names;
    char buf[32];
    for (std::size_t l = 0; l < w.matrices.size(); ++l) {
        std::string name = "weights_round" + std::to_string(round);
        if (w.granularity == Granularity::layer_wise) {
            name += "_layer" + std::to_string(l);
        }
        name += ".csv";
        const std::string path = dir + "/" + name;
        std::ofstream f(path, std::ios::trunc);
        if (!f) throw IoError("cannot write " + path);
        f << "round=" << round;
        if (w.granularity == Granularity::layer_wise) {
            f << ",layer=" << l << ",name=" << w.layer_names[l];
        }
        f << "\n";
        const SquareMatrix& m = w.matrices[l];
        for (std::size_t i = 0; i < m.size(); ++i) {
            for (std::size_t k = 0; k < m.size(); ++k) {
                std::snprintf(buf, sizeof(buf), "%.12f", m.at(i, k));
                f << buf << (k + 1 < m.size() ? "," : "\n");
            }
        }
        if (!f) throw IoError("short write to " + path);
        names.push_back(name);
    }
    return names;
}

}  // namespace fedbip
