#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fedbip/param_space.hpp"
#include "fedbip/task_vector.hpp"

namespace fedbip {

enum class WeightingSource { task_vector, parameter, uniform };
enum class Substrate { task_vector, parameter };
enum class Granularity { global, layer_wise };

std::string_view weighting_name(WeightingSource w);
std::string_view substrate_name(Substrate s);
std::string_view granularity_name(Granularity g);
WeightingSource weighting_from_name(std::string_view name);
Substrate substrate_from_name(std::string_view name);
Granularity granularity_from_name(std::string_view name);

// One point of the strategy grid. weighting_source picks what the pairwise
// similarities are computed on (task vectors, raw parameters, or data-size
// uniform weights that ignore the metric); substrate picks what the weighted
// combination is applied to (residual task-vector update vs. direct
// parameter average).
struct StrategySpec {
    WeightingSource weighting = WeightingSource::task_vector;
    Substrate substrate = Substrate::task_vector;
    Granularity granularity = Granularity::global;
    Metric metric = Metric::cosine;
};

// K x K row-stochastic client weights: one matrix for the global scheme, one
// per layer for the layer-wise scheme. Row i holds the weights client i's
// update assigns to every client (self included).
struct AggregationWeights {
    Granularity granularity = Granularity::global;
    std::vector<std::string> layer_names;  // parallel to matrices
    std::vector<SquareMatrix> matrices;

    const SquareMatrix& global() const;  // requires a single matrix
};

// Clips negatives to zero and divides by the row total. The self entry is a
// self-similarity (1 for cosine/pearson), so the total stays positive.
std::vector<double> normalize_row(std::span<const double> sims,
                                  std::size_t self_index);

struct UpdateResult {
    std::vector<ParameterVector> bars;
    AggregationWeights weights;
};

// Personalized residual update: per client, task vectors of all clients are
// combined with similarity weights and added onto the client's maintained
// aggregated model.
UpdateResult fedbip_update(std::span<const ParameterVector> bars,
                           std::span<const ParameterVector> locals,
                           Metric metric,
                           const std::optional<TrainableMask>& mask = std::nullopt);

// Same, but task vectors, similarities and weights are computed per layer.
UpdateResult fedbip_layerwise_update(std::span<const ParameterVector> bars,
                                     std::span<const ParameterVector> locals,
                                     Metric metric,
                                     const std::optional<TrainableMask>& mask =
                                         std::nullopt);

// Data-size-weighted parameter average into one shared model.
ParameterVector uniform_update(std::span<const ParameterVector> bars,
                               std::span<const ParameterVector> locals,
                               std::span<const double> data_sizes);

// Dispatch over the full strategy grid. {task_vector, task_vector, global}
// reproduces fedbip_update bit-exactly; {uniform, parameter} reproduces
// uniform_update replicated across clients.
UpdateResult strategy_update(const StrategySpec& spec,
                             std::span<const ParameterVector> bars,
                             std::span<const ParameterVector> locals,
                             std::span<const double> data_sizes,
                             const std::optional<TrainableMask>& mask =
                                 std::nullopt);

// One CSV per round (and per layer in layer-wise mode):
// weights_round<r>.csv or weights_round<r>_layer<l>.csv under dir.
// Returns the file names written.
std::vector<std::string> write_weights_csv(const std::string& dir, int round,
                                           const AggregationWeights& w);

}  // namespace fedbip
