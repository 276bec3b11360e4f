#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fedbip/param_space.hpp"

namespace fedbip {

enum class Metric { cosine, l2, pearson };

std::string_view metric_name(Metric m);
Metric metric_from_name(std::string_view name);  // throws ConfigError

// Difference between a fine-tuned model and the aggregated model it started
// the round from. A compact representation of what the client's task did to
// the parameters this round.
struct TaskVector {
    ParameterVector delta;
    int client_id = 0;
    int round = 0;
};

TaskVector compute_task_vector(const ParameterVector& fine_tuned,
                               const ParameterVector& base, int client_id,
                               int round);

// Restricted variant: the delta lives on the masked coordinates and is
// exactly zero on frozen ones. Frozen coordinates that differ between the
// inputs are a contract violation and rejected.
TaskVector compute_task_vector_peft(const ParameterVector& fine_tuned,
                                    const ParameterVector& base,
                                    const TrainableMask& mask, int client_id,
                                    int round);

// Similarity functions. With a mask, only masked coordinates enter the
// computation (this matters for pearson, whose mean would otherwise see the
// zero padding). A vector with zero norm counts as 1 against itself — same
// client and round — and 0 against everything else, so a client that did not
// move keeps its self-weight and contributes no direction.
double cosine_sim(const TaskVector& a, const TaskVector& b,
                  const std::optional<TrainableMask>& mask = std::nullopt);
double l2_sim(const TaskVector& a, const TaskVector& b,
              const std::optional<TrainableMask>& mask = std::nullopt);
double pearson_sim(const TaskVector& a, const TaskVector& b,
                   const std::optional<TrainableMask>& mask = std::nullopt);

// Row-major square matrix.
class SquareMatrix {
public:
    explicit SquareMatrix(std::size_t n) : n_(n), a_(n * n, 0.0) {}

    std::size_t size() const { return n_; }
    double& at(std::size_t i, std::size_t k) { return a_[i * n_ + k]; }
    double at(std::size_t i, std::size_t k) const { return a_[i * n_ + k]; }
    const std::vector<double>& data() const { return a_; }

private:
    std::size_t n_;
    std::vector<double> a_;
};

struct SimilarityMatrix {
    SquareMatrix values;
    Metric metric;
};

// Pairwise similarities of K task vectors. Symmetric by construction; the
// diagonal is exactly 1 for cosine/pearson (and 1 for l2 at zero distance).
SimilarityMatrix similarity_matrix(std::span<const TaskVector> vectors,
                                   Metric metric,
                                   const std::optional<TrainableMask>& mask =
                                       std::nullopt);

// CSV with a one-line header naming the metric and round, then K rows of K
// comma-separated values.
void write_similarity_csv(const std::string& path, const SimilarityMatrix& m,
                          int round);

}  // namespace fedbip
