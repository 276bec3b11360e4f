#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fedbip/param_space.hpp"

namespace fedbip {

enum class Heterogeneity { label_flip, rotation, cluster_concept };
enum class ModelKind { logistic_regression, mlp_one_hidden };

std::string_view heterogeneity_name(Heterogeneity h);
std::string_view model_kind_name(ModelKind m);
Heterogeneity heterogeneity_from_name(std::string_view name);
ModelKind model_kind_from_name(std::string_view name);

struct FederationConfig {
    int num_clients = 1;
    int num_clusters = 1;
    int samples_per_client = 32;  // training samples; the test split is an
                                  // independent draw of the same size
    int feature_dim = 8;
    int num_classes = 2;
    Heterogeneity heterogeneity_kind = Heterogeneity::cluster_concept;
    double noise_std = 0.0;
    std::uint64_t seed = 0;
};

struct Sample {
    std::vector<double> x;
    int y = 0;
};

struct ClientDataset {
    std::vector<Sample> train;
    std::vector<Sample> test;
    int cluster_id = 0;
};

struct LocalTrainConfig {
    int epochs = 1;
    double learning_rate = 0.1;
    int batch_size = 32;
    double proximal_mu = 0.0;  // 0 disables the proximal pull to the anchor
    ModelKind model_kind = ModelKind::logistic_regression;
    int hidden_dim = 16;  // mlp only
};

// Synthetic heterogeneous federation. Clients are assigned round-robin to
// clusters (sizes differ by at most one); clients in the same cluster share
// a labeling concept and differ only in sampling. Fully determined by the
// config seed.
//
//   cluster_concept: one random linear concept per cluster labels the points.
//   label_flip:      a shared base concept labels the points, then cluster c
//                    shifts every label by c (mod num_classes).
//   rotation:        the shared base concept labels the points, then features
//                    pass through a per-cluster random orthogonal map.
//
// noise_std adds Gaussian feature noise after labeling.
std::vector<ClientDataset> generate_federation(const FederationConfig& cfg);

// Softmax classifier with analytic gradients. Parameters live in a flat
// vector; each weight matrix and each bias is its own named layer.
class Classifier {
public:
    virtual ~Classifier() = default;

    virtual LayerPartition parameter_partition() const = 0;
    virtual std::size_t dim() const = 0;

    // Seeded Gaussian weights scaled by fan-in, zero biases.
    ParameterVector cold_start(std::uint64_t seed) const;

    // Argmax class; ties break to the lowest class index.
    virtual int predict(std::span<const double> theta,
                        std::span<const double> x) const = 0;

    virtual double mean_loss(std::span<const double> theta,
                             std::span<const Sample> samples) const = 0;

    // Mean cross-entropy over the batch (indices into data); fills grad_out
    // (same dimension as theta) with the analytic gradient. Returns the loss.
    virtual double loss_and_gradient(std::span<const double> theta,
                                     const std::vector<Sample>& data,
                                     std::span<const std::size_t> batch,
                                     std::span<double> grad_out) const = 0;

protected:
    virtual void init_values(std::span<double> theta, std::uint64_t seed) const = 0;
};

std::unique_ptr<Classifier> make_classifier(ModelKind kind, int feature_dim,
                                            int num_classes, int hidden_dim);

// Trains on the union of every client's training split, starting from the
// seeded cold start. With zero epochs this returns the cold start itself.
// The result is the shared initialization handed to every client.
ParameterVector pretrain_init(const Classifier& model,
                              std::span<const ClientDataset> datasets,
                              const LocalTrainConfig& cfg, int pretrain_epochs,
                              std::uint64_t seed);

// Mini-batch gradient descent on the client's training split for cfg.epochs
// epochs, starting from theta. The batch order is a seeded permutation per
// epoch (a single full batch keeps natural order). With proximal_mu > 0 the
// objective gains (mu/2)*||theta - anchor||^2. Under a mask only the masked
// coordinates move.
ParameterVector local_update(const Classifier& model, const ParameterVector& theta,
                             const ClientDataset& data,
                             const LocalTrainConfig& cfg,
                             const ParameterVector& anchor, std::uint64_t seed,
                             const std::optional<TrainableMask>& mask =
                                 std::nullopt);

struct EvalResult {
    double accuracy = 0.0;
    double mean_loss = 0.0;
};

EvalResult evaluate(const Classifier& model, const ParameterVector& theta,
                    std::span<const Sample> split);

// Text dump for reproducibility audits: one sample per line, label first,
// then the feature values.
void save_dataset(const std::string& path, const ClientDataset& data);
ClientDataset load_dataset(const std::string& path);

}  // namespace fedbip
