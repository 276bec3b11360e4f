#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fedbip {

struct LayerRange {
    std::string name;
    std::size_t begin = 0;
    std::size_t end = 0;  // exclusive

    std::size_t size() const { return end - begin; }
    bool operator==(const LayerRange&) const = default;
};

// Ordered, contiguous, non-overlapping ranges covering exactly [0, dim).
class LayerPartition {
public:
    explicit LayerPartition(std::vector<LayerRange> layers);

    static LayerPartition single(std::size_t dim, std::string name = "all");

    std::size_t dim() const { return dim_; }
    std::size_t num_layers() const { return layers_.size(); }
    const LayerRange& layer(std::size_t l) const;  // throws StructuralError when out of range
    const std::vector<LayerRange>& layers() const { return layers_; }

    // Value identity: boundaries and names, so deserialized partitions
    // interoperate with freshly built ones.
    bool operator==(const LayerPartition& other) const {
        return layers_ == other.layers_;
    }

private:
    std::vector<LayerRange> layers_;
    std::size_t dim_ = 0;
};

// Sorted set of trainable coordinate positions within [0, dim).
class TrainableMask {
public:
    TrainableMask(std::vector<std::size_t> indices, std::size_t dim);

    static TrainableMask full(std::size_t dim);

    std::size_t dim() const { return dim_; }
    std::size_t count() const { return indices_.size(); }
    bool is_full() const { return indices_.size() == dim_; }
    const std::vector<std::size_t>& indices() const { return indices_; }

    // Dense 0/1 flags, length dim.
    std::vector<char> dense() const;

private:
    std::vector<std::size_t> indices_;  // sorted, unique
    std::size_t dim_ = 0;
};

// Flat, layer-partitioned vector of model parameters. Treated as an
// immutable value after construction; operations return new vectors, so
// instances are safe to share across concurrent client simulations. All
// entries are checked finite on construction.
class ParameterVector {
public:
    ParameterVector(std::vector<double> values, LayerPartition partition);

    std::size_t dim() const { return values_.size(); }
    const LayerPartition& partition() const { return partition_; }
    const std::vector<double>& values() const { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }

    std::span<const double> layer_slice(std::size_t l) const;
    // Mutable view for construction phases; mutating a published vector
    // breaks the immutability convention.
    std::span<double> layer_slice(std::size_t l);

private:
    std::vector<double> values_;
    LayerPartition partition_;
};

ParameterVector add(const ParameterVector& a, const ParameterVector& b);
ParameterVector sub(const ParameterVector& a, const ParameterVector& b);
ParameterVector scale(const ParameterVector& a, double c);
double dot(const ParameterVector& a, const ParameterVector& b);
double l2norm(const ParameterVector& a);

// Coordinates selected by the mask, in mask (ascending index) order.
std::vector<double> masked(const ParameterVector& v, const TrainableMask& m);

// Checkpoints: <stem>.bin holds the raw little-endian float64 array;
// <stem>.json is the sidecar with dimension, layer boundaries and names, and
// the optional trainable mask as a sorted index list.
struct Checkpoint {
    ParameterVector params;
    std::optional<TrainableMask> mask;
};

void save_checkpoint(const std::string& stem, const ParameterVector& v,
                     const std::optional<TrainableMask>& mask = std::nullopt);
Checkpoint load_checkpoint(const std::string& stem);

}  // namespace fedbip
