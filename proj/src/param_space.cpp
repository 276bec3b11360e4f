#include "fedbip/param_space.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>

#include "fedbip/errors.hpp"
#include "json.hpp"

namespace fedbip {

namespace {

void require_same_shape(const ParameterVector& a, const ParameterVector& b,
                        const char* op) {
    if (a.dim() != b.dim()) {
        throw StructuralError(std::string(op) + ": dimension mismatch (" +
                              std::to_string(a.dim()) + " vs " +
                              std::to_string(b.dim()) + ")");
    }
    if (!(a.partition() == b.partition())) {
        throw StructuralError(std::string(op) + ": partition mismatch");
    }
}

}  // namespace

LayerPartition::LayerPartition(std::vector<LayerRange> layers)
    : layers_(std::move(layers)) {
    if (layers_.empty()) {
        throw StructuralError("partition: needs at least one layer");
    }
    std::size_t expected = 0;
    for (const auto& l : layers_) {
        if (l.begin != expected || l.end <= l.begin) {
            throw StructuralError("partition: layer '" + l.name +
                                  "' breaks contiguous coverage");
        }
        expected = l.end;
    }
    dim_ = expected;
}

LayerPartition LayerPartition::single(std::size_t dim, std::string name) {
    return LayerPartition({{std::move(name), 0, dim}});
}

const LayerRange& LayerPartition::layer(std::size_t l) const {
    if (l >= layers_.size()) {
        throw StructuralError("partition: layer index " + std::to_string(l) +
                              " out of range (have " +
                              std::to_string(layers_.size()) + ")");
    }
    return layers_[l];
}

TrainableMask::TrainableMask(std::vector<std::size_t> indices, std::size_t dim)
    : indices_(std::move(indices)), dim_(dim) {
    std::sort(indices_.begin(), indices_.end());
    indices_.erase(std::unique(indices_.begin(), indices_.end()), indices_.end());
    if (!indices_.empty() && indices_.back() >= dim_) {
        throw StructuralError("mask: index " + std::to_string(indices_.back()) +
                              " outside [0, " + std::to_string(dim_) + ")");
    }
}

TrainableMask TrainableMask::full(std::size_t dim) {
    std::vector<std::size_t> all(dim);
    for (std::size_t i = 0; i < dim; ++i) all[i] = i;
    return TrainableMask(std::move(all), dim);
}

std::vector<char> TrainableMask::dense() const {
    std::vector<char> flags(dim_, 0);
    for (std::size_t i : indices_) flags[i] = 1;
    return flags;
}

ParameterVector::ParameterVector(std::vector<double> values,
                                 LayerPartition partition)
    : values_(std::move(values)), partition_(std::move(partition)) {
    if (values_.size() != partition_.dim()) {
        throw StructuralError("parameter vector: " + std::to_string(values_.size()) +
                              " values vs partition covering " +
                              std::to_string(partition_.dim()));
    }
    for (double v : values_) {
        if (!std::isfinite(v)) {
            throw StructuralError("parameter vector: non-finite entry");
        }
    }
}

std::span<const double> ParameterVector::layer_slice(std::size_t l) const {
    const LayerRange& r = partition_.layer(l);
    return {values_.data() + r.begin, r.size()};
}

std::span<double> ParameterVector::layer_slice(std::size_t l) {
    const LayerRange& r = partition_.layer(l);
    return {values_.data() + r.begin, r.size()};
}

ParameterVector add(const ParameterVector& a, const ParameterVector& b) {
    require_same_shape(a, b, "add");
    std::vector<double> out(a.dim());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
    return ParameterVector(std::move(out), a.partition());
}

ParameterVector sub(const ParameterVector& a, const ParameterVector& b) {
    require_same_shape(a, b, "sub");
    std::vector<double> out(a.dim());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
    return ParameterVector(std::move(out), a.partition());
}

ParameterVector scale(const ParameterVector& a, double c) {
    if (!std::isfinite(c)) {
        throw StructuralError("scale: non-finite factor");
    }
    std::vector<double> out(a.dim());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * c;
    return ParameterVector(std::move(out), a.partition());
}

double dot(const ParameterVector& a, const ParameterVector& b) {
    require_same_shape(a, b, "dot");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) acc += a[i] * b[i];
    return acc;
}

double l2norm(const ParameterVector& a) {
    return std::sqrt(dot(a, a));
}

std::vector<double> masked(const ParameterVector& v, const TrainableMask& m) {
    if (m.dim() != v.dim()) {
        throw StructuralError("masked: mask is for dimension " +
                              std::to_string(m.dim()) + ", vector has " +
                              std::to_string(v.dim()));
    }
    std::vector<double> out;
    out.reserve(m.count());
    for (std::size_t i : m.indices()) out.push_back(v[i]);
    return out;
}

void save_checkpoint(const std::string& stem, const ParameterVector& v,
                     const std::optional<TrainableMask>& mask) {
    static_assert(sizeof(double) == 8);
    const std::string bin_path = stem + ".bin";
    std::ofstream bin(bin_path, std::ios::binary | std::ios::trunc);
    if (!bin) throw IoError("cannot write " + bin_path);
    if constexpr (std::endian::native == std::endian::little) {
        bin.write(reinterpret_cast<const char*>(v.values().data()),
                  static_cast<std::streamsize>(v.dim() * sizeof(double)));
    } else {
        for (double d : v.values()) {
            auto bits = std::bit_cast<std::uint64_t>(d);
            char bytes[8];
            for (int k = 0; k < 8; ++k) bytes[k] = static_cast<char>(bits >> (8 * k));
            bin.write(bytes, 8);
        }
    }
    if (!bin) throw IoError("short write to " + bin_path);
    bin.close();

    nlohmann::json side;
    side["dim"] = v.dim();
    auto layers = nlohmann::json::array();
    for (const auto& l : v.partition().layers()) {
        layers.push_back({{"name", l.name}, {"begin", l.begin}, {"end", l.end}});
    }
    side["layers"] = layers;
    if (mask) {
        side["mask"] = mask->indices();
    }
    const std::string side_path = stem + ".json";
    std::ofstream meta(side_path, std::ios::trunc);
    if (!meta) throw IoError("cannot write " + side_path);
    meta << side.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::string& stem) {
    const std::string side_path = stem + ".json";
    std::ifstream meta(side_path);
    if (!meta) throw IoError("cannot read " + side_path);
    nlohmann::json side;
    try {
        meta >> side;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(side_path + ": " + e.what());
    }

    std::size_t dim = side.at("dim").get<std::size_t>();
    std::vector<LayerRange> layers;
    for (const auto& l : side.at("layers")) {
        layers.push_back({l.at("name").get<std::string>(),
                          l.at("begin").get<std::size_t>(),
                          l.at("end").get<std::size_t>()});
    }

    const std::string bin_path = stem + ".bin";
    std::ifstream bin(bin_path, std::ios::binary);
    if (!bin) throw IoError("cannot read " + bin_path);
    std::vector<double> values(dim);
    if constexpr (std::endian::native == std::endian::little) {
        bin.read(reinterpret_cast<char*>(values.data()),
                 static_cast<std::streamsize>(dim * sizeof(double)));
    } else {
        for (std::size_t i = 0; i < dim; ++i) {
            char bytes[8];
            bin.read(bytes, 8);
            std::uint64_t bits = 0;
            for (int k = 0; k < 8; ++k) {
                bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[k])) << (8 * k);
            }
            values[i] = std::bit_cast<double>(bits);
        }
    }
    if (!bin) throw IoError(bin_path + ": truncated (expected " +
                            std::to_string(dim) + " float64 values)");

    Checkpoint out{ParameterVector(std::move(values), LayerPartition(std::move(layers))),
                   std::nullopt};
    if (side.contains("mask")) {
        out.mask = TrainableMask(side.at("mask").get<std::vector<std::size_t>>(),
                                 out.params.dim());
    }
    return out;
}

}  // namespace fedbip
