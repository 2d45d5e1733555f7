#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "flexac/actstore.hpp"
#include "flexac/numlib.hpp"
#include "flexac/toymodel.hpp"

namespace flexac {

enum class DistanceMetric { cosine, euclidean };

std::string_view to_string(DistanceMetric metric) noexcept;
DistanceMetric parse_metric(std::string_view text);

double distance(DistanceMetric metric, std::span<const float> a, std::span<const float> b);

/// Mean associative-vs-grounded distance per layer.
struct LayerProfile {
    DistanceMetric metric = DistanceMetric::cosine;
    std::size_t num_layers = 0;
    std::vector<float> mean;         // per layer, pairs summed in pair_id order
    std::vector<std::int64_t> pair_ids;
    Matrix per_pair;                 // pairs x layers; empty unless retained
};

LayerProfile layer_distance_profile(const ActivationSet& set, DistanceMetric metric,
                                    bool retain_per_pair = false);

struct TokenPair {
    std::vector<std::uint32_t> associative;
    std::vector<std::uint32_t> grounded;
};

/// Outcome of replacing the associative run's layer-m state with the
/// grounded one. Distances are read at the final token position.
struct InterventionResult {
    std::uint32_t replaced_layer = 0;
    DistanceMetric metric = DistanceMetric::cosine;
    double d_last = 0.0;          // distance at the final layer
    double d_bar = 0.0;           // mean over layers m+1 .. L-1 (0 when empty)
    double baseline_d_last = 0.0; // same, without replacement
    double baseline_d_bar = 0.0;
    std::vector<double> per_layer;          // modified run, every layer
    std::vector<double> baseline_per_layer; // unhooked run, every layer
};

/// Throws LengthMismatch when the two sequences differ in length and
/// HookLayerOutOfRange when m >= num_layers.
InterventionResult intervene_replace(const ToyModel& model, const TokenPair& pair, std::uint32_t m,
                                     DistanceMetric metric);

/// One aggregated result per entry of `layers`: means over pairs, summed in
/// pair order. per_layer vectors hold the per-layer means as well.
std::vector<InterventionResult> intervention_sweep(const ToyModel& model, std::span<const TokenPair> pairs,
                                                   std::span<const std::uint32_t> layers,
                                                   DistanceMetric metric);

struct PcaSnapshot {
    Matrix coords;                       // samples x k
    std::vector<std::uint8_t> labels;
    std::vector<std::int64_t> pair_ids;
    std::vector<double> explained_variance;
};

/// PCA of the layer slice of every sample; k must be 2 or 3.
PcaSnapshot pca_snapshot(const ActivationSet& set, std::uint32_t layer, std::size_t k);

}  // namespace flexac
