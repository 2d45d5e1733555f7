#include "flexac/steering.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "flexac/errors.hpp"
#include "flexac/splitmix.hpp"

namespace flexac {

namespace {

std::vector<std::uint32_t> normalized_layers(std::span<const std::uint32_t> layers) {
    std::vector<std::uint32_t> out(layers.begin(), layers.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    if (out.empty()) {
        fail(ErrorCode::EmptyInput, "at least one layer required");
    }
    return out;
}

struct Ranked {
    std::size_t pair_index;
    double distance;
};

std::vector<Ranked> rank_pairs(const ActivationSet& set, const std::vector<PairRecord>& pairs,
                               std::uint32_t layer, std::size_t k) {
    if (layer >= set.num_layers) {
        fail(ErrorCode::LayerOutOfRange,
             "layer " + std::to_string(layer) + " >= " + std::to_string(set.num_layers));
    }
    std::vector<Ranked> ranked;
    ranked.reserve(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        ranked.push_back({i, cosine_distance(set.vector(pairs[i].associative, layer),
                                             set.vector(pairs[i].grounded, layer))});
    }
    // pairs arrive in ascending pair_id order, so a stable sort keeps the tie rule.
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const Ranked& a, const Ranked& b) { return a.distance > b.distance; });
    ranked.resize(std::min(k, ranked.size()));
    return ranked;
}

std::vector<PairRecord> checked_pairs(const ActivationSet& set, std::size_t k) {
    set.validate();
    if (k == 0) {
        fail(ErrorCode::InvalidArgument, "K must be >= 1");
    }
    auto pairs = pair_records(set);
    if (pairs.empty()) {
        fail(ErrorCode::UnpairedSample, "activation set has no pairs");
    }
    return pairs;
}

FeatureVector mean_difference(const ActivationSet& set, const std::vector<PairRecord>& pairs,
                              const std::vector<Ranked>& chosen, std::uint32_t layer) {
    std::vector<double> acc(set.hidden_dim, 0.0);
    for (const Ranked& r : chosen) {
        const auto a = set.vector(pairs[r.pair_index].associative, layer);
        const auto n = set.vector(pairs[r.pair_index].grounded, layer);
        for (std::size_t j = 0; j < acc.size(); ++j) {
            acc[j] += static_cast<double>(a[j]) - static_cast<double>(n[j]);
        }
    }
    std::vector<float> out(acc.size());
    const double count = static_cast<double>(chosen.size());
    for (std::size_t j = 0; j < acc.size(); ++j) {
        out[j] = static_cast<float>(acc[j] / count);
    }
    FeatureVector v(std::move(out));
    if (l2_norm(v) < 1e-8) {
        fail(ErrorCode::ZeroSteeringVector, "steering vector at layer " + std::to_string(layer) +
                                                " has norm below 1e-8");
    }
    return v;
}

SteeringVectorSet build_difference_vector(const ActivationSet& set, std::span<const std::uint32_t> layers,
                                          std::size_t k, SelectionScope scope, VectorKind kind) {
    const auto pairs = checked_pairs(set, k);
    SteeringVectorSet out;
    out.kind = kind;
    out.layer_indices = normalized_layers(layers);
    out.hidden_dim = set.hidden_dim;
    out.meta.k = k;
    out.meta.source_digest = activation_digest(set);

    std::vector<Ranked> shared;
    if (scope.mode == SelectionScope::Mode::reference_layer) {
        shared = rank_pairs(set, pairs, scope.reference, k);
    }
    for (std::uint32_t layer : out.layer_indices) {
        if (layer >= set.num_layers) {
            fail(ErrorCode::LayerOutOfRange,
                 "layer " + std::to_string(layer) + " >= " + std::to_string(set.num_layers));
        }
        const auto chosen = scope.mode == SelectionScope::Mode::per_layer ? rank_pairs(set, pairs, layer, k) : shared;
        out.vectors.push_back(mean_difference(set, pairs, chosen, layer));
    }
    return out;
}

}  // namespace

SelectionReport select_top_k(const ActivationSet& set, std::uint32_t layer, std::size_t k) {
    const auto pairs = checked_pairs(set, k);
    SelectionReport report;
    report.layer = layer;
    report.k = k;
    for (const Ranked& r : rank_pairs(set, pairs, layer, k)) {
        report.chosen_pair_ids.push_back(pairs[r.pair_index].pair_id);
        report.chosen_distances.push_back(r.distance);
    }
    return report;
}

SteeringVectorSet build_general_vector(const ActivationSet& set, std::span<const std::uint32_t> layers,
                                       std::size_t k, SelectionScope scope) {
    return build_difference_vector(set, layers, k, scope, VectorKind::general);
}

SteeringVectorSet build_task_vector(const ActivationSet& task_set, std::span<const std::uint32_t> layers,
                                    std::optional<std::size_t> k, SelectionScope scope) {
    task_set.validate();
    const std::size_t all = pair_records(task_set).size();
    SteeringVectorSet out =
        build_difference_vector(task_set, layers, k.value_or(std::max<std::size_t>(all, 1)), scope, VectorKind::task);
    out.meta.task_tag = task_set.task_tag;
    return out;
}

SteeringVectorSet build_random_vector(std::size_t hidden_dim, std::span<const std::uint32_t> layers,
                                      std::uint64_t seed, double target_norm) {
    if (hidden_dim == 0) {
        fail(ErrorCode::InvalidArgument, "hidden_dim must be >= 1");
    }
    if (!(target_norm > 0.0) || !std::isfinite(target_norm)) {
        fail(ErrorCode::InvalidArgument, "target_norm must be positive and finite");
    }
    SteeringVectorSet out;
    out.kind = VectorKind::random;
    out.layer_indices = normalized_layers(layers);
    out.hidden_dim = hidden_dim;
    out.meta.seed = seed;
    out.meta.target_norm = target_norm;

    for (std::uint32_t layer : out.layer_indices) {
        SplitMix64 rng(seed ^ (0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(layer) + 1)));
        std::vector<double> draw(hidden_dim);
        for (std::size_t j = 0; j < hidden_dim; j += 2) {
            const double u1 = rng.next_unit_open_low();
            const double u2 = rng.next_unit();
            const double radius = std::sqrt(-2.0 * std::log(u1));
            const double theta = 2.0 * std::numbers::pi * u2;
            draw[j] = radius * std::cos(theta);
            if (j + 1 < hidden_dim) {
                draw[j + 1] = radius * std::sin(theta);
            }
        }
        double sq = 0.0;
        for (double x : draw) sq += x * x;
        const double norm = std::sqrt(sq);
        if (norm == 0.0) {
            // u1 == 1 on every draw; astronomically unlikely
            fail(ErrorCode::ZeroSteeringVector, "random draw produced a zero vector");
        }
        std::vector<float> values(hidden_dim);
        for (std::size_t j = 0; j < hidden_dim; ++j) {
            values[j] = static_cast<float>(draw[j] * (target_norm / norm));
        }
        out.vectors.emplace_back(std::move(values));
    }
    return out;
}

}  // namespace flexac
