#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "flexac/actstore.hpp"
#include "flexac/control.hpp"

namespace flexac {

/// Pool of 2000 pairs, 50 kept: the published instance-selection setting.
inline constexpr std::size_t kDefaultTopK = 50;

struct SelectionReport {
    std::uint32_t layer = 0;
    std::size_t k = 0;
    std::vector<std::int64_t> chosen_pair_ids;
    std::vector<double> chosen_distances;  // non-increasing
};

/// Pairs ranked by cosine distance between associative and grounded states at
/// `layer`, descending; equal distances keep ascending pair_id order.
SelectionReport select_top_k(const ActivationSet& set, std::uint32_t layer, std::size_t k);

/// Per layer: mean of (associative - grounded) over the Top-K pairs, summed in
/// ranking order in double. Throws ZeroSteeringVector when a result has norm
/// below 1e-8.
SteeringVectorSet build_general_vector(const ActivationSet& set, std::span<const std::uint32_t> layers,
                                       std::size_t k, SelectionScope scope = {});

/// Same recipe over instruction-aligned pairs; `k` defaults to every pair.
SteeringVectorSet build_task_vector(const ActivationSet& task_set, std::span<const std::uint32_t> layers,
                                    std::optional<std::size_t> k = std::nullopt,
                                    SelectionScope scope = {});

/// Standard-normal directions rescaled to `target_norm`. Layer l draws from
/// SplitMix64(seed ^ (0x9E3779B97F4A7C15 * (l + 1))); each Box-Muller step
/// consumes u1 in (0,1] then u2 in [0,1) and yields the cosine sample
/// followed by the sine sample.
SteeringVectorSet build_random_vector(std::size_t hidden_dim, std::span<const std::uint32_t> layers,
                                      std::uint64_t seed, double target_norm);

}  // namespace flexac
