#include "flexac/localization.hpp"

#include <string>

#include "flexac/errors.hpp"

namespace flexac {

std::string_view to_string(DistanceMetric metric) noexcept {
    return metric == DistanceMetric::cosine ? "cosine" : "euclidean";
}

DistanceMetric parse_metric(std::string_view text) {
    if (text == "cosine") return DistanceMetric::cosine;
    if (text == "euclidean") return DistanceMetric::euclidean;
    fail(ErrorCode::InvalidArgument, "metric must be cosine or euclidean, got \"" + std::string(text) + "\"");
}

double distance(DistanceMetric metric, std::span<const float> a, std::span<const float> b) {
    return metric == DistanceMetric::cosine ? cosine_distance(a, b) : euclidean_distance(a, b);
}

LayerProfile layer_distance_profile(const ActivationSet& set, DistanceMetric metric, bool retain_per_pair) {
    set.validate();
    const auto pairs = pair_records(set);
    if (pairs.empty()) {
        fail(ErrorCode::UnpairedSample, "activation set has no pairs");
    }
    const std::size_t layers = set.num_layers;

    LayerProfile profile;
    profile.metric = metric;
    profile.num_layers = layers;
    profile.mean.resize(layers);
    if (retain_per_pair) {
        profile.per_pair = Matrix(pairs.size(), layers);
    }
    for (const auto& p : pairs) {
        profile.pair_ids.push_back(p.pair_id);
    }

    for (std::size_t l = 0; l < layers; ++l) {
        double acc = 0.0;
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            const double dist = distance(metric, set.vector(pairs[i].associative, l),
                                         set.vector(pairs[i].grounded, l));
            acc += dist;
            if (retain_per_pair) {
                profile.per_pair.at(i, l) = static_cast<float>(dist);
            }
        }
        profile.mean[l] = static_cast<float>(acc / static_cast<double>(pairs.size()));
    }
    return profile;
}

namespace {

struct Summary {
    double last;
    double bar;
};

Summary summarize(const std::vector<double>& per_layer, std::uint32_t m) {
    const std::size_t layers = per_layer.size();
    double acc = 0.0;
    for (std::size_t l = m + 1; l < layers; ++l) {
        acc += per_layer[l];
    }
    const std::size_t count = layers - 1 - m;
    return {per_layer.back(), count == 0 ? 0.0 : acc / static_cast<double>(count)};
}

}  // namespace

InterventionResult intervene_replace(const ToyModel& model, const TokenPair& pair, std::uint32_t m,
                                     DistanceMetric metric) {
    if (pair.associative.size() != pair.grounded.size()) {
        fail(ErrorCode::LengthMismatch, "paired token sequences differ in length (" +
                                            std::to_string(pair.associative.size()) + " vs " +
                                            std::to_string(pair.grounded.size()) + ")");
    }
    if (m >= model.num_layers()) {
        fail(ErrorCode::HookLayerOutOfRange,
             "replaced layer " + std::to_string(m) + " >= " + std::to_string(model.num_layers()));
    }

    const ForwardResult grounded = forward_capture(model, pair.grounded);
    const ForwardResult original = forward_capture(model, pair.associative);
    const HookSpec hook = ReplaceHook{m, grounded.captures[m]};
    const ForwardResult modified = forward_with_hooks(model, pair.associative, std::span(&hook, 1));

    const std::size_t layers = model.num_layers();
    const std::size_t last = pair.grounded.size() - 1;
    InterventionResult r;
    r.replaced_layer = m;
    r.metric = metric;
    r.per_layer.resize(layers);
    r.baseline_per_layer.resize(layers);
    for (std::size_t l = 0; l < layers; ++l) {
        const auto reference = grounded.captures[l].row(last);
        r.per_layer[l] = distance(metric, modified.captures[l].row(last), reference);
        r.baseline_per_layer[l] = distance(metric, original.captures[l].row(last), reference);
    }
    const Summary mod = summarize(r.per_layer, m);
    const Summary base = summarize(r.baseline_per_layer, m);
    r.d_last = mod.last;
    r.d_bar = mod.bar;
    r.baseline_d_last = base.last;
    r.baseline_d_bar = base.bar;
    return r;
}

std::vector<InterventionResult> intervention_sweep(const ToyModel& model, std::span<const TokenPair> pairs,
                                                   std::span<const std::uint32_t> layers,
                                                   DistanceMetric metric) {
    if (pairs.empty() || layers.empty()) {
        fail(ErrorCode::EmptyInput, "intervention sweep needs pairs and layers");
    }
    std::vector<InterventionResult> out;
    out.reserve(layers.size());
    const double n = static_cast<double>(pairs.size());
    for (std::uint32_t m : layers) {
        InterventionResult agg;
        agg.replaced_layer = m;
        agg.metric = metric;
        agg.per_layer.assign(model.num_layers(), 0.0);
        agg.baseline_per_layer.assign(model.num_layers(), 0.0);
        for (const TokenPair& pair : pairs) {
            const InterventionResult r = intervene_replace(model, pair, m, metric);
            agg.d_last += r.d_last;
            agg.d_bar += r.d_bar;
            agg.baseline_d_last += r.baseline_d_last;
            agg.baseline_d_bar += r.baseline_d_bar;
            for (std::size_t l = 0; l < r.per_layer.size(); ++l) {
                agg.per_layer[l] += r.per_layer[l];
                agg.baseline_per_layer[l] += r.baseline_per_layer[l];
            }
        }
        agg.d_last /= n;
        agg.d_bar /= n;
        agg.baseline_d_last /= n;
        agg.baseline_d_bar /= n;
        for (std::size_t l = 0; l < agg.per_layer.size(); ++l) {
            agg.per_layer[l] /= n;
            agg.baseline_per_layer[l] /= n;
        }
        out.push_back(std::move(agg));
    }
    return out;
}

PcaSnapshot pca_snapshot(const ActivationSet& set, std::uint32_t layer, std::size_t k) {
    set.validate();
    if (k != 2 && k != 3) {
        fail(ErrorCode::InvalidArgument, "PCA snapshot k must be 2 or 3");
    }
    if (layer >= set.num_layers) {
        fail(ErrorCode::LayerOutOfRange,
             "layer " + std::to_string(layer) + " >= " + std::to_string(set.num_layers));
    }
    Matrix slice(set.num_samples, set.hidden_dim);
    for (std::size_t s = 0; s < set.num_samples; ++s) {
        const auto v = set.vector(s, layer);
        std::copy(v.begin(), v.end(), slice.row(s).begin());
    }
    PcaResult pca = pca_project(slice, k);
    return {std::move(pca.coords), set.labels, set.pair_ids, std::move(pca.explained_variance)};
}

}  // namespace flexac
