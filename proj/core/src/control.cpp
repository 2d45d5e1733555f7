#include "flexac/control.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <string>

#include "flexac/errors.hpp"
#include "flexac/toymodel.hpp"

namespace flexac {

std::string to_string(const SelectionScope& scope) {
    if (scope.mode == SelectionScope::Mode::per_layer) {
        return "per_layer";
    }
    return "reference_layer:" + std::to_string(scope.reference);
}

SelectionScope parse_selection_scope(std::string_view text) {
    if (text == "per_layer") {
        return SelectionScope::per_layer();
    }
    constexpr std::string_view prefix = "reference_layer:";
    if (text.substr(0, prefix.size()) == prefix) {
        const std::string_view digits = text.substr(prefix.size());
        std::uint32_t layer = 0;
        const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), layer);
        if (ec == std::errc() && ptr == digits.data() + digits.size() && !digits.empty()) {
            return SelectionScope::reference_layer(layer);
        }
    }
    fail(ErrorCode::InvalidArgument,
         "selection scope must be per_layer or reference_layer:<l>, got \"" + std::string(text) + "\"");
}

void ControlConfig::validate() const {
    if (!std::isfinite(alpha_gen) || !std::isfinite(alpha_task)) {
        fail(ErrorCode::InvalidArgument, "alphas must be finite");
    }
    if (layers.empty() && (alpha_gen != 0.0 || alpha_task != 0.0)) {
        fail(ErrorCode::InvalidArgument, "control layers required when an alpha is nonzero");
    }
}

std::string_view to_string(VectorRole role) noexcept {
    return role == VectorRole::gen ? "gen" : "task";
}

double calibration_factor(double cosine, double alpha_user) noexcept {
    const double sign = alpha_user < 0.0 ? -1.0 : 1.0;
    return sigmoid(std::max(-sign * cosine, 0.0));
}

Calibration calibrate(std::span<const float> f, std::span<const float> v, double alpha_user) {
    const double cosine = cosine_similarity(f, v);
    const double c = calibration_factor(cosine, alpha_user);
    return {alpha_user * c, cosine, c};
}

ControlResult apply_control(std::span<const float> f, std::optional<Steer> gen,
                            std::optional<Steer> task, bool sic, bool renorm) {
    const std::size_t d = f.size();
    std::vector<double> out(f.begin(), f.end());
    CalibrationTrace trace;

    auto inject = [&](const std::optional<Steer>& steer, VectorRole role) {
        if (!steer || steer->alpha == 0.0) {
            return;
        }
        if (steer->vector.size() != d) {
            fail(ErrorCode::DimMismatch, "steering vector dim " + std::to_string(steer->vector.size()) +
                                             " vs state dim " + std::to_string(d));
        }
        CalibrationEntry entry;
        entry.role = role;
        if (sic) {
            const Calibration cal = calibrate(f, steer->vector, steer->alpha);
            entry.cosine_alignment = cal.cosine;
            entry.calibration_factor = cal.factor;
            entry.effective_alpha = cal.effective_alpha;
        } else {
            const bool measurable = l2_norm(f) > 0.0 && l2_norm(steer->vector) > 0.0;
            entry.cosine_alignment = measurable ? cosine_similarity(f, steer->vector) : 0.0;
            entry.effective_alpha = steer->alpha;
        }
        for (std::size_t i = 0; i < d; ++i) {
            out[i] += entry.effective_alpha * static_cast<double>(steer->vector[i]);
        }
        trace.push_back(entry);
    };
    inject(gen, VectorRole::gen);
    inject(task, VectorRole::task);

    std::vector<float> values(d);
    if (trace.empty()) {
        std::copy(f.begin(), f.end(), values.begin());
        return {FeatureVector(std::move(values)), std::move(trace)};
    }

    if (renorm) {
        const double original = l2_norm(f);
        if (original == 0.0) {
            fail(ErrorCode::DegenerateVector, "cannot preserve the scale of a zero state");
        }
        double sq = 0.0;
        for (double x : out) sq += x * x;
        const double injected = std::sqrt(sq);
        if (injected < 1e-12) {
            fail(ErrorCode::ZeroResult, "injection annihilated the hidden state; reduce |alpha|");
        }
        const double scale = original / injected;
        for (double& x : out) x *= scale;
    }
    for (std::size_t i = 0; i < d; ++i) {
        values[i] = static_cast<float>(out[i]);
    }
    return {FeatureVector(std::move(values)), std::move(trace)};
}

SteeredGeneration steer_generation(const ToyModel& model, std::span<const std::uint32_t> prompt,
                                   std::size_t steps, const SteeringVectorSet* gen,
                                   const SteeringVectorSet* task, const ControlConfig& config) {
    config.validate();
    for (const SteeringVectorSet* set : {gen, task}) {
        if (set != nullptr && set->hidden_dim != model.hidden_dim()) {
            fail(ErrorCode::DimMismatch, "steering set dim " + std::to_string(set->hidden_dim) +
                                             " vs model dim " + std::to_string(model.hidden_dim()));
        }
    }

    std::vector<HookSpec> hooks;
    const bool active = (gen != nullptr && config.alpha_gen != 0.0) ||
                        (task != nullptr && config.alpha_task != 0.0);
    if (active) {
        for (std::uint32_t layer : config.layers) {
            if (layer >= model.num_layers()) {
                fail(ErrorCode::HookLayerOutOfRange, "control layer " + std::to_string(layer) +
                                                         " >= " + std::to_string(model.num_layers()));
            }
            for (const auto& [set, alpha] : {std::pair{gen, config.alpha_gen}, std::pair{task, config.alpha_task}}) {
                if (set != nullptr && alpha != 0.0 && set->find(layer) == nullptr) {
                    fail(ErrorCode::LayerOutOfRange,
                         "steering set has no vector for control layer " + std::to_string(layer));
                }
            }
            hooks.push_back(InjectHook{layer, gen, task, &config});
        }
    }

    SteeredGeneration out;
    out.tokens.assign(prompt.begin(), prompt.end());
    if (out.tokens.empty()) {
        fail(ErrorCode::EmptyInput, "prompt must contain at least one token");
    }
    for (std::size_t step = 0; step <= steps; ++step) {
        ForwardResult pass = forward_with_hooks(model, out.tokens, hooks);
        if (step == steps) {
            out.final_captures = std::move(pass.captures);
            break;
        }
        const auto last = pass.logits.row(pass.logits.rows() - 1);
        std::uint32_t best = 0;
        for (std::uint32_t v = 1; v < last.size(); ++v) {
            if (last[v] > last[best]) {
                best = v;
            }
        }
        out.tokens.push_back(best);
        out.step_traces.push_back(std::move(pass.trace));
    }
    return out;
}

}  // namespace flexac
