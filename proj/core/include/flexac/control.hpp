#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "flexac/actstore.hpp"
#include "flexac/numlib.hpp"

namespace flexac {

class ToyModel;

/// How Top-K pairs are chosen when a vector spans several layers.
struct SelectionScope {
    enum class Mode { per_layer, reference_layer };
    Mode mode = Mode::per_layer;
    std::uint32_t reference = 0;  // only meaningful for reference_layer

    static SelectionScope per_layer() { return {}; }
    static SelectionScope reference_layer(std::uint32_t layer) {
        return {Mode::reference_layer, layer};
    }

    friend bool operator==(const SelectionScope&, const SelectionScope&) = default;
};

/// "per_layer" or "reference_layer:<l>".
std::string to_string(const SelectionScope& scope);
SelectionScope parse_selection_scope(std::string_view text);

struct ControlConfig {
    std::vector<std::uint32_t> layers;
    double alpha_gen = 1.0;
    double alpha_task = 0.0;
    bool sic_enabled = false;
    bool renorm_enabled = false;
    SelectionScope selection_scope;

    /// Throws InvalidArgument for non-finite alphas, or for an empty layer
    /// list while either alpha is nonzero.
    void validate() const;

    friend bool operator==(const ControlConfig&, const ControlConfig&) = default;
};

enum class VectorRole { gen, task };

std::string_view to_string(VectorRole role) noexcept;

struct CalibrationEntry {
    std::uint32_t layer = 0;
    std::size_t position = 0;
    VectorRole role = VectorRole::gen;
    double cosine_alignment = 0.0;
    double calibration_factor = 1.0;  // c; 1 when calibration is disabled
    double effective_alpha = 0.0;
};

using CalibrationTrace = std::vector<CalibrationEntry>;

/// Steering intensity calibration factor for a known alignment.
///
/// c = sigmoid(max(-s * cos, 0)) with s = sign(alpha_user) (+1 for 0). For
/// positive steering this is the sigmoid-of-misalignment rule; for negative
/// steering the clamp mirrors so suppression is amplified when the state
/// already points along +v. Always in [0.5, sigmoid(1)].
double calibration_factor(double cosine, double alpha_user) noexcept;

struct Calibration {
    double effective_alpha;
    double cosine;
    double factor;
};

/// effective_alpha = alpha_user * calibration_factor(cos(f, v), alpha_user).
/// Throws DegenerateVector for zero-norm f or v.
Calibration calibrate(std::span<const float> f, std::span<const float> v, double alpha_user);

struct Steer {
    std::span<const float> vector;
    double alpha = 0.0;
};

struct ControlResult {
    FeatureVector value;
    CalibrationTrace trace;
};

/// f' = f + a_gen * v_gen + a_task * v_task, accumulated in double.
///
/// With `sic`, each alpha is calibrated against the pre-injection f. With
/// `renorm`, f' is rescaled to ||f|| (skipped when f' == f). A vector whose
/// alpha is zero is skipped entirely and leaves no trace entry. Throws
/// DimMismatch, DegenerateVector, or ZeroResult when renorm meets ||f'|| < 1e-12.
ControlResult apply_control(std::span<const float> f, std::optional<Steer> gen,
                            std::optional<Steer> task, bool sic, bool renorm);

struct SteeredGeneration {
    std::vector<std::uint32_t> tokens;
    std::vector<CalibrationTrace> step_traces;  // one per generated token
    std::vector<Matrix> final_captures;         // captures of the last forward pass
};

/// Greedy generation with inject hooks at every layer of `config.layers`.
///
/// A set supplied with a nonzero alpha must carry a vector for every
/// configured layer (LayerOutOfRange otherwise) with the model's hidden dim
/// (DimMismatch). Layers beyond the model raise HookLayerOutOfRange.
SteeredGeneration steer_generation(const ToyModel& model, std::span<const std::uint32_t> prompt,
                                   std::size_t steps, const SteeringVectorSet* gen,
                                   const SteeringVectorSet* task, const ControlConfig& config);

}  // namespace flexac
