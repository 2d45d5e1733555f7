#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace flexac::cli {

/// Every knob a pipeline command reads. Serialized as the resolved-config
/// snapshot written next to each command's outputs; feeding that snapshot
/// back through --config reproduces the run.
struct RunConfig {
    std::string command;

    // inputs
    std::string model;          // TOYM1 path, or "seed:<seed>:<vocab>:<dim>:<layers>:<mlp>"
    std::string activations;    // ACTV1
    std::string pairs;          // JSON lines of token pairs
    std::string gen_vectors;    // STRV1
    std::string task_vectors;   // STRV1
    std::string embeddings;     // EMBV1
    std::string annotations;    // JSON lines {"mentioned":[...],"gt":[...]}
    std::string qa;             // JSON lines {"pred":"yes","label":"no"}

    // analysis / construction
    std::vector<std::uint32_t> layers;
    std::size_t k = 50;
    std::string kind = "general";
    std::string selection_scope = "per_layer";
    std::string metric = "cosine";
    std::uint64_t seed = 0;
    double target_norm = 1.0;
    std::size_t hidden_dim = 0;  // random vectors without --activations
    std::uint32_t layer = 0;     // pca
    std::size_t pca_k = 2;
    std::size_t fixture_pairs = 200;

    // control
    double alpha_gen = 1.0;
    double alpha_task = 0.0;
    bool sic = false;
    bool renorm = false;
    std::vector<std::uint32_t> prompt;
    std::size_t steps = 0;

    // metrics
    bool include_image_pairs = true;

    // outputs
    std::string output_dir;
    std::string output_file;

    /// Throws flexac::Error(InvalidArgument) for unsorted/duplicate layers,
    /// non-finite alphas, or unknown metric/kind/scope names.
    void validate() const;

    std::string to_json() const;
    static RunConfig from_json(std::string_view text);
    static RunConfig load(const std::string& path);

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Control layers used for each evaluated model family:
/// "qwen-vl" -> {15,16,17}, "llava-1.5" -> {11,12,13}, "deepseek-vl" -> {4,5,6}.
std::vector<std::uint32_t> control_layer_preset(std::string_view family);

enum class SteeringMode { faithful, creative };

/// Preset run: family control layers, K = 50, alpha_gen = -1 (faithful) or +1 (creative).
RunConfig preset_config(std::string_view family, SteeringMode mode);

}  // namespace flexac::cli
