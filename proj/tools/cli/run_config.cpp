#include "run_config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "flexac/actstore.hpp"
#include "flexac/control.hpp"
#include "flexac/errors.hpp"
#include "flexac/localization.hpp"

namespace flexac::cli {

using nlohmann::json;
using nlohmann::ordered_json;

void RunConfig::validate() const {
    for (std::size_t i = 1; i < layers.size(); ++i) {
        if (layers[i] <= layers[i - 1]) {
            fail(ErrorCode::InvalidArgument, "layers must be sorted and unique");
        }
    }
    if (!std::isfinite(alpha_gen) || !std::isfinite(alpha_task) || !std::isfinite(target_norm)) {
        fail(ErrorCode::InvalidArgument, "alphas and target_norm must be finite");
    }
    if (k == 0) {
        fail(ErrorCode::InvalidArgument, "K must be >= 1");
    }
    parse_metric(metric);
    parse_vector_kind(kind);
    parse_selection_scope(selection_scope);
}

std::string RunConfig::to_json() const {
    ordered_json j;
    j["command"] = command;
    j["model"] = model;
    j["activations"] = activations;
    j["pairs"] = pairs;
    j["gen_vectors"] = gen_vectors;
    j["task_vectors"] = task_vectors;
    j["embeddings"] = embeddings;
    j["annotations"] = annotations;
    j["qa"] = qa;
    j["layers"] = layers;
    j["K"] = k;
    j["kind"] = kind;
    j["selection_scope"] = selection_scope;
    j["metric"] = metric;
    j["seed"] = seed;
    j["target_norm"] = target_norm;
    j["hidden_dim"] = hidden_dim;
    j["layer"] = layer;
    j["pca_k"] = pca_k;
    j["fixture_pairs"] = fixture_pairs;
    j["alpha_gen"] = alpha_gen;
    j["alpha_task"] = alpha_task;
    j["sic"] = sic;
    j["renorm"] = renorm;
    j["prompt"] = prompt;
    j["steps"] = steps;
    j["include_image_pairs"] = include_image_pairs;
    j["output_dir"] = output_dir;
    j["output_file"] = output_file;
    return j.dump(2) + "\n";
}

namespace {

template <typename T>
void read_field(const json& j, const char* key, T& out) {
    const auto it = j.find(key);
    if (it == j.end()) {
        return;
    }
    try {
        out = it->get<T>();
    } catch (const json::exception&) {
        fail(ErrorCode::InvalidArgument, std::string("config field \"") + key + "\" has the wrong type");
    }
}

}  // namespace

RunConfig RunConfig::from_json(std::string_view text) {
    const json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        fail(ErrorCode::InvalidArgument, "config is not a JSON object");
    }
    static const std::vector<std::string> known = {
        "command", "model", "activations", "pairs", "gen_vectors", "task_vectors", "embeddings",
        "annotations", "qa", "layers", "K", "kind", "selection_scope", "metric", "seed",
        "target_norm", "hidden_dim", "layer", "pca_k", "fixture_pairs", "alpha_gen", "alpha_task",
        "sic", "renorm", "prompt", "steps", "include_image_pairs", "output_dir", "output_file"};
    for (const auto& item : j.items()) {
        if (std::find(known.begin(), known.end(), item.key()) == known.end()) {
            fail(ErrorCode::InvalidArgument, "unknown config field \"" + item.key() + "\"");
        }
    }

    RunConfig c;
    read_field(j, "command", c.command);
    read_field(j, "model", c.model);
    read_field(j, "activations", c.activations);
    read_field(j, "pairs", c.pairs);
    read_field(j, "gen_vectors", c.gen_vectors);
    read_field(j, "task_vectors", c.task_vectors);
    read_field(j, "embeddings", c.embeddings);
    read_field(j, "annotations", c.annotations);
    read_field(j, "qa", c.qa);
    read_field(j, "layers", c.layers);
    read_field(j, "K", c.k);
    read_field(j, "kind", c.kind);
    read_field(j, "selection_scope", c.selection_scope);
    read_field(j, "metric", c.metric);
    read_field(j, "seed", c.seed);
    read_field(j, "target_norm", c.target_norm);
    read_field(j, "hidden_dim", c.hidden_dim);
    read_field(j, "layer", c.layer);
    read_field(j, "pca_k", c.pca_k);
    read_field(j, "fixture_pairs", c.fixture_pairs);
    read_field(j, "alpha_gen", c.alpha_gen);
    read_field(j, "alpha_task", c.alpha_task);
    read_field(j, "sic", c.sic);
    read_field(j, "renorm", c.renorm);
    read_field(j, "prompt", c.prompt);
    read_field(j, "steps", c.steps);
    read_field(j, "include_image_pairs", c.include_image_pairs);
    read_field(j, "output_dir", c.output_dir);
    read_field(j, "output_file", c.output_file);
    c.validate();
    return c;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorCode::Io, "cannot open config " + path);
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return from_json(buffer.str());
}

std::vector<std::uint32_t> control_layer_preset(std::string_view family) {
    if (family == "qwen-vl") return {15, 16, 17};
    if (family == "llava-1.5") return {11, 12, 13};
    if (family == "deepseek-vl") return {4, 5, 6};
    fail(ErrorCode::InvalidArgument, "no control-layer preset for \"" + std::string(family) + "\"");
}

RunConfig preset_config(std::string_view family, SteeringMode mode) {
    RunConfig c;
    c.command = "steer";
    c.layers = control_layer_preset(family);
    c.k = 50;
    c.alpha_gen = mode == SteeringMode::creative ? 1.0 : -1.0;
    c.alpha_task = 0.0;
    return c;
}

}  // namespace flexac::cli
