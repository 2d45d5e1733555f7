#include "commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <unistd.h>

#include <json.hpp>

#include "flexac/actstore.hpp"
#include "flexac/control.hpp"
#include "flexac/errors.hpp"
#include "flexac/localization.hpp"
#include "flexac/metrics.hpp"
#include "flexac/splitmix.hpp"
#include "flexac/steering.hpp"
#include "flexac/toymodel.hpp"

namespace flexac::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Aggregated floats go out with 9 significant digits.
double round9(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", x);
    return std::strtod(buf, nullptr);
}

std::string fmt9(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", x);
    return buf;
}

void require(const std::string& value, const char* what) {
    if (value.empty()) {
        fail(ErrorCode::InvalidArgument, std::string("missing required input: ") + what);
    }
}

fs::path prepare_dir(const std::string& dir) {
    require(dir, "--out directory");
    fs::create_directories(dir);
    return fs::path(dir);
}

void write_snapshot_dir(const RunConfig& cfg, const fs::path& dir) {
    write_file_atomic((dir / "run_config.json").string(), cfg.to_json());
}

void write_snapshot_file(const RunConfig& cfg, const std::string& file) {
    write_file_atomic(file + ".config.json", cfg.to_json());
}

void prepare_parent(const std::string& file) {
    require(file, "--out file");
    const fs::path parent = fs::path(file).parent_path();
    if (!parent.empty()) {
        fs::create_directories(parent);
    }
}

template <typename Fn>
void for_each_json_line(const std::string& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorCode::Io, "cannot open " + path);
    }
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            fail(ErrorCode::InvalidArgument, path + ":" + std::to_string(number) + " is not a JSON object");
        }
        try {
            fn(j);
        } catch (const json::exception& e) {
            fail(ErrorCode::InvalidArgument, path + ":" + std::to_string(number) + ": " + e.what());
        }
    }
}

ControlConfig control_config(const RunConfig& cfg) {
    ControlConfig c;
    c.layers = cfg.layers;
    c.alpha_gen = cfg.alpha_gen;
    c.alpha_task = cfg.alpha_task;
    c.sic_enabled = cfg.sic;
    c.renorm_enabled = cfg.renorm;
    c.selection_scope = parse_selection_scope(cfg.selection_scope);
    return c;
}

// ---------------------------------------------------------------------------

void cmd_init_model(const RunConfig& cfg) {
    require(cfg.model, "--model seed spec");
    prepare_parent(cfg.output_file);
    const ToyModel model = resolve_model(cfg.model);
    std::ostringstream bytes;
    save_model(model, bytes);
    write_file_atomic(cfg.output_file, bytes.str());
    write_snapshot_file(cfg, cfg.output_file);
}

void cmd_make_fixture(RunConfig cfg) {
    if (cfg.model.empty()) {
        cfg.model = "seed:" + std::to_string(cfg.seed) + ":32:16:8:32";
    }
    const fs::path dir = prepare_dir(cfg.output_dir);
    const ToyModel model = resolve_model(cfg.model);
    const auto vocab = static_cast<std::uint32_t>(model.vocab_size());
    if (vocab < 4) {
        fail(ErrorCode::InvalidArgument, "fixture model needs vocab >= 4");
    }
    SplitMix64 rng(cfg.seed);
    auto draw = [&](std::uint32_t lo, std::uint32_t hi) {
        return lo + static_cast<std::uint32_t>(rng.next() % (hi - lo));
    };

    constexpr std::size_t kLength = 6;
    auto make_set = [&](std::size_t count, std::size_t first_swapped, std::uint32_t assoc_lo,
                        std::vector<TokenPair>* keep) {
        ActivationSet set;
        set.num_samples = 2 * count;
        set.num_layers = model.num_layers();
        set.hidden_dim = model.hidden_dim();
        for (std::size_t i = 0; i < count; ++i) {
            TokenPair pair;
            for (std::size_t p = 0; p < kLength; ++p) {
                pair.grounded.push_back(draw(0, vocab / 2));
            }
            pair.associative = pair.grounded;
            for (std::size_t p = first_swapped; p < kLength; ++p) {
                pair.associative[p] = draw(assoc_lo, vocab);
            }
            for (const auto* tokens : {&pair.grounded, &pair.associative}) {
                const ForwardResult run = forward_capture(model, *tokens);
                for (const Matrix& layer : run.captures) {
                    const auto last = layer.row(kLength - 1);
                    set.data.insert(set.data.end(), last.begin(), last.end());
                }
            }
            set.labels.insert(set.labels.end(), {0, 1});
            set.pair_ids.insert(set.pair_ids.end(), {static_cast<std::int64_t>(i), static_cast<std::int64_t>(i)});
            if (keep != nullptr) {
                keep->push_back(std::move(pair));
            }
        }
        return set;
    };

    std::vector<TokenPair> pairs;
    const ActivationSet general = make_set(cfg.fixture_pairs, kLength - 2, vocab / 2, &pairs);
    ActivationSet task = make_set(std::max<std::size_t>(cfg.fixture_pairs / 10, 1), 0, 3 * vocab / 4, nullptr);
    task.task_tag = "fixture-task";

    std::ostringstream model_bytes;
    save_model(model, model_bytes);
    write_file_atomic((dir / "model.toym").string(), model_bytes.str());
    std::ostringstream general_bytes;
    write_activations(general, general_bytes);
    write_file_atomic((dir / "activations.actv").string(), general_bytes.str());
    std::ostringstream task_bytes;
    write_activations(task, task_bytes);
    write_file_atomic((dir / "task.actv").string(), task_bytes.str());

    std::string lines;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        ordered_json j;
        j["pair_id"] = i;
        j["associative"] = pairs[i].associative;
        j["grounded"] = pairs[i].grounded;
        lines += j.dump() + "\n";
    }
    write_file_atomic((dir / "pairs.jsonl").string(), lines);
    write_snapshot_dir(cfg, dir);
}

void cmd_profile(const RunConfig& cfg) {
    require(cfg.activations, "--activations");
    const fs::path dir = prepare_dir(cfg.output_dir);
    const DistanceMetric metric = parse_metric(cfg.metric);
    const LayerProfile profile = layer_distance_profile(load_activations(cfg.activations), metric);

    std::string jsonl;
    std::string csv = "layer,mean_" + std::string(to_string(metric)) + "\n";
    for (std::size_t l = 0; l < profile.num_layers; ++l) {
        ordered_json j;
        j["layer"] = l;
        j["metric"] = to_string(metric);
        j["mean"] = round9(profile.mean[l]);
        jsonl += j.dump() + "\n";
        csv += std::to_string(l) + "," + fmt9(profile.mean[l]) + "\n";
    }
    write_file_atomic((dir / "profile.jsonl").string(), jsonl);
    write_file_atomic((dir / "profile.csv").string(), csv);
    write_snapshot_dir(cfg, dir);
}

void cmd_intervene(const RunConfig& cfg) {
    require(cfg.model, "--model");
    require(cfg.pairs, "--pairs");
    const fs::path dir = prepare_dir(cfg.output_dir);
    const ToyModel model = resolve_model(cfg.model);
    const auto pairs = load_token_pairs(cfg.pairs);
    std::vector<std::uint32_t> layers = cfg.layers;
    if (layers.empty()) {
        for (std::uint32_t l = 0; l < model.num_layers(); ++l) layers.push_back(l);
    }
    const auto results = intervention_sweep(model, pairs, layers, parse_metric(cfg.metric));

    std::string jsonl;
    std::string csv = "layer,d_L,d_bar,baseline,baseline_d_L\n";
    for (const auto& r : results) {
        ordered_json j;
        j["layer"] = r.replaced_layer;
        j["d_L"] = round9(r.d_last);
        j["d_bar"] = round9(r.d_bar);
        j["baseline"] = round9(r.baseline_d_bar);
        j["baseline_d_L"] = round9(r.baseline_d_last);
        jsonl += j.dump() + "\n";
        csv += std::to_string(r.replaced_layer) + "," + fmt9(r.d_last) + "," + fmt9(r.d_bar) + "," +
               fmt9(r.baseline_d_bar) + "," + fmt9(r.baseline_d_last) + "\n";
    }
    write_file_atomic((dir / "intervention.jsonl").string(), jsonl);
    write_file_atomic((dir / "intervention.csv").string(), csv);
    RunConfig resolved = cfg;
    resolved.layers = layers;
    write_snapshot_dir(resolved, dir);
}

void cmd_build_vector(const RunConfig& cfg) {
    prepare_parent(cfg.output_file);
    const VectorKind kind = parse_vector_kind(cfg.kind);
    if (cfg.layers.empty()) {
        fail(ErrorCode::InvalidArgument, "--layers required");
    }
    SteeringVectorSet vectors;
    RunConfig resolved = cfg;
    if (kind == VectorKind::random) {
        std::size_t dim = cfg.hidden_dim;
        if (!cfg.activations.empty()) {
            dim = load_activations(cfg.activations).hidden_dim;
        }
        if (dim == 0) {
            fail(ErrorCode::InvalidArgument, "random vectors need --dim or --activations");
        }
        resolved.hidden_dim = dim;
        vectors = build_random_vector(dim, cfg.layers, cfg.seed, cfg.target_norm);
    } else {
        require(cfg.activations, "--activations");
        const ActivationSet set = load_activations(cfg.activations);
        const SelectionScope scope = parse_selection_scope(cfg.selection_scope);
        vectors = kind == VectorKind::general ? build_general_vector(set, cfg.layers, cfg.k, scope)
                                              : build_task_vector(set, cfg.layers, cfg.k, scope);
    }
    std::ostringstream bytes;
    write_vectors(vectors, bytes);
    write_file_atomic(cfg.output_file, bytes.str());
    write_snapshot_file(resolved, cfg.output_file);
}

void cmd_steer(const RunConfig& cfg) {
    require(cfg.model, "--model");
    const fs::path dir = prepare_dir(cfg.output_dir);
    const ToyModel model = resolve_model(cfg.model);
    std::optional<SteeringVectorSet> gen;
    std::optional<SteeringVectorSet> task;
    if (!cfg.gen_vectors.empty()) gen = load_vectors(cfg.gen_vectors);
    if (!cfg.task_vectors.empty()) task = load_vectors(cfg.task_vectors);

    RunConfig resolved = cfg;
    if (resolved.layers.empty()) {
        if (gen) resolved.layers = gen->layer_indices;
        else if (task) resolved.layers = task->layer_indices;
    }
    ControlConfig control = control_config(resolved);
    if (!gen) control.alpha_gen = 0.0;
    if (!task) control.alpha_task = 0.0;
    const SteeredGeneration out = steer_generation(model, cfg.prompt, cfg.steps, gen ? &*gen : nullptr,
                                                   task ? &*task : nullptr, control);

    ordered_json tokens;
    tokens["prompt"] = cfg.prompt;
    tokens["tokens"] = out.tokens;
    tokens["generated"] = std::vector<std::uint32_t>(out.tokens.begin() + static_cast<std::ptrdiff_t>(cfg.prompt.size()),
                                                     out.tokens.end());
    write_file_atomic((dir / "tokens.json").string(), tokens.dump() + "\n");

    std::string trace;
    for (std::size_t step = 0; step < out.step_traces.size(); ++step) {
        for (const auto& e : out.step_traces[step]) {
            ordered_json j;
            j["step"] = step;
            j["layer"] = e.layer;
            j["position"] = e.position;
            j["vector"] = to_string(e.role);
            j["cos"] = round9(e.cosine_alignment);
            j["c"] = round9(e.calibration_factor);
            j["alpha_eff"] = round9(e.effective_alpha);
            trace += j.dump() + "\n";
        }
    }
    write_file_atomic((dir / "trace.jsonl").string(), trace);

    // float -> double is exact, so captures round-trip bitwise through the text.
    std::string captures;
    for (std::size_t l = 0; l < out.final_captures.size(); ++l) {
        const Matrix& m = out.final_captures[l];
        for (std::size_t p = 0; p < m.rows(); ++p) {
            ordered_json j;
            j["layer"] = l;
            j["position"] = p;
            json values = json::array();
            for (float v : m.row(p)) values.push_back(v);
            j["values"] = values;
            captures += j.dump() + "\n";
        }
    }
    write_file_atomic((dir / "captures.jsonl").string(), captures);
    write_snapshot_dir(resolved, dir);
}

void emit_metric(const RunConfig& cfg, const ordered_json& result, const char* name, std::ostream& out) {
    out << result.dump() << "\n";
    if (!cfg.output_dir.empty()) {
        const fs::path dir = prepare_dir(cfg.output_dir);
        write_file_atomic((dir / (std::string(name) + ".json")).string(), result.dump() + "\n");
        write_snapshot_dir(cfg, dir);
    }
}

void cmd_vdat(const RunConfig& cfg, std::ostream& out) {
    require(cfg.embeddings, "--embeddings");
    const EmbeddingSet set = load_embeddings(cfg.embeddings);
    VdatConfig vcfg;
    vcfg.include_image_pairs = cfg.include_image_pairs;
    ordered_json result;
    result["vdat"] = round9(vdat_score(set, vcfg));
    result["nouns"] = set.noun_embeddings.size();
    result["include_image_pairs"] = cfg.include_image_pairs;
    emit_metric(cfg, result, "vdat", out);
}

void cmd_chair(const RunConfig& cfg, std::ostream& out) {
    require(cfg.annotations, "--annotations");
    std::vector<CaptionAnnotation> annotations;
    for_each_json_line(cfg.annotations, [&](const json& j) {
        CaptionAnnotation a;
        for (const auto& m : j.at("mentioned")) a.mentioned.insert(m.get<std::string>());
        for (const auto& g : j.at("gt")) a.ground_truth.insert(g.get<std::string>());
        annotations.push_back(std::move(a));
    });
    const ChairScores s = chair_scores(annotations);
    ordered_json result;
    // S is object-level, I is caption-level.
    result["CHAIR_S"] = round9(s.object_ratio);
    result["CHAIR_I"] = round9(s.caption_ratio);
    result["recall"] = round9(s.recall);
    result["captions"] = annotations.size();
    emit_metric(cfg, result, "chair", out);
}

void cmd_pope(const RunConfig& cfg, std::ostream& out) {
    require(cfg.qa, "--qa");
    std::vector<Answer> predictions;
    std::vector<Answer> labels;
    for_each_json_line(cfg.qa, [&](const json& j) {
        predictions.push_back(parse_answer(j.at("pred").get<std::string>()));
        labels.push_back(parse_answer(j.at("label").get<std::string>()));
    });
    const BinaryMetrics m = binary_metrics(predictions, labels);
    ordered_json result;
    result["accuracy"] = round9(m.accuracy);
    result["precision"] = round9(m.precision);
    result["recall"] = round9(m.recall);
    result["f1"] = round9(m.f1);
    result["questions"] = predictions.size();
    emit_metric(cfg, result, "pope", out);
}

void cmd_pca(const RunConfig& cfg) {
    require(cfg.activations, "--activations");
    prepare_parent(cfg.output_file);
    const PcaSnapshot snap = pca_snapshot(load_activations(cfg.activations), cfg.layer, cfg.pca_k);
    std::string csv = "sample,pair_id,label";
    for (std::size_t c = 0; c < cfg.pca_k; ++c) csv += ",pc" + std::to_string(c + 1);
    csv += "\n";
    for (std::size_t s = 0; s < snap.coords.rows(); ++s) {
        csv += std::to_string(s) + "," + std::to_string(snap.pair_ids[s]) + "," + std::to_string(snap.labels[s]);
        for (float v : snap.coords.row(s)) csv += "," + fmt9(v);
        csv += "\n";
    }
    write_file_atomic(cfg.output_file, csv);
    write_snapshot_file(cfg, cfg.output_file);
}

}  // namespace

ToyModel resolve_model(const std::string& spec) {
    constexpr std::string_view prefix = "seed:";
    if (spec.rfind(prefix, 0) == 0) {
        std::vector<std::uint64_t> parts;
        std::stringstream ss(spec.substr(prefix.size()));
        std::string item;
        while (std::getline(ss, item, ':')) {
            try {
                std::size_t used = 0;
                parts.push_back(std::stoull(item, &used));
                if (used != item.size()) throw std::invalid_argument(item);
            } catch (const std::exception&) {
                fail(ErrorCode::InvalidArgument, "bad seed spec \"" + spec + "\"");
            }
        }
        if (parts.size() != 5) {
            fail(ErrorCode::InvalidArgument, "seed spec is seed:<seed>:<vocab>:<dim>:<layers>:<mlp>");
        }
        return ToyModel::init_seeded(parts[0], parts[1], parts[2], parts[3], parts[4]);
    }
    return load_model(spec);
}

std::vector<TokenPair> load_token_pairs(const std::string& path) {
    std::vector<TokenPair> pairs;
    for_each_json_line(path, [&](const json& j) {
        TokenPair p;
        p.associative = j.at("associative").get<std::vector<std::uint32_t>>();
        p.grounded = j.at("grounded").get<std::vector<std::uint32_t>>();
        pairs.push_back(std::move(p));
    });
    return pairs;
}

void write_file_atomic(const std::string& path, const std::string& bytes) {
    const std::string tmp = path + ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            fail(ErrorCode::Io, "cannot write " + tmp);
        }
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) {
            fail(ErrorCode::Io, "short write to " + tmp);
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        fail(ErrorCode::Io, "cannot rename " + tmp + " to " + path + ": " + ec.message());
    }
}

void run_command(const RunConfig& cfg, std::ostream& out) {
    cfg.validate();
    const std::string& c = cfg.command;
    if (c == "init-model") return cmd_init_model(cfg);
    if (c == "make-fixture") return cmd_make_fixture(cfg);
    if (c == "profile") return cmd_profile(cfg);
    if (c == "intervene") return cmd_intervene(cfg);
    if (c == "build-vector") return cmd_build_vector(cfg);
    if (c == "steer") return cmd_steer(cfg);
    if (c == "vdat") return cmd_vdat(cfg, out);
    if (c == "chair") return cmd_chair(cfg, out);
    if (c == "pope") return cmd_pope(cfg, out);
    if (c == "pca") return cmd_pca(cfg);
    fail(ErrorCode::InvalidArgument, "unknown command \"" + c + "\"");
}

}  // namespace flexac::cli
