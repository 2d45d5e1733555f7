#include "flexac/toymodel.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include "flexac/errors.hpp"
#include "flexac/splitmix.hpp"
#include "framing.hpp"

namespace flexac {

ToyModel::ToyModel(Matrix embedding, std::vector<ToyBlock> blocks)
    : embedding_(std::move(embedding)), blocks_(std::move(blocks)) {
    const std::size_t d = embedding_.cols();
    if (embedding_.rows() == 0 || d == 0 || blocks_.empty()) {
        fail(ErrorCode::InvalidArgument, "toy model needs vocab, dim and layers >= 1");
    }
    const std::size_t m = blocks_.front().b1.size();
    if (m == 0) {
        fail(ErrorCode::InvalidArgument, "toy model needs mlp >= 1");
    }
    if (!all_finite(embedding_.values())) {
        fail(ErrorCode::NonFinite, "embedding weights");
    }
    for (const auto& block : blocks_) {
        if (block.w1.rows() != m || block.w1.cols() != d || block.b1.size() != m ||
            block.w2.rows() != d || block.w2.cols() != m) {
            fail(ErrorCode::DimMismatch, "block weight shapes disagree");
        }
        if (!all_finite(block.w1.values()) || !all_finite(block.b1) || !all_finite(block.w2.values())) {
            fail(ErrorCode::NonFinite, "block weights");
        }
    }
}

ToyModel ToyModel::init_seeded(std::uint64_t seed, std::size_t vocab, std::size_t dim,
                               std::size_t layers, std::size_t mlp) {
    if (vocab == 0 || dim == 0 || layers == 0 || mlp == 0) {
        fail(ErrorCode::InvalidArgument, "init_seeded dims must all be >= 1");
    }
    SplitMix64 rng(seed);
    const double scale = 0.5 / std::sqrt(static_cast<double>(dim));
    auto fill = [&](std::span<float> out) {
        for (float& w : out) {
            w = static_cast<float>((2.0 * rng.next_unit() - 1.0) * scale);
        }
    };

    Matrix embedding(vocab, dim);
    fill(embedding.values());
    std::vector<ToyBlock> blocks(layers);
    for (auto& block : blocks) {
        block.w1 = Matrix(mlp, dim);
        block.b1.assign(mlp, 0.0f);
        block.w2 = Matrix(dim, mlp);
        fill(block.w1.values());
        fill(block.b1);
        fill(block.w2.values());
    }
    return ToyModel(std::move(embedding), std::move(blocks));
}

namespace {

void apply_block(const ToyBlock& block, std::span<float> h, std::vector<double>& act) {
    const std::size_t m = block.b1.size();
    const std::size_t d = h.size();
    for (std::size_t i = 0; i < m; ++i) {
        double acc = block.b1[i];
        const auto w = block.w1.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            acc += static_cast<double>(w[j]) * h[j];
        }
        act[i] = std::tanh(acc);
    }
    for (std::size_t j = 0; j < d; ++j) {
        double acc = 0.0;
        const auto w = block.w2.row(j);
        for (std::size_t i = 0; i < m; ++i) {
            acc += static_cast<double>(w[i]) * act[i];
        }
        h[j] = static_cast<float>(static_cast<double>(h[j]) + acc);
    }
}

void apply_inject(const InjectHook& hook, Matrix& state, CalibrationTrace& trace) {
    if (hook.config == nullptr) {
        fail(ErrorCode::InvalidArgument, "inject hook without a control config");
    }
    const ControlConfig& cfg = *hook.config;
    auto pick = [&](const SteeringVectorSet* set, double alpha) -> std::optional<Steer> {
        if (set == nullptr || alpha == 0.0) {
            return std::nullopt;
        }
        const FeatureVector* v = set->find(hook.layer);
        if (v == nullptr) {
            fail(ErrorCode::LayerOutOfRange,
                 "steering set has no vector for layer " + std::to_string(hook.layer));
        }
        if (v->dim() != state.cols()) {
            fail(ErrorCode::DimMismatch, "steering vector dim differs from model dim");
        }
        return Steer{v->values(), alpha};
    };
    const auto gen = pick(hook.gen, cfg.alpha_gen);
    const auto task = pick(hook.task, cfg.alpha_task);
    if (!gen && !task) {
        return;
    }
    for (std::size_t p = 0; p < state.rows(); ++p) {
        auto row = state.row(p);
        ControlResult r = apply_control(row, gen, task, cfg.sic_enabled, cfg.renorm_enabled);
        std::copy(r.value.values().begin(), r.value.values().end(), row.begin());
        for (auto& entry : r.trace) {
            entry.layer = hook.layer;
            entry.position = p;
            trace.push_back(entry);
        }
    }
}

}  // namespace

ForwardResult forward_with_hooks(const ToyModel& model, std::span<const std::uint32_t> tokens,
                                 std::span<const HookSpec> hooks) {
    const std::size_t positions = tokens.size();
    const std::size_t d = model.hidden_dim();
    const std::size_t layers = model.num_layers();
    if (positions == 0) {
        fail(ErrorCode::EmptyInput, "forward pass needs at least one token");
    }

    std::vector<const HookSpec*> by_layer(layers, nullptr);
    for (const HookSpec& hook : hooks) {
        const std::uint32_t layer = std::visit([](const auto& h) { return h.layer; }, hook);
        if (layer >= layers) {
            fail(ErrorCode::HookLayerOutOfRange,
                 "hook layer " + std::to_string(layer) + " >= " + std::to_string(layers));
        }
        if (by_layer[layer] != nullptr) {
            fail(ErrorCode::InvalidArgument, "two hooks on layer " + std::to_string(layer));
        }
        if (const auto* replace = std::get_if<ReplaceHook>(&hook)) {
            if (replace->tensor.rows() != positions) {
                fail(ErrorCode::PositionMismatch, "replace tensor has " +
                                                      std::to_string(replace->tensor.rows()) +
                                                      " positions, input has " + std::to_string(positions));
            }
            if (replace->tensor.cols() != d) {
                fail(ErrorCode::DimMismatch, "replace tensor dim differs from model dim");
            }
        }
        by_layer[layer] = &hook;
    }

    Matrix state(positions, d);
    for (std::size_t p = 0; p < positions; ++p) {
        if (tokens[p] >= model.vocab_size()) {
            fail(ErrorCode::TokenOutOfRange, "token " + std::to_string(tokens[p]) + " >= vocab " +
                                                 std::to_string(model.vocab_size()));
        }
        const auto src = model.embedding().row(tokens[p]);
        std::copy(src.begin(), src.end(), state.row(p).begin());
    }

    ForwardResult result;
    result.captures.reserve(layers);
    std::vector<double> act(model.mlp_dim());
    for (std::size_t l = 0; l < layers; ++l) {
        for (std::size_t p = 0; p < positions; ++p) {
            apply_block(model.blocks()[l], state.row(p), act);
        }
        if (const HookSpec* hook = by_layer[l]) {
            if (const auto* replace = std::get_if<ReplaceHook>(hook)) {
                state = replace->tensor;
            } else {
                apply_inject(std::get<InjectHook>(*hook), state, result.trace);
            }
        }
        result.captures.push_back(state);
    }

    const Matrix& emb = model.embedding();
    result.logits = Matrix(positions, model.vocab_size());
    for (std::size_t p = 0; p < positions; ++p) {
        const auto h = state.row(p);
        for (std::size_t v = 0; v < emb.rows(); ++v) {
            const auto e = emb.row(v);
            double acc = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                acc += static_cast<double>(h[j]) * e[j];
            }
            result.logits.at(p, v) = static_cast<float>(acc);
        }
    }
    return result;
}

ForwardResult forward_capture(const ToyModel& model, std::span<const std::uint32_t> tokens) {
    return forward_with_hooks(model, tokens, {});
}

std::vector<std::uint32_t> generate_greedy(const ToyModel& model, std::span<const std::uint32_t> prompt,
                                           std::size_t steps, std::span<const HookSpec> hooks) {
    std::vector<std::uint32_t> tokens(prompt.begin(), prompt.end());
    for (std::size_t step = 0; step < steps; ++step) {
        const ForwardResult out = forward_with_hooks(model, tokens, hooks);
        const auto last = out.logits.row(out.logits.rows() - 1);
        std::uint32_t best = 0;
        for (std::uint32_t v = 1; v < last.size(); ++v) {
            if (last[v] > last[best]) {
                best = v;
            }
        }
        tokens.push_back(best);
    }
    return tokens;
}

// ---------------------------------------------------------------------------
// TOYM1

std::size_t save_model(const ToyModel& model, std::ostream& sink) {
    detail::ordered_json header;
    header["magic"] = "TOYM";
    header["version"] = 1;
    header["vocab"] = model.vocab_size();
    header["dim"] = model.hidden_dim();
    header["layers"] = model.num_layers();
    header["mlp"] = model.mlp_dim();

    std::vector<float> payload(model.embedding().values().begin(), model.embedding().values().end());
    for (const auto& block : model.blocks()) {
        payload.insert(payload.end(), block.w1.values().begin(), block.w1.values().end());
        payload.insert(payload.end(), block.b1.begin(), block.b1.end());
        payload.insert(payload.end(), block.w2.values().begin(), block.w2.values().end());
    }
    return detail::write_frame(sink, header, payload);
}

ToyModel load_model(std::istream& source) {
    const auto header = detail::read_header(source, "TOYM");
    const std::uint64_t vocab = detail::get_count(header, "vocab");
    const std::uint64_t dim = detail::get_count(header, "dim");
    const std::uint64_t layers = detail::get_count(header, "layers");
    const std::uint64_t mlp = detail::get_count(header, "mlp");
    if (vocab == 0 || dim == 0 || layers == 0 || mlp == 0) {
        fail(ErrorCode::MalformedHeader, "vocab, dim, layers and mlp must be >= 1");
    }
    const std::uint64_t per_layer_a = detail::checked_product({mlp, dim});
    const std::uint64_t per_layer = per_layer_a * 2 + mlp;
    const std::uint64_t total = detail::checked_product({vocab, dim}) + detail::checked_product({layers, per_layer});
    const std::vector<float> payload = detail::read_payload(source, total);

    auto cursor = payload.begin();
    auto take = [&](std::size_t n) {
        std::vector<float> out(cursor, cursor + static_cast<std::ptrdiff_t>(n));
        cursor += static_cast<std::ptrdiff_t>(n);
        return out;
    };
    Matrix embedding(vocab, dim, take(vocab * dim));
    std::vector<ToyBlock> blocks(layers);
    for (auto& block : blocks) {
        block.w1 = Matrix(mlp, dim, take(mlp * dim));
        block.b1 = take(mlp);
        block.w2 = Matrix(dim, mlp, take(dim * mlp));
    }
    return ToyModel(std::move(embedding), std::move(blocks));
}

ToyModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::Io, "cannot open " + path);
    }
    return load_model(in);
}

}  // namespace flexac
