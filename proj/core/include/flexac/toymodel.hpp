#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "flexac/actstore.hpp"
#include "flexac/control.hpp"
#include "flexac/numlib.hpp"

namespace flexac {

struct ToyBlock {
    Matrix w1;               // mlp x dim
    std::vector<float> b1;   // mlp
    Matrix w2;               // dim x mlp

    friend bool operator==(const ToyBlock&, const ToyBlock&) = default;
};

/// Residual-stream toy language model with MLP-only blocks and a tied
/// unembedding. Each block maps every position independently:
///   h <- h + W2 * tanh(W1 * h + b1)
class ToyModel {
public:
    ToyModel(Matrix embedding, std::vector<ToyBlock> blocks);

    /// Weights are uniform(-0.5/sqrt(dim), 0.5/sqrt(dim)) drawn from one
    /// SplitMix64(seed) stream, in this order: embedding (row-major), then per
    /// layer W1 (row-major), b1, W2 (row-major). A draw u in [0,1) maps to
    /// (2u - 1) * scale, rounded to float.
    static ToyModel init_seeded(std::uint64_t seed, std::size_t vocab, std::size_t dim,
                                std::size_t layers, std::size_t mlp);

    std::size_t vocab_size() const noexcept { return embedding_.rows(); }
    std::size_t hidden_dim() const noexcept { return embedding_.cols(); }
    std::size_t num_layers() const noexcept { return blocks_.size(); }
    std::size_t mlp_dim() const noexcept { return blocks_.front().b1.size(); }

    const Matrix& embedding() const noexcept { return embedding_; }
    const std::vector<ToyBlock>& blocks() const noexcept { return blocks_; }
    std::vector<ToyBlock>& mutable_blocks() noexcept { return blocks_; }

    friend bool operator==(const ToyModel&, const ToyModel&) = default;

private:
    Matrix embedding_;
    std::vector<ToyBlock> blocks_;
};

/// Substitute the whole (positions x dim) state after block `layer`.
struct ReplaceHook {
    std::uint32_t layer = 0;
    Matrix tensor;
};

/// Apply apply_control() to every position after block `layer`. The pointed-to
/// objects must outlive the forward pass; either vector set may be null.
struct InjectHook {
    std::uint32_t layer = 0;
    const SteeringVectorSet* gen = nullptr;
    const SteeringVectorSet* task = nullptr;
    const ControlConfig* config = nullptr;
};

using HookSpec = std::variant<ReplaceHook, InjectHook>;

struct ForwardResult {
    Matrix logits;                 // positions x vocab
    std::vector<Matrix> captures;  // num_layers entries of positions x dim, post-hook
    CalibrationTrace trace;        // entries from inject hooks
};

ForwardResult forward_capture(const ToyModel& model, std::span<const std::uint32_t> tokens);

/// Hooks fire after the block's residual update; later blocks see the edited
/// state. Throws TokenOutOfRange, HookLayerOutOfRange, PositionMismatch,
/// InvalidArgument (two hooks on one layer), DimMismatch.
ForwardResult forward_with_hooks(const ToyModel& model, std::span<const std::uint32_t> tokens,
                                 std::span<const HookSpec> hooks);

/// Appends argmax tokens (lowest index wins ties), re-running the hooked
/// forward pass over the whole sequence each step.
std::vector<std::uint32_t> generate_greedy(const ToyModel& model, std::span<const std::uint32_t> prompt,
                                           std::size_t steps, std::span<const HookSpec> hooks);

std::size_t save_model(const ToyModel& model, std::ostream& sink);
ToyModel load_model(std::istream& source);
ToyModel load_model(const std::string& path);

}  // namespace flexac
