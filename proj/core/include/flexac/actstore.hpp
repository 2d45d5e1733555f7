#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "flexac/numlib.hpp"

namespace flexac {

enum class Label : std::uint8_t { grounded = 0, associative = 1 };

/// Per-sample, per-layer hidden states. `data` is sample-major, layer-major,
/// dim-minor: element (s, l, j) lives at (s * num_layers + l) * hidden_dim + j.
struct ActivationSet {
    std::size_t num_samples = 0;
    std::size_t num_layers = 0;
    std::size_t hidden_dim = 0;
    std::vector<std::uint8_t> labels;
    std::vector<std::int64_t> pair_ids;
    std::optional<std::string> task_tag;
    std::vector<float> data;

    std::span<const float> vector(std::size_t sample, std::size_t layer) const {
        return {data.data() + (sample * num_layers + layer) * hidden_dim, hidden_dim};
    }
    std::span<float> vector(std::size_t sample, std::size_t layer) {
        return {data.data() + (sample * num_layers + layer) * hidden_dim, hidden_dim};
    }

    /// Shape, label range and finiteness. Pairing is checked by pair_records().
    void validate() const;
};

struct PairRecord {
    std::int64_t pair_id;
    std::size_t grounded;     // sample index with label 0
    std::size_t associative;  // sample index with label 1
};

/// One record per pair_id, ascending. Throws UnpairedSample when a pair_id
/// does not carry exactly one grounded and one associative sample.
std::vector<PairRecord> pair_records(const ActivationSet& set);

enum class VectorKind { general, task, random };

std::string_view to_string(VectorKind kind) noexcept;
VectorKind parse_vector_kind(std::string_view text);

struct SteeringMeta {
    std::optional<std::uint64_t> k;
    std::string source_digest;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> task_tag;
    std::optional<double> target_norm;

    friend bool operator==(const SteeringMeta&, const SteeringMeta&) = default;
};

struct SteeringVectorSet {
    VectorKind kind = VectorKind::general;
    std::vector<std::uint32_t> layer_indices;  // strictly increasing
    std::size_t hidden_dim = 0;
    std::vector<FeatureVector> vectors;        // parallel to layer_indices
    SteeringMeta meta;

    /// nullptr when the set carries no vector for `layer`.
    const FeatureVector* find(std::uint32_t layer) const noexcept;

    void validate() const;
};

struct EmbeddingSet {
    FeatureVector image_embedding;
    std::vector<FeatureVector> noun_embeddings;
    std::vector<std::string> noun_texts;

    std::size_t dim() const noexcept { return image_embedding.dim(); }

    /// Shared dim, text count, and unit norm within `tolerance`.
    void validate(double tolerance = 1e-3) const;
};

/// FNV-1a 64 over the canonical ACTV1 encoding, formatted "fnv1a64:<16 hex>".
std::string activation_digest(const ActivationSet& set);

// ACTV1 / STRV1 / EMBV1: one JSON header line terminated by '\n', followed by
// the little-endian float32 payload. Writers return the number of bytes
// written. Readers reject anything that is not exactly header + promised
// payload, and never allocate beyond the payload actually present.

std::size_t write_activations(const ActivationSet& set, std::ostream& sink);
ActivationSet read_activations(std::istream& source);

std::size_t write_vectors(const SteeringVectorSet& set, std::ostream& sink);
SteeringVectorSet read_vectors(std::istream& source);

std::size_t write_embeddings(const EmbeddingSet& set, std::ostream& sink);
EmbeddingSet read_embeddings(std::istream& source);

// Path conveniences; readers throw Io when the file cannot be opened.
ActivationSet load_activations(const std::string& path);
SteeringVectorSet load_vectors(const std::string& path);
EmbeddingSet load_embeddings(const std::string& path);

}  // namespace flexac
