#include "flexac/actstore.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "flexac/errors.hpp"
#include "framing.hpp"

namespace flexac {

using detail::ordered_json;
using nlohmann::json;

void ActivationSet::validate() const {
    if (num_layers == 0 || hidden_dim == 0) {
        fail(ErrorCode::InvalidArgument, "activation set needs num_layers >= 1 and hidden_dim >= 1");
    }
    if (labels.size() != num_samples || pair_ids.size() != num_samples) {
        fail(ErrorCode::LengthMismatch, "labels/pair_ids length differs from num_samples");
    }
    if (data.size() != num_samples * num_layers * hidden_dim) {
        fail(ErrorCode::DimMismatch, "data length differs from num_samples * num_layers * hidden_dim");
    }
    for (std::uint8_t label : labels) {
        if (label > 1) {
            fail(ErrorCode::InvalidArgument, "label " + std::to_string(label) + " is not 0 or 1");
        }
    }
    if (!all_finite(data)) {
        fail(ErrorCode::NonFinite, "activation data contains NaN or Inf");
    }
}

std::vector<PairRecord> pair_records(const ActivationSet& set) {
    struct Slots {
        std::optional<std::size_t> grounded;
        std::optional<std::size_t> associative;
        bool duplicate = false;
    };
    std::map<std::int64_t, Slots> by_id;
    for (std::size_t s = 0; s < set.num_samples; ++s) {
        Slots& slots = by_id[set.pair_ids[s]];
        auto& slot = set.labels[s] == 0 ? slots.grounded : slots.associative;
        if (slot) {
            slots.duplicate = true;
        }
        slot = s;
    }
    std::vector<PairRecord> out;
    out.reserve(by_id.size());
    for (const auto& [id, slots] : by_id) {
        if (slots.duplicate || !slots.grounded || !slots.associative) {
            fail(ErrorCode::UnpairedSample,
                 "pair_id " + std::to_string(id) + " does not have exactly one sample per label");
        }
        out.push_back({id, *slots.grounded, *slots.associative});
    }
    return out;
}

std::string_view to_string(VectorKind kind) noexcept {
    switch (kind) {
        case VectorKind::general: return "general";
        case VectorKind::task: return "task";
        case VectorKind::random: return "random";
    }
    return "general";
}

VectorKind parse_vector_kind(std::string_view text) {
    if (text == "general") return VectorKind::general;
    if (text == "task") return VectorKind::task;
    if (text == "random") return VectorKind::random;
    fail(ErrorCode::InvalidArgument, "unknown vector kind \"" + std::string(text) + "\"");
}

const FeatureVector* SteeringVectorSet::find(std::uint32_t layer) const noexcept {
    const auto it = std::lower_bound(layer_indices.begin(), layer_indices.end(), layer);
    if (it == layer_indices.end() || *it != layer) {
        return nullptr;
    }
    return &vectors[static_cast<std::size_t>(it - layer_indices.begin())];
}

void SteeringVectorSet::validate() const {
    if (hidden_dim == 0) {
        fail(ErrorCode::InvalidArgument, "steering vectors need hidden_dim >= 1");
    }
    if (vectors.size() != layer_indices.size()) {
        fail(ErrorCode::LengthMismatch, "one vector per layer index required");
    }
    for (std::size_t i = 1; i < layer_indices.size(); ++i) {
        if (layer_indices[i] <= layer_indices[i - 1]) {
            fail(ErrorCode::InvalidArgument, "layer_indices must be strictly increasing");
        }
    }
    for (const auto& v : vectors) {
        if (v.dim() != hidden_dim) {
            fail(ErrorCode::DimMismatch, "steering vector dim differs from hidden_dim");
        }
        if (l2_norm(v) == 0.0) {
            fail(ErrorCode::ZeroSteeringVector, "steering vectors must be nonzero");
        }
    }
}

void EmbeddingSet::validate(double tolerance) const {
    if (noun_texts.size() != noun_embeddings.size()) {
        fail(ErrorCode::LengthMismatch, "noun_texts and noun_embeddings differ in length");
    }
    auto check = [&](const FeatureVector& v, const std::string& what) {
        if (v.dim() != dim()) {
            fail(ErrorCode::DimMismatch, what + " dim differs from image embedding");
        }
        const double norm = l2_norm(v);
        if (std::abs(norm - 1.0) > tolerance) {
            fail(ErrorCode::NotNormalized, what + " has norm " + std::to_string(norm));
        }
    };
    check(image_embedding, "image embedding");
    for (std::size_t i = 0; i < noun_embeddings.size(); ++i) {
        check(noun_embeddings[i], "noun embedding " + std::to_string(i));
    }
}

// ---------------------------------------------------------------------------
// ACTV1

std::size_t write_activations(const ActivationSet& set, std::ostream& sink) {
    set.validate();
    ordered_json header;
    header["magic"] = "ACTV";
    header["version"] = 1;
    header["num_samples"] = set.num_samples;
    header["num_layers"] = set.num_layers;
    header["hidden_dim"] = set.hidden_dim;
    header["dtype"] = "f32le";
    header["labels"] = set.labels;
    header["pair_ids"] = set.pair_ids;
    header["task_tag"] = set.task_tag ? ordered_json(*set.task_tag) : ordered_json(nullptr);
    return detail::write_frame(sink, header, set.data);
}

ActivationSet read_activations(std::istream& source) {
    const json header = detail::read_header(source, "ACTV");
    ActivationSet set;
    set.num_samples = detail::get_count(header, "num_samples");
    set.num_layers = detail::get_count(header, "num_layers");
    set.hidden_dim = detail::get_count(header, "hidden_dim");
    if (detail::get_string(header, "dtype") != "f32le") {
        fail(ErrorCode::MalformedHeader, "dtype must be \"f32le\"");
    }
    if (set.num_layers == 0 || set.hidden_dim == 0) {
        fail(ErrorCode::MalformedHeader, "num_layers and hidden_dim must be >= 1");
    }
    const auto labels = header.find("labels");
    const auto pairs = header.find("pair_ids");
    if (labels == header.end() || !labels->is_array() || labels->size() != set.num_samples ||
        pairs == header.end() || !pairs->is_array() || pairs->size() != set.num_samples) {
        fail(ErrorCode::MalformedHeader, "labels and pair_ids must be arrays of length num_samples");
    }
    set.labels.reserve(set.num_samples);
    for (const auto& l : *labels) {
        if (!l.is_number_unsigned() || l.get<std::uint64_t>() > 1) {
            fail(ErrorCode::MalformedHeader, "labels must be 0 or 1");
        }
        set.labels.push_back(static_cast<std::uint8_t>(l.get<std::uint64_t>()));
    }
    set.pair_ids.reserve(set.num_samples);
    for (const auto& p : *pairs) {
        if (!p.is_number_integer()) {
            fail(ErrorCode::MalformedHeader, "pair_ids must be integers");
        }
        set.pair_ids.push_back(p.get<std::int64_t>());
    }
    const auto tag = header.find("task_tag");
    if (tag != header.end() && !tag->is_null()) {
        if (!tag->is_string()) {
            fail(ErrorCode::MalformedHeader, "task_tag must be a string or null");
        }
        set.task_tag = tag->get<std::string>();
    }
    const std::uint64_t count = detail::checked_product({set.num_samples, set.num_layers, set.hidden_dim});
    set.data = detail::read_payload(source, count);
    return set;
}

// ---------------------------------------------------------------------------
// STRV1

namespace {

template <typename T>
ordered_json optional_json(const std::optional<T>& v) {
    return v ? ordered_json(*v) : ordered_json(nullptr);
}

}  // namespace

std::size_t write_vectors(const SteeringVectorSet& set, std::ostream& sink) {
    set.validate();
    ordered_json meta;
    meta["K"] = optional_json(set.meta.k);
    meta["source_digest"] = set.meta.source_digest;
    meta["seed"] = optional_json(set.meta.seed);
    meta["task_tag"] = optional_json(set.meta.task_tag);
    meta["target_norm"] = optional_json(set.meta.target_norm);

    ordered_json header;
    header["magic"] = "STRV";
    header["version"] = 1;
    header["kind"] = to_string(set.kind);
    header["layer_indices"] = set.layer_indices;
    header["hidden_dim"] = set.hidden_dim;
    header["meta"] = meta;

    std::vector<float> payload;
    payload.reserve(set.vectors.size() * set.hidden_dim);
    for (const auto& v : set.vectors) {
        payload.insert(payload.end(), v.values().begin(), v.values().end());
    }
    return detail::write_frame(sink, header, payload);
}

SteeringVectorSet read_vectors(std::istream& source) {
    const json header = detail::read_header(source, "STRV");
    SteeringVectorSet set;
    const std::string kind = detail::get_string(header, "kind");
    if (kind != "general" && kind != "task" && kind != "random") {
        fail(ErrorCode::MalformedHeader, "unknown kind \"" + kind + "\"");
    }
    set.kind = parse_vector_kind(kind);
    set.hidden_dim = detail::get_count(header, "hidden_dim");
    if (set.hidden_dim == 0) {
        fail(ErrorCode::MalformedHeader, "hidden_dim must be >= 1");
    }
    const auto layers = header.find("layer_indices");
    if (layers == header.end() || !layers->is_array()) {
        fail(ErrorCode::MalformedHeader, "layer_indices must be an array");
    }
    for (const auto& l : *layers) {
        if (!l.is_number_unsigned() || l.get<std::uint64_t>() > UINT32_MAX) {
            fail(ErrorCode::MalformedHeader, "layer_indices must be non-negative integers");
        }
        const auto layer = static_cast<std::uint32_t>(l.get<std::uint64_t>());
        if (!set.layer_indices.empty() && layer <= set.layer_indices.back()) {
            fail(ErrorCode::MalformedHeader, "layer_indices must be strictly increasing");
        }
        set.layer_indices.push_back(layer);
    }

    const auto meta = header.find("meta");
    if (meta == header.end() || !meta->is_object()) {
        fail(ErrorCode::MalformedHeader, "meta must be an object");
    }
    auto field = [&](const char* key) -> const json* {
        const auto it = meta->find(key);
        return it == meta->end() || it->is_null() ? nullptr : &*it;
    };
    if (const json* k = field("K")) {
        if (!k->is_number_unsigned()) fail(ErrorCode::MalformedHeader, "meta.K must be an integer");
        set.meta.k = k->get<std::uint64_t>();
    }
    if (const json* d = field("source_digest")) {
        if (!d->is_string()) fail(ErrorCode::MalformedHeader, "meta.source_digest must be a string");
        set.meta.source_digest = d->get<std::string>();
    }
    if (const json* s = field("seed")) {
        if (!s->is_number_unsigned()) fail(ErrorCode::MalformedHeader, "meta.seed must be an integer");
        set.meta.seed = s->get<std::uint64_t>();
    }
    if (const json* t = field("task_tag")) {
        if (!t->is_string()) fail(ErrorCode::MalformedHeader, "meta.task_tag must be a string");
        set.meta.task_tag = t->get<std::string>();
    }
    if (const json* n = field("target_norm")) {
        if (!n->is_number()) fail(ErrorCode::MalformedHeader, "meta.target_norm must be a number");
        set.meta.target_norm = n->get<double>();
    }

    const std::uint64_t count = detail::checked_product({set.layer_indices.size(), set.hidden_dim});
    std::vector<float> payload = detail::read_payload(source, count);
    set.vectors.reserve(set.layer_indices.size());
    for (std::size_t i = 0; i < set.layer_indices.size(); ++i) {
        const auto first = payload.begin() + static_cast<std::ptrdiff_t>(i * set.hidden_dim);
        set.vectors.emplace_back(std::vector<float>(first, first + static_cast<std::ptrdiff_t>(set.hidden_dim)));
    }
    set.validate();
    return set;
}

// ---------------------------------------------------------------------------
// EMBV1

std::size_t write_embeddings(const EmbeddingSet& set, std::ostream& sink) {
    set.validate();
    ordered_json header;
    header["magic"] = "EMBV";
    header["version"] = 1;
    header["dim"] = set.dim();
    header["num_nouns"] = set.noun_embeddings.size();
    header["noun_texts"] = set.noun_texts;

    std::vector<float> payload(set.image_embedding.values().begin(), set.image_embedding.values().end());
    for (const auto& n : set.noun_embeddings) {
        payload.insert(payload.end(), n.values().begin(), n.values().end());
    }
    return detail::write_frame(sink, header, payload);
}

EmbeddingSet read_embeddings(std::istream& source) {
    const json header = detail::read_header(source, "EMBV");
    const std::uint64_t dim = detail::get_count(header, "dim");
    const std::uint64_t num_nouns = detail::get_count(header, "num_nouns");
    if (dim == 0) {
        fail(ErrorCode::MalformedHeader, "dim must be >= 1");
    }
    const auto texts = header.find("noun_texts");
    if (texts == header.end() || !texts->is_array() || texts->size() != num_nouns) {
        fail(ErrorCode::MalformedHeader, "noun_texts must be an array of length num_nouns");
    }
    std::vector<std::string> noun_texts;
    for (const auto& t : *texts) {
        if (!t.is_string()) fail(ErrorCode::MalformedHeader, "noun_texts entries must be strings");
        noun_texts.push_back(t.get<std::string>());
    }

    const std::uint64_t rows = num_nouns + 1;
    if (rows == 0) {
        fail(ErrorCode::TruncatedPayload, "declared payload size overflows");
    }
    std::vector<float> payload = detail::read_payload(source, detail::checked_product({rows, dim}));
    auto slice = [&](std::size_t r) {
        const auto first = payload.begin() + static_cast<std::ptrdiff_t>(r * dim);
        return FeatureVector(std::vector<float>(first, first + static_cast<std::ptrdiff_t>(dim)));
    };
    EmbeddingSet set{slice(0), {}, std::move(noun_texts)};
    set.noun_embeddings.reserve(num_nouns);
    for (std::size_t r = 1; r < rows; ++r) {
        set.noun_embeddings.push_back(slice(r));
    }
    set.validate();
    return set;
}

// ---------------------------------------------------------------------------

std::string activation_digest(const ActivationSet& set) {
    std::ostringstream encoded;
    write_activations(set, encoded);
    std::uint64_t hash = 0xCBF29CE484222325ULL;
    for (unsigned char c : encoded.str()) {
        hash ^= c;
        hash *= 0x100000001B3ULL;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

namespace {

std::ifstream open_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::Io, "cannot open " + path);
    }
    return in;
}

}  // namespace

ActivationSet load_activations(const std::string& path) {
    auto in = open_binary(path);
    return read_activations(in);
}

SteeringVectorSet load_vectors(const std::string& path) {
    auto in = open_binary(path);
    return read_vectors(in);
}

EmbeddingSet load_embeddings(const std::string& path) {
    auto in = open_binary(path);
    return read_embeddings(in);
}

}  // namespace flexac
