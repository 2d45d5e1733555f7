#include "flexac/metrics.hpp"

#include <string>

#include "flexac/errors.hpp"

namespace flexac {

double vdat_score(const EmbeddingSet& embeds, const VdatConfig& cfg) {
    if (embeds.noun_embeddings.size() < 2) {
        fail(ErrorCode::TooFewNouns, "VDAT needs at least 2 nouns, got " +
                                         std::to_string(embeds.noun_embeddings.size()));
    }
    embeds.validate(1e-3);

    const auto& nouns = embeds.noun_embeddings;
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < nouns.size(); ++i) {
        for (std::size_t j = i + 1; j < nouns.size(); ++j) {
            acc += cosine_distance(nouns[i], nouns[j]);
            ++count;
        }
    }
    if (cfg.include_image_pairs) {
        for (const auto& noun : nouns) {
            acc += cosine_distance(noun, embeds.image_embedding);
            ++count;
        }
    }
    return 100.0 * (acc / static_cast<double>(count));
}

ChairScores chair_scores(std::span<const CaptionAnnotation> annotations) {
    if (annotations.empty()) {
        fail(ErrorCode::EmptyInput, "CHAIR needs at least one caption");
    }
    std::size_t mentioned = 0;
    std::size_t hallucinated = 0;
    std::size_t captions_with_hallucination = 0;
    std::size_t correct = 0;
    std::size_t ground_truth = 0;
    for (const auto& caption : annotations) {
        std::size_t bad = 0;
        for (const auto& object : caption.mentioned) {
            if (caption.ground_truth.count(object) == 0) {
                ++bad;
            } else {
                ++correct;
            }
        }
        mentioned += caption.mentioned.size();
        ground_truth += caption.ground_truth.size();
        hallucinated += bad;
        captions_with_hallucination += bad > 0 ? 1 : 0;
    }
    auto ratio = [](std::size_t num, std::size_t den) {
        return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
    };
    return {ratio(hallucinated, mentioned), ratio(captions_with_hallucination, annotations.size()),
            ratio(correct, ground_truth)};
}

Answer parse_answer(std::string_view text) {
    if (text == "yes") return Answer::yes;
    if (text == "no") return Answer::no;
    fail(ErrorCode::InvalidArgument, "answer must be \"yes\" or \"no\", got \"" + std::string(text) + "\"");
}

BinaryMetrics binary_metrics(std::span<const Answer> predictions, std::span<const Answer> labels) {
    if (predictions.size() != labels.size()) {
        fail(ErrorCode::LengthMismatch, std::to_string(predictions.size()) + " predictions vs " +
                                            std::to_string(labels.size()) + " labels");
    }
    if (predictions.empty()) {
        fail(ErrorCode::EmptyInput, "no predictions");
    }
    BinaryMetrics m;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const bool pred = predictions[i] == Answer::yes;
        const bool truth = labels[i] == Answer::yes;
        if (pred && truth) ++m.true_positive;
        else if (pred) ++m.false_positive;
        else if (truth) ++m.false_negative;
        else ++m.true_negative;
    }
    auto ratio = [](std::size_t num, std::size_t den) {
        return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
    };
    m.accuracy = ratio(m.true_positive + m.true_negative, predictions.size());
    m.precision = ratio(m.true_positive, m.true_positive + m.false_positive);
    m.recall = ratio(m.true_positive, m.true_positive + m.false_negative);
    m.f1 = m.precision + m.recall == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
    return m;
}

}  // namespace flexac
