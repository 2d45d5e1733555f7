#pragma once

#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <string_view>

#include "flexac/actstore.hpp"

namespace flexac {

enum class PairWeighting { uniform };

struct VdatConfig {
    bool include_image_pairs = true;
    PairWeighting pair_weighting = PairWeighting::uniform;
};

/// 100 x mean cosine distance over all unordered noun-noun pairs (i < j, in
/// lexicographic index order), followed by every noun-image pair when
/// enabled. Range [0, 200]. Throws TooFewNouns below two nouns and
/// NotNormalized when any embedding's norm is off by more than 1e-3.
double vdat_score(const EmbeddingSet& embeds, const VdatConfig& cfg = {});

struct CaptionAnnotation {
    std::set<std::string> mentioned;
    std::set<std::string> ground_truth;
};

struct ChairScores {
    double object_ratio = 0.0;   // hallucinated / mentioned objects (reported as CHAIR_S)
    double caption_ratio = 0.0;  // captions with a hallucination / captions (reported as CHAIR_I)
    double recall = 0.0;         // mentioned-and-true / ground-truth objects
};

/// Ratios with an empty denominator are defined as 0. Throws EmptyInput for
/// an empty list.
ChairScores chair_scores(std::span<const CaptionAnnotation> annotations);

enum class Answer { no, yes };

Answer parse_answer(std::string_view text);

struct BinaryMetrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t true_positive = 0;
    std::size_t false_positive = 0;
    std::size_t false_negative = 0;
    std::size_t true_negative = 0;
};

/// "yes" is the positive class. Throws LengthMismatch or EmptyInput.
BinaryMetrics binary_metrics(std::span<const Answer> predictions, std::span<const Answer> labels);

}  // namespace flexac
