#pragma once

#include "frogid/detector.hpp"
#include "frogid/features.hpp"
#include "frogid/gmm.hpp"
#include "frogid/random.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace frogid {

struct FoldSplit {
    int fold_id = 0;
    // Indices into each species' segment list.
    std::vector<std::vector<std::size_t>> training;
    std::vector<std::vector<std::size_t>> validation;
    std::vector<double> training_seconds;
};

// Per fold and species: shuffle segments with a fold-specific seed, take
// whole segments until the budget is reached, leave the rest for validation.
std::vector<FoldSplit> kfold_budgeted_split(const std::vector<std::vector<double>>& durations_per_species,
                                            double budget_seconds, int folds, std::uint64_t seed);

// confusion[true][predicted]
using Confusion = std::vector<std::vector<std::int64_t>>;

struct WerReport {
    std::vector<double> per_species_error;
    double weighted_error_rate = 0.0;
};

WerReport weighted_error_rate(const Confusion& confusion);

struct ScoredEvent {
    double score = 0.0;   // likelihood ratio
    int true_class = -1;  // -1: none of the modelled species
    int hyp_class = 0;
};

struct RocPoint {
    double threshold = 0.0;
    double tpr = 0.0;
    double fpr = 0.0;
};

struct RocCurve {
    int class_index = 0;
    std::vector<RocPoint> points;  // threshold descending
    double auc = 0.0;
};

// One-vs-all curve over the events hypothesized as `class_index`: positives
// are those whose true class matches, negatives the rest. Every distinct
// score is a threshold; acceptance is score >= threshold.
RocCurve roc_one_vs_all(std::span<const ScoredEvent> events, int class_index);

// Highest-TPR point with FPR <= max_fpr; ties go to the larger threshold.
RocPoint pick_operating_point(const RocCurve& curve, double max_fpr);

struct BinaryMetrics {
    std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
    // Absent when the denominator is zero.
    std::optional<double> recall, precision, f1, mcc, specificity, accuracy;
};

BinaryMetrics binary_metrics(std::int64_t tp, std::int64_t fp, std::int64_t tn, std::int64_t fn);
// Flattens every (window x species) decision.
BinaryMetrics binary_metrics(std::span<const std::vector<bool>> predicted, std::span<const std::vector<bool>> truth);
BinaryMetrics binary_metrics(std::span<const PresenceVector> predicted, std::span<const PresenceVector> truth);

// Features of labelled segments, grouped by species in manifest order.
struct LabeledCorpus {
    std::vector<std::string> codes;
    std::vector<std::vector<FeatureMatrix>> segments;
    std::vector<std::vector<double>> durations;  // seconds, parallel to segments
    std::string fingerprint;
};

struct CrossValidationConfig {
    double budget_seconds = 12.0;
    int folds = 10;
    TrainingConfig training;
    std::uint64_t seed = 0;
    int jobs = 1;
};

struct FoldResult {
    int fold_id = 0;
    Confusion confusion;
    WerReport wer;
    std::vector<ScoredEvent> scores;
    std::vector<double> training_seconds;
};

struct WerSummary {
    double mean = 0.0, median = 0.0, min = 0.0, max = 0.0;
};

struct CrossValidationResult {
    std::vector<FoldResult> folds;
    WerSummary wer;
};

WerSummary summarize(std::span<const double> values);

// Concatenates the frames of the chosen segments.
Matrix stack_frames(std::span<const FeatureMatrix> segments, std::span<const std::size_t> indices);

// Trains one model per species on each fold's budgeted training segments and
// classifies the validation segments.
CrossValidationResult cross_validate(const LabeledCorpus& corpus, const CrossValidationConfig& cfg);

}  // namespace frogid
