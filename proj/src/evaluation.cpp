#include "frogid/evaluation.hpp"

#include "frogid/errors.hpp"
#include "frogid/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace frogid {

std::vector<FoldSplit> kfold_budgeted_split(const std::vector<std::vector<double>>& durations_per_species,
                                            double budget_seconds, int folds, std::uint64_t seed) {
    if (folds < 1) throw Error(Errc::InvalidConfig, "fold count must be >= 1");
    for (std::size_t s = 0; s < durations_per_species.size(); ++s) {
        const auto& d = durations_per_species[s];
        const double total = std::accumulate(d.begin(), d.end(), 0.0);
        if (total <= budget_seconds)
            throw Error(Errc::InsufficientData, "species " + std::to_string(s) + " has " + std::to_string(total) +
                                                    " s of segments, not more than the " +
                                                    std::to_string(budget_seconds) + " s training budget");
    }

    std::vector<FoldSplit> splits;
    for (int f = 0; f < folds; ++f) {
        FoldSplit split;
        split.fold_id = f;
        for (std::size_t s = 0; s < durations_per_species.size(); ++s) {
            const auto& d = durations_per_species[s];
            std::vector<std::size_t> order(d.size());
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(f), s));
            std::shuffle(order.begin(), order.end(), rng);
            std::vector<std::size_t> train, valid;
            double acc = 0.0;
            for (std::size_t idx : order) {
                if (acc < budget_seconds) {
                    train.push_back(idx);
                    acc += d[idx];
                } else {
                    valid.push_back(idx);
                }
            }
            std::sort(train.begin(), train.end());
            std::sort(valid.begin(), valid.end());
            split.training.push_back(std::move(train));
            split.validation.push_back(std::move(valid));
            split.training_seconds.push_back(acc);
        }
        splits.push_back(std::move(split));
    }
    return splits;
}

WerReport weighted_error_rate(const Confusion& confusion) {
    WerReport report;
    for (std::size_t s = 0; s < confusion.size(); ++s) {
        const auto& row = confusion[s];
        const std::int64_t total = std::accumulate(row.begin(), row.end(), std::int64_t{0});
        if (total <= 0) throw Error(Errc::EmptyRow, "species " + std::to_string(s) + " has no validation items");
        const std::int64_t correct = s < row.size() ? row[s] : 0;
        report.per_species_error.push_back(1.0 - static_cast<double>(correct) / static_cast<double>(total));
    }
    if (report.per_species_error.empty()) throw Error(Errc::EmptyRow, "empty confusion matrix");
    report.weighted_error_rate =
        std::accumulate(report.per_species_error.begin(), report.per_species_error.end(), 0.0) /
        static_cast<double>(report.per_species_error.size());
    return report;
}

RocCurve roc_one_vs_all(std::span<const ScoredEvent> events, int class_index) {
    std::vector<double> pos, neg;
    for (const auto& e : events) {
        if (e.hyp_class != class_index) continue;
        (e.true_class == class_index ? pos : neg).push_back(e.score);
    }
    if (pos.empty() || neg.empty())
        throw Error(Errc::DegenerateClass, "class " + std::to_string(class_index) + " has " +
                                               std::to_string(pos.size()) + " positive and " +
                                               std::to_string(neg.size()) + " negative scored events");
    std::sort(pos.begin(), pos.end(), std::greater<>());
    std::sort(neg.begin(), neg.end(), std::greater<>());
    std::vector<double> thresholds(pos);
    thresholds.insert(thresholds.end(), neg.begin(), neg.end());
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

    const auto P = static_cast<double>(pos.size());
    const auto N = static_cast<double>(neg.size());
    RocCurve curve;
    curve.class_index = class_index;
    curve.points.push_back({std::nextafter(thresholds.front(), std::numeric_limits<double>::infinity()), 0.0, 0.0});
    std::size_t ip = 0, in = 0;
    for (double t : thresholds) {
        while (ip < pos.size() && pos[ip] >= t) ++ip;
        while (in < neg.size() && neg[in] >= t) ++in;
        curve.points.push_back({t, static_cast<double>(ip) / P, static_cast<double>(in) / N});
    }
    curve.points.push_back({std::nextafter(thresholds.back(), -std::numeric_limits<double>::infinity()), 1.0, 1.0});

    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        const auto& a = curve.points[i - 1];
        const auto& b = curve.points[i];
        curve.auc += (b.fpr - a.fpr) * 0.5 * (a.tpr + b.tpr);
    }
    return curve;
}

RocPoint pick_operating_point(const RocCurve& curve, double max_fpr) {
    if (curve.points.empty()) throw Error(Errc::DegenerateClass, "empty ROC curve");
    RocPoint best = curve.points.front();
    bool found = false;
    for (const auto& p : curve.points) {
        if (p.fpr > max_fpr) continue;
        if (!found || p.tpr > best.tpr || (p.tpr == best.tpr && p.threshold > best.threshold)) {
            best = p;
            found = true;
        }
    }
    return best;
}

BinaryMetrics binary_metrics(std::int64_t tp, std::int64_t fp, std::int64_t tn, std::int64_t fn) {
    BinaryMetrics m{tp, fp, tn, fn, {}, {}, {}, {}, {}, {}};
    auto ratio = [](double num, double den) -> std::optional<double> {
        if (den == 0.0) return std::nullopt;
        return num / den;
    };
    const auto TP = static_cast<double>(tp), FP = static_cast<double>(fp);
    const auto TN = static_cast<double>(tn), FN = static_cast<double>(fn);
    m.recall = ratio(TP, TP + FN);
    m.precision = ratio(TP, TP + FP);
    m.specificity = ratio(TN, TN + FP);
    m.accuracy = ratio(TP + TN, TP + TN + FP + FN);
    if (m.recall && m.precision && (*m.recall + *m.precision) > 0.0)
        m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
    const double den = (TP + FP) * (TP + FN) * (TN + FP) * (TN + FN);
    if (den > 0.0) m.mcc = (TP * TN - FP * FN) / std::sqrt(den);
    return m;
}

BinaryMetrics binary_metrics(std::span<const std::vector<bool>> predicted, std::span<const std::vector<bool>> truth) {
    if (predicted.size() != truth.size())
        throw Error(Errc::LengthMismatch, "predicted and truth hold different numbers of vectors");
    std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        if (predicted[i].size() != truth[i].size())
            throw Error(Errc::LengthMismatch, "vector " + std::to_string(i) + " lengths differ");
        for (std::size_t k = 0; k < truth[i].size(); ++k) {
            const bool p = predicted[i][k];
            const bool t = truth[i][k];
            if (p && t) ++tp;
            else if (p && !t) ++fp;
            else if (!p && t) ++fn;
            else ++tn;
        }
    }
    return binary_metrics(tp, fp, tn, fn);
}

BinaryMetrics binary_metrics(std::span<const PresenceVector> predicted, std::span<const PresenceVector> truth) {
    std::vector<std::vector<bool>> p, t;
    for (const auto& v : predicted) p.push_back(v.bits);
    for (const auto& v : truth) t.push_back(v.bits);
    return binary_metrics(std::span<const std::vector<bool>>(p), std::span<const std::vector<bool>>(t));
}

WerSummary summarize(std::span<const double> values) {
    WerSummary s;
    if (values.empty()) return s;
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    s.min = v.front();
    s.max = v.back();
    const std::size_t n = v.size();
    s.median = n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    return s;
}

Matrix stack_frames(std::span<const FeatureMatrix> segments, std::span<const std::size_t> indices) {
    std::size_t rows = 0, cols = 0;
    for (std::size_t i : indices) {
        rows += segments[i].rows();
        cols = segments[i].cols();
    }
    Matrix out(rows, cols);
    std::size_t r = 0;
    for (std::size_t i : indices) {
        const auto& src = segments[i].values.data();
        std::copy(src.begin(), src.end(), out.data().begin() + static_cast<std::ptrdiff_t>(r * cols));
        r += segments[i].rows();
    }
    return out;
}

CrossValidationResult cross_validate(const LabeledCorpus& corpus, const CrossValidationConfig& cfg) {
    const std::size_t S = corpus.segments.size();
    if (S < 2) throw Error(Errc::InsufficientData, "cross-validation needs at least two species");
    const auto splits = kfold_budgeted_split(corpus.durations, cfg.budget_seconds, cfg.folds, cfg.seed);

    CrossValidationResult result;
    result.folds.resize(splits.size());
    parallel_for(splits.size(), cfg.jobs, [&](std::size_t f) {
        const auto& split = splits[f];
        std::vector<GmmModel> models;
        for (std::size_t s = 0; s < S; ++s) {
            TrainingConfig tc = cfg.training;
            tc.rng_seed = derive_seed(cfg.seed ^ 0x5eed, f, s);
            GmmModel m = em_fit(stack_frames(corpus.segments[s], split.training[s]), tc);
            m.species_code = corpus.codes[s];
            m.feature_spec_fingerprint = corpus.fingerprint;
            m.training_seconds = split.training_seconds[s];
            models.push_back(std::move(m));
        }
        const SpeciesModelSet set(std::move(models));

        FoldResult fr;
        fr.fold_id = split.fold_id;
        fr.training_seconds = split.training_seconds;
        fr.confusion.assign(S, std::vector<std::int64_t>(S, 0));
        for (std::size_t s = 0; s < S; ++s) {
            for (std::size_t idx : split.validation[s]) {
                const auto c = classify_segment(set, corpus.segments[s][idx]);
                ++fr.confusion[s][c.species_index];
                fr.scores.push_back({likelihood_ratio(c.per_model_scores, c.species_index), static_cast<int>(s),
                                     static_cast<int>(c.species_index)});
            }
        }
        fr.wer = weighted_error_rate(fr.confusion);
        result.folds[f] = std::move(fr);
    });

    std::vector<double> wers;
    for (const auto& f : result.folds) wers.push_back(f.wer.weighted_error_rate);
    result.wer = summarize(wers);
    return result;
}

}  // namespace frogid
