#include "frogid/detector.hpp"

#include "frogid/errors.hpp"
#include "frogid/parallel.hpp"

#include <algorithm>
#include <set>

namespace frogid {

SpeciesModelSet::SpeciesModelSet(std::vector<GmmModel> models, std::vector<double> thresholds)
    : models_(std::move(models)), thresholds_(std::move(thresholds)) {
    if (models_.size() < 2)
        throw Error(Errc::InvalidModel, "a model set needs at least two species for the median alternative");
    std::set<std::string> seen;
    for (const auto& m : models_) {
        m.validate();
        if (m.dim() != models_.front().dim())
            throw Error(Errc::DimensionMismatch, "model '" + m.species_code + "' has a different dimension");
        if (m.feature_spec_fingerprint != models_.front().feature_spec_fingerprint)
            throw Error(Errc::FingerprintMismatch, "model '" + m.species_code + "' was trained on different features");
        if (!seen.insert(m.species_code).second)
            throw Error(Errc::InvalidModel, "duplicate species code '" + m.species_code + "'");
        codes_.push_back(m.species_code);
        scorers_.emplace_back(m);
    }
    if (thresholds_.empty()) thresholds_.assign(models_.size(), 0.0);
    if (thresholds_.size() != models_.size())
        throw Error(Errc::LengthMismatch, "threshold vector has " + std::to_string(thresholds_.size()) +
                                              " entries for " + std::to_string(models_.size()) + " models");
}

SpeciesModelSet SpeciesModelSet::with_thresholds(std::vector<double> thresholds) const {
    return SpeciesModelSet(models_, std::move(thresholds));
}

std::size_t argmax_lowest(std::span<const double> scores) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < scores.size(); ++k)
        if (scores[k] > scores[best]) best = k;
    return best;
}

Classification classify_segment(const SpeciesModelSet& set, const FeatureMatrix& features) {
    if (features.cols() != set.dim())
        throw Error(Errc::DimensionMismatch, "features have " + std::to_string(features.cols()) +
                                                 " coefficients, models expect " + std::to_string(set.dim()));
    Classification c;
    c.per_model_scores.resize(set.size());
    for (std::size_t k = 0; k < set.size(); ++k)
        c.per_model_scores[k] = set.scorer(k).avg_log_likelihood(features.values);
    c.species_index = argmax_lowest(c.per_model_scores);
    return c;
}

double likelihood_ratio(std::span<const double> scores, std::size_t hyp_index) {
    if (scores.size() < 2 || hyp_index >= scores.size())
        throw Error(Errc::InvalidConfig, "likelihood ratio needs at least one alternative model");
    std::vector<double> others;
    others.reserve(scores.size() - 1);
    for (std::size_t k = 0; k < scores.size(); ++k)
        if (k != hyp_index) others.push_back(scores[k]);
    std::sort(others.begin(), others.end());
    const std::size_t n = others.size();
    const double median = n % 2 == 1 ? others[n / 2] : 0.5 * (others[n / 2 - 1] + others[n / 2]);
    return scores[hyp_index] - median;
}

DetectionEvent make_event(const SpeciesModelSet& set, const Classification& c, const Segment& segment) {
    DetectionEvent e;
    e.segment = segment;
    e.species_index = c.species_index;
    e.species_code = set.codes()[c.species_index];
    e.score = likelihood_ratio(c.per_model_scores, c.species_index);
    e.accepted = e.score >= set.thresholds()[c.species_index];
    e.per_model_scores = c.per_model_scores;
    return e;
}

DetectionEvent detect(const SpeciesModelSet& set, const FeatureMatrix& features) {
    return make_event(set, classify_segment(set, features), features.segment_ref);
}

PresenceVector presence_from_events(const SampleWindow& window, std::span<const DetectionEvent> events,
                                    std::size_t num_species) {
    PresenceVector pv;
    pv.window = window;
    pv.bits.assign(num_species, false);
    pv.detection_counts.assign(num_species, 0);
    for (const auto& e : events) {
        if (!e.accepted || e.species_index >= num_species) continue;
        ++pv.detection_counts[e.species_index];
        pv.bits[e.species_index] = true;
    }
    return pv;
}

WindowScan scan_window(const AudioClip& clip, const SampleWindow& window, const SpeciesModelSet& set,
                       const ScanConfig& cfg, int first_window_id) {
    const std::string expected = feature_fingerprint(cfg.frames, cfg.filterbank, cfg.num_coeffs);
    if (expected != set.fingerprint())
        throw Error(Errc::FingerprintMismatch, "configured features (" + expected +
                                                   ") differ from the model set's (" + set.fingerprint() + ")");

    WindowScan result;
    const auto segments = segment_audio(clip, window, cfg.segmenter, first_window_id, cfg.jobs);
    result.segments_found = segments.size();

    // Contiguous chunks, one extractor per chunk.
    const std::size_t chunks = std::max<std::size_t>(1, std::min<std::size_t>(segments.size(),
                                                                               static_cast<std::size_t>(std::max(cfg.jobs, 1)) * 4));
    std::vector<std::vector<DetectionEvent>> per_chunk(chunks);
    std::vector<std::size_t> skipped(chunks, 0);
    parallel_for(segments.empty() ? 0 : chunks, cfg.jobs, [&](std::size_t c) {
        FeatureExtractor extractor(cfg.frames, cfg.filterbank, cfg.num_coeffs, clip.sample_rate);
        const std::size_t lo = segments.size() * c / chunks;
        const std::size_t hi = segments.size() * (c + 1) / chunks;
        for (std::size_t i = lo; i < hi; ++i) {
            if (segments[i].length() < extractor.frame_samples()) {
                ++skipped[c];
                continue;
            }
            per_chunk[c].push_back(detect(set, extractor.extract(clip, segments[i])));
        }
    });
    for (std::size_t c = 0; c < chunks; ++c) {
        result.events.insert(result.events.end(), per_chunk[c].begin(), per_chunk[c].end());
        result.segments_skipped += skipped[c];
    }
    result.presence = presence_from_events(window, result.events, set.size());
    return result;
}

}  // namespace frogid
