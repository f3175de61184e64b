#pragma once

#include "frogid/audio_io.hpp"
#include "frogid/features.hpp"
#include "frogid/gmm.hpp"
#include "frogid/segmentation.hpp"

#include <span>
#include <string>
#include <vector>

namespace frogid {

// Ordered species models; the order defines presence-vector positions.
class SpeciesModelSet {
public:
    // Empty `thresholds` means 0 for every class.
    explicit SpeciesModelSet(std::vector<GmmModel> models, std::vector<double> thresholds = {});

    std::size_t size() const noexcept { return models_.size(); }
    std::size_t dim() const noexcept { return models_.front().dim(); }
    const std::vector<GmmModel>& models() const noexcept { return models_; }
    const std::vector<std::string>& codes() const noexcept { return codes_; }
    const std::vector<double>& thresholds() const noexcept { return thresholds_; }
    const std::string& fingerprint() const noexcept { return models_.front().feature_spec_fingerprint; }
    const GmmScorer& scorer(std::size_t k) const { return scorers_[k]; }

    SpeciesModelSet with_thresholds(std::vector<double> thresholds) const;

private:
    std::vector<GmmModel> models_;
    std::vector<std::string> codes_;
    std::vector<double> thresholds_;
    std::vector<GmmScorer> scorers_;
};

struct Classification {
    std::size_t species_index = 0;
    std::vector<double> per_model_scores;
};

struct DetectionEvent {
    Segment segment;
    std::size_t species_index = 0;
    std::string species_code;
    double score = 0.0;  // log-likelihood ratio against the median alternative
    bool accepted = false;
    std::vector<double> per_model_scores;
};

struct PresenceVector {
    SampleWindow window;
    std::vector<bool> bits;
    std::vector<int> detection_counts;

    friend bool operator==(const PresenceVector&, const PresenceVector&) = default;
};

// Index of the largest score; ties go to the lowest index.
std::size_t argmax_lowest(std::span<const double> scores);

Classification classify_segment(const SpeciesModelSet& set, const FeatureMatrix& features);

// scores[hyp] minus the median of the remaining scores (mean of the two
// middle values when their count is even).
double likelihood_ratio(std::span<const double> scores, std::size_t hyp_index);

// Acceptance uses a closed threshold: score >= threshold.
DetectionEvent detect(const SpeciesModelSet& set, const FeatureMatrix& features);
DetectionEvent make_event(const SpeciesModelSet& set, const Classification& c, const Segment& segment);

// Bits are the indicator of at least one accepted event per class.
PresenceVector presence_from_events(const SampleWindow& window, std::span<const DetectionEvent> events,
                                    std::size_t num_species);

struct ScanConfig {
    SegmenterConfig segmenter;
    FrameConfig frames;
    FilterbankSpec filterbank;
    int num_coeffs = 20;
    int jobs = 1;
};

struct WindowScan {
    PresenceVector presence;
    std::vector<DetectionEvent> events;  // ordered by segment start
    std::size_t segments_found = 0;
    std::size_t segments_skipped = 0;    // shorter than one feature frame
};

// Segments, featurizes from the unfiltered audio and verifies each segment.
// Throws Errc::FingerprintMismatch if the configuration does not produce the
// features the models were trained on.
WindowScan scan_window(const AudioClip& clip, const SampleWindow& window, const SpeciesModelSet& set,
                       const ScanConfig& cfg, int first_window_id = 0);

}  // namespace frogid
