#pragma once

#include "frogid/audio_io.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace frogid {

struct SegmenterConfig {
    double band_low = 430.0;         // Hz
    double band_high = 7500.0;       // Hz
    double analysis_window = 30.0;   // seconds
    double ste_frame = 0.010;        // seconds
    int ma_length = 12;              // frames
    double threshold_divisor = 3.0;  // C
    int consecutive_frames = 3;
    int fir_taps = 513;
    // Lower bound on the threshold offset above the window mean, in dB.
    // Stationary noise alone never clears it, so noise-only windows yield no
    // segments.
    double min_threshold_db = 3.0;
    // Trim detected endpoints to the first/last unsmoothed frame above the
    // threshold level, removing the smearing of the moving average.
    bool refine_endpoints = true;

    // Throws Errc::InvalidConfig or Errc::InvalidBand.
    void validate(int sample_rate) const;

    friend bool operator==(const SegmenterConfig&, const SegmenterConfig&) = default;
};

// Per-frame energies of non-overlapping frames starting at `origin`.
struct SteSequence {
    std::vector<double> values;
    double frame_duration = 0.0;   // seconds
    std::size_t frame_samples = 0; // N
    std::size_t origin = 0;        // absolute sample index of frame 0
};

struct Segment {
    std::size_t start = 0;  // absolute sample index, inclusive
    std::size_t end = 0;    // exclusive
    int window_id = 0;

    std::size_t length() const noexcept { return end - start; }
    friend bool operator==(const Segment&, const Segment&) = default;
};

std::vector<double> bandpass_fir(std::span<const double> samples, int sample_rate, double band_low,
                                double band_high, int taps);
AudioClip bandpass_fir(const AudioClip& clip, double band_low, double band_high, int taps);

SteSequence short_time_energy(std::span<const double> samples, int sample_rate, double frame,
                              std::size_t origin = 0);
SteSequence short_time_energy(const AudioClip& clip, double frame);

SteSequence moving_average(const SteSequence& ste, int length);
SteSequence to_db(const SteSequence& ste);

// (max - mean) / C over a dB sequence.
double compute_threshold(const SteSequence& ste_db, double divisor);

// Frame-index state machine: a start-point at the first frame of a run of k
// frames strictly above `level`; the end-point at the first frame of the next
// run of k frames at or below it. The segment spans through that first
// below-run frame. An open segment is closed at the last frame.
std::vector<Segment> detect_endpoints(const SteSequence& ste_db, double level, int k,
                                      int window_id = 0);

// Full segmentation of one sample window. Analysis windows are numbered
// consecutively from `first_window_id`.
std::vector<Segment> segment_audio(const AudioClip& clip, const SampleWindow& window,
                                   const SegmenterConfig& cfg, int first_window_id = 0,
                                   int jobs = 1);

}  // namespace frogid
