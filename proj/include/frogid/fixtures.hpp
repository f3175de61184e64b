#pragma once

#include "frogid/audio_io.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace frogid::fixtures {

struct Pulse {
    double on = 0.0;   // seconds
    double off = 0.0;  // silence after the pulse
    friend bool operator==(const Pulse&, const Pulse&) = default;
};

// Parametric stand-in for a species' advertisement call: a frequency-modulated
// carrier with optional harmonics, gated by a pulse pattern.
struct SyntheticSpecies {
    std::string code;
    double carrier_hz = 2000.0;
    double fm_depth_hz = 0.0;
    double fm_rate_hz = 0.0;
    std::vector<double> harmonics;  // relative amplitudes of the 2nd, 3rd, ... harmonic
    std::vector<Pulse> pulse_pattern;
    double band_low = 200.0;
    double band_high = 8000.0;
    double carrier_jitter = 0.02;  // per-call relative carrier deviation (uniform +-)

    double call_duration() const;  // first onset to last offset
    void validate() const;
    friend bool operator==(const SyntheticSpecies&, const SyntheticSpecies&) = default;
};

enum class NoiseKind { White, Pink };

struct SceneEvent {
    double time = 0.0;  // seconds
    std::string species;
    double snr_db = 20.0;
    friend bool operator==(const SceneEvent&, const SceneEvent&) = default;
};

struct SceneScript {
    double duration = 0.0;
    NoiseKind noise = NoiseKind::White;
    double noise_level_db = -40.0;  // full-band RMS, dBFS
    // Noise is band-limited to [noise_band_low, noise_band_high] Hz when
    // noise_band_high > 0.
    double noise_band_low = 0.0;
    double noise_band_high = 0.0;
    std::vector<SyntheticSpecies> species;
    std::vector<SceneEvent> events;  // sorted by time

    const SyntheticSpecies& find(const std::string& code) const;
    void validate() const;
    friend bool operator==(const SceneScript&, const SceneScript&) = default;
};

struct TruthInterval {
    std::size_t start = 0;
    std::size_t end = 0;
    std::string species;
    friend bool operator==(const TruthInterval&, const TruthInterval&) = default;
};

struct Scene {
    AudioClip clip;
    std::vector<TruthInterval> truth;
};

struct SceneComponents {
    std::vector<double> calls;
    std::vector<double> noise;
    std::vector<TruthInterval> truth;
};

// Deterministic rendering. Each call is scaled so its RMS inside the
// species band, over the call, sits snr_db above the noise RMS in that band.
SceneComponents render_components(const SceneScript& script, int sample_rate, std::uint64_t seed);
Scene synthesize_scene(const SceneScript& script, int sample_rate, std::uint64_t seed);

// Five species; s01 and s02 share 1600-3200 Hz.
std::vector<SyntheticSpecies> default_catalog();
// Species whose differences lie at high frequency, where a mel layout
// resolves less detail than a uniform one.
std::vector<SyntheticSpecies> overlapping_band_catalog();
// Sounds that are not modelled and should be rejected by the detector.
std::vector<SyntheticSpecies> distractor_catalog();
// The burst fixture: 300 ms tone bursts at 2 kHz.
SyntheticSpecies tone_burst_species(double carrier_hz = 2000.0, double length = 0.3);

// One species calling repeatedly until `call_seconds` of calls are placed.
// SNRs are drawn uniformly from [snr_low, snr_high].
SceneScript species_corpus_script(const SyntheticSpecies& species, double call_seconds, std::uint64_t seed,
                                  double snr_low = 10.0, double snr_high = 25.0);

// Regular bursts every `period` seconds starting at `first`.
SceneScript burst_script(double duration, double period, double first, double snr_db,
                         const SyntheticSpecies& species, double noise_band_low = 0.0,
                         double noise_band_high = 0.0);

// Events for `calls[k]` calls of `present[k]`, placed at random
// non-overlapping times with at least `min_gap` seconds between calls.
SceneScript random_scene_script(double duration, const std::vector<SyntheticSpecies>& catalog,
                                const std::vector<std::pair<std::string, int>>& calls, std::uint64_t seed,
                                double snr_low = 8.0, double snr_high = 25.0, double min_gap = 0.5);

// RMS of `x` over [start, end).
double rms(std::span<const double> x, std::size_t start, std::size_t end);

}  // namespace frogid::fixtures
