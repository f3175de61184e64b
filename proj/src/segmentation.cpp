#include "frogid/segmentation.hpp"

#include "frogid/dsp.hpp"
#include "frogid/errors.hpp"
#include "frogid/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace frogid {

namespace {

constexpr double kPowerFloor = 1e-12;

void check_band(double low, double high, int sample_rate) {
    if (!(low >= 0.0) || !(low < high) || high > sample_rate / 2.0)
        throw Error(Errc::InvalidBand, "band [" + std::to_string(low) + ", " + std::to_string(high) +
                                           "] Hz is invalid for a sample rate of " +
                                           std::to_string(sample_rate) + " Hz");
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

void SegmenterConfig::validate(int sample_rate) const {
    check_band(band_low, band_high, sample_rate);
    if (ma_length < 1) throw Error(Errc::InvalidConfig, "ma_length must be >= 1");
    if (consecutive_frames < 1) throw Error(Errc::InvalidConfig, "consecutive_frames must be >= 1");
    if (!(threshold_divisor > 0.0)) throw Error(Errc::InvalidConfig, "threshold divisor C must be > 0");
    if (fir_taps < 1 || fir_taps % 2 == 0) throw Error(Errc::InvalidConfig, "fir_taps must be odd");
    if (!(ste_frame > 0.0)) throw Error(Errc::InvalidConfig, "ste_frame must be > 0");
    if (!(analysis_window >= ste_frame))
        throw Error(Errc::InvalidConfig, "analysis_window must hold at least one STE frame");
    if (!(min_threshold_db >= 0.0)) throw Error(Errc::InvalidConfig, "min_threshold_db must be >= 0");
}

std::vector<double> bandpass_fir(std::span<const double> samples, int sample_rate, double band_low,
                                double band_high, int taps) {
    check_band(band_low, band_high, sample_rate);
    if (taps < 1 || taps % 2 == 0) throw Error(Errc::InvalidConfig, "FIR tap count must be odd");
    const auto kernel = dsp::design_bandpass(static_cast<std::size_t>(taps), band_low, band_high,
                                             static_cast<double>(sample_rate));
    return dsp::filter_aligned(samples, kernel);
}

AudioClip bandpass_fir(const AudioClip& clip, double band_low, double band_high, int taps) {
    AudioClip out = clip;
    out.samples = bandpass_fir(clip.samples, clip.sample_rate, band_low, band_high, taps);
    return out;
}

SteSequence short_time_energy(std::span<const double> samples, int sample_rate, double frame,
                              std::size_t origin) {
    if (!(frame > 0.0) || sample_rate <= 0)
        throw Error(Errc::InvalidConfig, "STE frame duration and sample rate must be positive");
    const auto n = static_cast<std::size_t>(std::llround(frame * sample_rate));
    if (n == 0 || samples.size() < n)
        throw Error(Errc::ClipTooShort, "audio shorter than one " + std::to_string(frame) + " s frame");
    SteSequence ste;
    ste.frame_samples = n;
    ste.frame_duration = static_cast<double>(n) / sample_rate;
    ste.origin = origin;
    const std::size_t frames = samples.size() / n;
    ste.values.resize(frames);
    for (std::size_t f = 0; f < frames; ++f) {
        double e = 0.0;
        for (std::size_t m = f * n; m < (f + 1) * n; ++m) e += samples[m] * samples[m];
        ste.values[f] = e;
    }
    return ste;
}

SteSequence short_time_energy(const AudioClip& clip, double frame) {
    return short_time_energy(clip.samples, clip.sample_rate, frame, 0);
}

SteSequence moving_average(const SteSequence& ste, int length) {
    if (length < 1) throw Error(Errc::InvalidConfig, "moving-average length must be >= 1");
    SteSequence out = ste;
    const auto L = static_cast<std::size_t>(length);
    for (std::size_t i = 0; i < ste.values.size(); ++i) {
        const std::size_t first = i + 1 >= L ? i + 1 - L : 0;
        double acc = 0.0;
        for (std::size_t j = first; j <= i; ++j) acc += ste.values[j];
        out.values[i] = acc / static_cast<double>(i + 1 - first);
    }
    return out;
}

SteSequence to_db(const SteSequence& ste) {
    SteSequence out = ste;
    for (auto& v : out.values) v = 10.0 * std::log10(std::max(v, kPowerFloor));
    return out;
}

double compute_threshold(const SteSequence& ste_db, double divisor) {
    if (ste_db.values.empty()) throw Error(Errc::EmptySequence, "threshold of an empty STE sequence");
    if (!(divisor > 0.0)) throw Error(Errc::InvalidConfig, "threshold divisor C must be > 0");
    const double mx = *std::max_element(ste_db.values.begin(), ste_db.values.end());
    return (mx - mean_of(ste_db.values)) / divisor;
}

std::vector<Segment> detect_endpoints(const SteSequence& ste_db, double level, int k, int window_id) {
    if (k < 1) throw Error(Errc::InvalidConfig, "consecutive frame count must be >= 1");
    const auto& v = ste_db.values;
    const auto run = static_cast<std::size_t>(k);
    const std::size_t N = ste_db.frame_samples;
    auto to_sample = [&](std::size_t frame) { return ste_db.origin + frame * N; };

    std::vector<Segment> segments;
    bool active = false;
    std::size_t count = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!active) {
            count = v[i] > level ? count + 1 : 0;
            if (count == run) {
                active = true;
                start = i + 1 - run;
                count = 0;
            }
        } else {
            count = v[i] > level ? 0 : count + 1;
            if (count == run) {
                const std::size_t first_below = i + 1 - run;
                segments.push_back({to_sample(start), to_sample(first_below + 1), window_id});
                active = false;
                count = 0;
            }
        }
    }
    if (active) segments.push_back({to_sample(start), to_sample(v.size()), window_id});
    return segments;
}

namespace {

// Moves endpoints found on the smoothed sequence onto the outermost raw
// frames above `level`. The causal average lags the signal by up to L-1
// frames, so the search for the onset starts L-1 frames earlier.
std::vector<Segment> refine(const std::vector<Segment>& coarse, const SteSequence& raw_db, double level,
                            int ma_length) {
    const std::size_t N = raw_db.frame_samples;
    const auto lag = static_cast<std::size_t>(ma_length - 1);
    const std::size_t half = lag / 2;
    const auto& v = raw_db.values;
    std::vector<Segment> out;
    std::size_t floor_frame = 0;
    for (const auto& seg : coarse) {
        const std::size_t sf = (seg.start - raw_db.origin) / N;
        const std::size_t ef = std::min((seg.end - raw_db.origin) / N, v.size());
        const std::size_t lo = std::max(floor_frame, sf >= lag ? sf - lag : 0);
        std::size_t first = ef;
        std::size_t last = ef;
        for (std::size_t f = lo; f < ef; ++f) {
            if (v[f] > level) {
                if (first == ef) first = f;
                last = f;
            }
        }
        std::size_t new_start, new_end;
        if (first != ef) {
            new_start = first;
            new_end = last + 1;
        } else {
            new_start = std::max(floor_frame, sf >= half ? sf - half : 0);
            new_end = std::max(new_start + 1, ef >= half ? ef - half : 0);
        }
        out.push_back({raw_db.origin + new_start * N, raw_db.origin + new_end * N, seg.window_id});
        floor_frame = new_end;
    }
    return out;
}

}  // namespace

std::vector<Segment> segment_audio(const AudioClip& clip, const SampleWindow& window,
                                   const SegmenterConfig& cfg, int first_window_id, int jobs) {
    cfg.validate(clip.sample_rate);
    if (window.start >= window.end || window.end > clip.size())
        throw Error(Errc::InvalidConfig, "sample window lies outside the clip");

    const auto block = static_cast<std::size_t>(std::llround(cfg.analysis_window * clip.sample_rate));
    const auto frame_n = static_cast<std::size_t>(std::llround(cfg.ste_frame * clip.sample_rate));
    const auto kernel = dsp::design_bandpass(static_cast<std::size_t>(cfg.fir_taps), cfg.band_low,
                                             cfg.band_high, static_cast<double>(clip.sample_rate));

    std::vector<std::pair<std::size_t, std::size_t>> blocks;
    for (std::size_t s = window.start; s < window.end; s += block) {
        const std::size_t e = std::min(s + block, window.end);
        if (e - s >= frame_n) blocks.emplace_back(s, e);
    }

    std::vector<std::vector<Segment>> per_block(blocks.size());
    parallel_for(blocks.size(), jobs, [&](std::size_t b) {
        const auto [s, e] = blocks[b];
        const std::span<const double> chunk(clip.samples.data() + s, e - s);
        const auto filtered = dsp::filter_aligned(chunk, kernel);
        const SteSequence ste = short_time_energy(filtered, clip.sample_rate, cfg.ste_frame, s);
        const SteSequence smoothed_db = to_db(moving_average(ste, cfg.ma_length));
        const double zeta = compute_threshold(smoothed_db, cfg.threshold_divisor);
        const double level = mean_of(smoothed_db.values) + std::max(zeta, cfg.min_threshold_db);
        const int id = first_window_id + static_cast<int>(b);
        auto segs = detect_endpoints(smoothed_db, level, cfg.consecutive_frames, id);
        if (cfg.refine_endpoints) segs = refine(segs, to_db(ste), level, cfg.ma_length);
        per_block[b] = std::move(segs);
    });

    std::vector<Segment> all;
    for (auto& v : per_block) all.insert(all.end(), v.begin(), v.end());
    return all;
}

}  // namespace frogid
