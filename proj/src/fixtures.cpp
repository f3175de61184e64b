#include "frogid/fixtures.hpp"

#include "frogid/dsp.hpp"
#include "frogid/errors.hpp"
#include "frogid/random.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>

namespace frogid::fixtures {

namespace {

constexpr std::size_t kMeasureTaps = 513;
constexpr double kMaxNoiseMeasureSeconds = 30.0;

// -3 dB/octave magnitude response by frequency sampling, Hamming-windowed.
std::vector<double> pink_kernel(double sample_rate) {
    constexpr std::size_t taps = 2049;
    constexpr std::size_t fft_size = 4096;
    const double f_min = 20.0;
    dsp::RealFft fft(fft_size);
    std::vector<std::complex<double>> spec(fft.bins());
    for (std::size_t k = 0; k < spec.size(); ++k) {
        const double f = static_cast<double>(k) * sample_rate / static_cast<double>(fft_size);
        spec[k] = 1.0 / std::sqrt(std::max(f, f_min));
    }
    std::vector<double> impulse(fft_size);
    fft.inverse(spec, impulse);
    const auto window = dsp::hamming(taps);
    std::vector<double> h(taps);
    const std::size_t half = taps / 2;
    for (std::size_t i = 0; i < taps; ++i) {
        const std::size_t src = (i + fft_size - half) % fft_size;
        h[i] = impulse[src] * window[i] / static_cast<double>(fft_size);
    }
    return h;
}

double band_rms(std::span<const double> x, double lo, double hi, int sample_rate, std::size_t start,
                std::size_t end) {
    const double high = std::min(hi, sample_rate / 2.0 - 1.0);
    const auto kernel = dsp::design_bandpass(kMeasureTaps, lo, high, sample_rate);
    const auto filtered = dsp::filter_aligned(x, kernel);
    return rms(filtered, start, end);
}

std::vector<double> render_call(const SyntheticSpecies& sp, int sample_rate, std::mt19937_64& rng) {
    const double rate = sample_rate;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double carrier = sp.carrier_hz * (1.0 + sp.carrier_jitter * (2.0 * unit(rng) - 1.0));
    const double fm_phase0 = 2.0 * std::numbers::pi * unit(rng);
    double phase = 2.0 * std::numbers::pi * unit(rng);

    const auto total = static_cast<std::size_t>(std::llround(sp.call_duration() * rate));
    std::vector<double> out(total, 0.0);
    double t0 = 0.0;
    for (std::size_t p = 0; p < sp.pulse_pattern.size(); ++p) {
        const Pulse& pulse = sp.pulse_pattern[p];
        const auto begin = static_cast<std::size_t>(std::llround(t0 * rate));
        const auto len = static_cast<std::size_t>(std::llround(pulse.on * rate));
        const double ramp = std::min(0.005, pulse.on / 4.0) * rate;
        for (std::size_t i = 0; i < len && begin + i < total; ++i) {
            const double t = (static_cast<double>(begin + i)) / rate;
            const double f = carrier + sp.fm_depth_hz * std::sin(2.0 * std::numbers::pi * sp.fm_rate_hz * t + fm_phase0);
            phase += 2.0 * std::numbers::pi * f / rate;
            double env = 1.0;
            const auto di = static_cast<double>(i);
            const auto dl = static_cast<double>(len);
            if (di < ramp) env = 0.5 - 0.5 * std::cos(std::numbers::pi * di / ramp);
            else if (dl - di < ramp) env = 0.5 - 0.5 * std::cos(std::numbers::pi * (dl - di) / ramp);
            double v = std::sin(phase);
            for (std::size_t h = 0; h < sp.harmonics.size(); ++h)
                if (carrier * static_cast<double>(h + 2) < rate / 2.0)
                    v += sp.harmonics[h] * std::sin(static_cast<double>(h + 2) * phase);
            out[begin + i] = env * v;
        }
        t0 += pulse.on + (p + 1 < sp.pulse_pattern.size() ? pulse.off : 0.0);
    }
    return out;
}

}  // namespace

double rms(std::span<const double> x, std::size_t start, std::size_t end) {
    end = std::min(end, x.size());
    if (start >= end) return 0.0;
    double acc = 0.0;
    for (std::size_t i = start; i < end; ++i) acc += x[i] * x[i];
    return std::sqrt(acc / static_cast<double>(end - start));
}

double SyntheticSpecies::call_duration() const {
    double t = 0.0;
    for (std::size_t p = 0; p < pulse_pattern.size(); ++p)
        t += pulse_pattern[p].on + (p + 1 < pulse_pattern.size() ? pulse_pattern[p].off : 0.0);
    return t;
}

void SyntheticSpecies::validate() const {
    if (code.empty()) throw Error(Errc::InvalidConfig, "synthetic species needs a code");
    if (pulse_pattern.empty()) throw Error(Errc::InvalidConfig, "species " + code + " has no pulses");
    if (!(band_low >= 200.0 && band_low < band_high && band_high <= 8000.0))
        throw Error(Errc::InvalidConfig, "species " + code + " band must lie within [200, 8000] Hz");
    if (carrier_hz < band_low || carrier_hz > band_high)
        throw Error(Errc::InvalidConfig, "species " + code + " carrier lies outside its band");
    double total = 0.0;
    for (const auto& p : pulse_pattern) total += p.on + p.off;
    if (!(total < 2.0)) throw Error(Errc::InvalidConfig, "species " + code + " call pattern must last < 2 s");
}

const SyntheticSpecies& SceneScript::find(const std::string& code) const {
    for (const auto& s : species)
        if (s.code == code) return s;
    throw Error(Errc::InvalidConfig, "scene references unknown species '" + code + "'");
}

void SceneScript::validate() const {
    if (!(duration > 0.0)) throw Error(Errc::InvalidConfig, "scene duration must be positive");
    for (const auto& s : species) s.validate();
    for (std::size_t i = 0; i < events.size(); ++i) {
        find(events[i].species);
        if (i > 0 && events[i].time < events[i - 1].time)
            throw Error(Errc::InvalidConfig, "scene events must be sorted by time");
        if (events[i].time < 0.0) throw Error(Errc::InvalidConfig, "negative event time");
    }
    if (noise_band_high > 0.0 && !(noise_band_low < noise_band_high))
        throw Error(Errc::InvalidBand, "noise band is empty");
}

SceneComponents render_components(const SceneScript& script, int sample_rate, std::uint64_t seed) {
    script.validate();
    const auto n = static_cast<std::size_t>(std::llround(script.duration * sample_rate));
    SceneComponents out;
    out.calls.assign(n, 0.0);
    out.noise.assign(n, 0.0);

    {
        std::mt19937_64 rng(derive_seed(seed, 0));
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (auto& v : out.noise) v = gauss(rng);
        if (script.noise == NoiseKind::Pink) out.noise = dsp::filter_aligned(out.noise, pink_kernel(sample_rate));
        if (script.noise_band_high > 0.0) {
            const double hi = std::min(script.noise_band_high, sample_rate / 2.0 - 1.0);
            out.noise = dsp::filter_aligned(out.noise, dsp::design_bandpass(1025, script.noise_band_low, hi, sample_rate));
        }
        const double current = rms(out.noise, 0, n);
        const double target = std::pow(10.0, script.noise_level_db / 20.0);
        const double g = current > 0.0 ? target / current : 0.0;
        for (auto& v : out.noise) v *= g;
    }

    // Noise RMS per species band, measured on a central excerpt.
    const std::size_t excerpt = std::min(n, static_cast<std::size_t>(kMaxNoiseMeasureSeconds * sample_rate));
    const std::size_t ex_start = (n - excerpt) / 2;
    const std::span<const double> noise_excerpt(out.noise.data() + ex_start, excerpt);
    std::map<std::pair<double, double>, double> noise_band;

    for (std::size_t i = 0; i < script.events.size(); ++i) {
        const SceneEvent& ev = script.events[i];
        const SyntheticSpecies& sp = script.find(ev.species);
        const auto start = static_cast<std::size_t>(std::llround(ev.time * sample_rate));
        if (start >= n) continue;
        std::mt19937_64 rng(derive_seed(seed, 1 + i));
        auto call = render_call(sp, sample_rate, rng);
        if (call.empty()) continue;

        const auto key = std::make_pair(sp.band_low, sp.band_high);
        if (!noise_band.contains(key))
            noise_band[key] = band_rms(noise_excerpt, sp.band_low, sp.band_high, sample_rate, 0, excerpt);
        const double call_rms = band_rms(call, sp.band_low, sp.band_high, sample_rate, 0, call.size());
        if (call_rms <= 0.0) continue;
        const double gain = noise_band[key] * std::pow(10.0, ev.snr_db / 20.0) / call_rms;
        const std::size_t len = std::min(call.size(), n - start);
        for (std::size_t j = 0; j < len; ++j) out.calls[start + j] += gain * call[j];
        out.truth.push_back({start, start + len, ev.species});
    }
    return out;
}

Scene synthesize_scene(const SceneScript& script, int sample_rate, std::uint64_t seed) {
    auto parts = render_components(script, sample_rate, seed);
    for (std::size_t i = 0; i < parts.calls.size(); ++i) parts.calls[i] += parts.noise[i];
    parts.noise = {};
    return {make_clip(std::move(parts.calls), sample_rate, "synthetic"), std::move(parts.truth)};
}

std::vector<SyntheticSpecies> default_catalog() {
    std::vector<SyntheticSpecies> c;
    {
        SyntheticSpecies s;
        s.code = "s01";
        s.carrier_hz = 2300.0;
        s.fm_depth_hz = 250.0;
        s.fm_rate_hz = 25.0;
        s.pulse_pattern = std::vector<Pulse>(5, Pulse{0.04, 0.03});
        s.band_low = 1600.0;
        s.band_high = 3200.0;
        c.push_back(s);
    }
    {
        SyntheticSpecies s;
        s.code = "s02";
        s.carrier_hz = 2800.0;
        s.fm_depth_hz = 60.0;
        s.fm_rate_hz = 6.0;
        s.pulse_pattern = {{0.35, 0.0}};
        s.band_low = 1600.0;
        s.band_high = 3200.0;
        c.push_back(s);
    }
    {
        SyntheticSpecies s;
        s.code = "s03";
        s.carrier_hz = 1400.0;
        s.fm_depth_hz = 40.0;
        s.fm_rate_hz = 10.0;
        s.pulse_pattern = std::vector<Pulse>(3, Pulse{0.12, 0.08});
        s.band_low = 1200.0;
        s.band_high = 1600.0;
        c.push_back(s);
    }
    {
        SyntheticSpecies s;
        s.code = "s04";
        s.carrier_hz = 6500.0;
        s.fm_depth_hz = 300.0;
        s.fm_rate_hz = 40.0;
        s.pulse_pattern = std::vector<Pulse>(8, Pulse{0.025, 0.02});
        s.band_low = 5600.0;
        s.band_high = 7500.0;
        c.push_back(s);
    }
    {
        SyntheticSpecies s;
        s.code = "s05";
        s.carrier_hz = 800.0;
        s.fm_depth_hz = 100.0;
        s.fm_rate_hz = 4.0;
        s.harmonics = {0.6, 0.3};
        s.pulse_pattern = {{0.2, 0.1}, {0.2, 0.0}};
        s.band_low = 430.0;
        s.band_high = 3100.0;
        c.push_back(s);
    }
    return c;
}

std::vector<SyntheticSpecies> overlapping_band_catalog() {
    std::vector<SyntheticSpecies> c;
    auto add = [&](std::string code, double carrier, double depth, double fm_rate, std::vector<Pulse> pattern,
                   double lo, double hi) {
        SyntheticSpecies s;
        s.code = std::move(code);
        s.carrier_hz = carrier;
        s.fm_depth_hz = depth;
        s.fm_rate_hz = fm_rate;
        s.pulse_pattern = std::move(pattern);
        s.band_low = lo;
        s.band_high = hi;
        s.carrier_jitter = 0.03;
        c.push_back(std::move(s));
    };
    add("o01", 5800.0, 120.0, 8.0, {{0.25, 0.0}}, 5000.0, 7500.0);
    add("o02", 6200.0, 120.0, 8.0, {{0.25, 0.0}}, 5000.0, 7500.0);
    add("o03", 6600.0, 120.0, 8.0, {{0.25, 0.0}}, 5000.0, 7500.0);
    add("o04", 2400.0, 150.0, 10.0, {{0.1, 0.05}, {0.1, 0.0}}, 1600.0, 3200.0);
    add("o05", 2700.0, 150.0, 10.0, {{0.1, 0.05}, {0.1, 0.0}}, 1600.0, 3200.0);
    return c;
}

std::vector<SyntheticSpecies> distractor_catalog() {
    std::vector<SyntheticSpecies> c;
    {
        SyntheticSpecies s;
        s.code = "u01";
        s.carrier_hz = 4300.0;
        s.fm_depth_hz = 200.0;
        s.fm_rate_hz = 15.0;
        s.pulse_pattern = {{0.3, 0.0}};
        s.band_low = 3800.0;
        s.band_high = 4800.0;
        c.push_back(s);
    }
    {
        SyntheticSpecies s;
        s.code = "u02";
        s.carrier_hz = 3500.0;
        s.fm_depth_hz = 2500.0;
        s.fm_rate_hz = 120.0;
        s.pulse_pattern = std::vector<Pulse>(6, Pulse{0.03, 0.05});
        s.band_low = 1000.0;
        s.band_high = 6000.0;
        c.push_back(s);
    }
    {
        SyntheticSpecies s;
        s.code = "u03";
        s.carrier_hz = 1000.0;
        s.fm_depth_hz = 30.0;
        s.fm_rate_hz = 3.0;
        s.harmonics = {0.8};
        s.pulse_pattern = {{0.5, 0.0}};
        s.band_low = 800.0;
        s.band_high = 2200.0;
        c.push_back(s);
    }
    return c;
}

SyntheticSpecies tone_burst_species(double carrier_hz, double length) {
    SyntheticSpecies s;
    s.code = "tone";
    s.carrier_hz = carrier_hz;
    s.pulse_pattern = {{length, 0.0}};
    s.band_low = std::max(200.0, carrier_hz - 500.0);
    s.band_high = std::min(8000.0, carrier_hz + 500.0);
    s.carrier_jitter = 0.0;
    return s;
}

SceneScript species_corpus_script(const SyntheticSpecies& species, double call_seconds, std::uint64_t seed,
                                  double snr_low, double snr_high) {
    species.validate();
    std::mt19937_64 rng(derive_seed(seed, 0x636f7270));
    std::uniform_real_distribution<double> gap(0.4, 1.2);
    std::uniform_real_distribution<double> snr(snr_low, snr_high);
    SceneScript script;
    script.species = {species};
    double t = 0.5;
    double placed = 0.0;
    while (placed < call_seconds) {
        script.events.push_back({t, species.code, snr(rng)});
        placed += species.call_duration();
        t += species.call_duration() + gap(rng);
    }
    script.duration = t + 0.5;
    return script;
}

SceneScript burst_script(double duration, double period, double first, double snr_db,
                         const SyntheticSpecies& species, double noise_band_low, double noise_band_high) {
    SceneScript script;
    script.duration = duration;
    script.species = {species};
    script.noise_band_low = noise_band_low;
    script.noise_band_high = noise_band_high;
    for (double t = first; t + species.call_duration() < duration; t += period)
        script.events.push_back({t, species.code, snr_db});
    return script;
}

SceneScript random_scene_script(double duration, const std::vector<SyntheticSpecies>& catalog,
                                const std::vector<std::pair<std::string, int>>& calls, std::uint64_t seed,
                                double snr_low, double snr_high, double min_gap) {
    SceneScript script;
    script.duration = duration;
    script.species = catalog;
    std::mt19937_64 rng(derive_seed(seed, 0x7363656e));
    std::uniform_real_distribution<double> snr(snr_low, snr_high);
    std::vector<std::pair<double, double>> occupied;
    for (const auto& [code, count] : calls) {
        const double len = script.find(code).call_duration();
        std::uniform_real_distribution<double> when(0.5, std::max(0.5, duration - len - 0.5));
        for (int k = 0; k < count; ++k) {
            bool placed = false;
            for (int attempt = 0; attempt < 10000 && !placed; ++attempt) {
                const double t = when(rng);
                const bool clash = std::any_of(occupied.begin(), occupied.end(), [&](const auto& o) {
                    return t < o.second + min_gap && o.first < t + len + min_gap;
                });
                if (clash) continue;
                occupied.emplace_back(t, t + len);
                script.events.push_back({t, code, snr(rng)});
                placed = true;
            }
            if (!placed)
                throw Error(Errc::InvalidConfig, "cannot fit " + std::to_string(count) + " calls of " + code +
                                                     " into a " + std::to_string(duration) + " s scene");
        }
    }
    std::sort(script.events.begin(), script.events.end(),
              [](const SceneEvent& a, const SceneEvent& b) { return a.time < b.time; });
    return script;
}

}  // namespace frogid::fixtures
