#include "frogid/errors.hpp"
#include "frogid/segmentation.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <string>

using namespace frogid;

namespace {

SteSequence seq(std::vector<double> v, std::size_t frame_samples = 10) {
    SteSequence s;
    s.values = std::move(v);
    s.frame_samples = frame_samples;
    s.frame_duration = 0.01;
    return s;
}

// Reference endpoint search written over a string of above/below marks.
std::vector<std::pair<std::size_t, std::size_t>> endpoints_by_pattern(const std::vector<double>& v, double level,
                                                                      int k) {
    std::string marks;
    for (double x : v) marks += x > level ? 'A' : 'B';
    const std::string up(static_cast<std::size_t>(k), 'A');
    const std::string down(static_cast<std::size_t>(k), 'B');
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::size_t pos = 0;
    while (true) {
        const auto s = marks.find(up, pos);
        if (s == std::string::npos) break;
        const auto e = marks.find(down, s + static_cast<std::size_t>(k));
        if (e == std::string::npos) {
            out.emplace_back(s, marks.size());
            break;
        }
        out.emplace_back(s, e + 1);
        pos = e + static_cast<std::size_t>(k);
    }
    return out;
}

std::vector<double> noisy_bursts(int rate, double seconds, const std::vector<double>& onsets, double length,
                                double amp, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 0.001);
    std::vector<double> x(static_cast<std::size_t>(seconds * rate));
    for (auto& v : x) v = g(rng);
    for (double t0 : onsets) {
        const auto a = static_cast<std::size_t>(t0 * rate);
        const auto b = static_cast<std::size_t>((t0 + length) * rate);
        for (std::size_t i = a; i < b && i < x.size(); ++i)
            x[i] += amp * std::sin(2.0 * std::numbers::pi * 2000.0 * double(i) / rate);
    }
    return x;
}

}  // namespace

TEST_CASE("short-time energy sums squares per frame and drops the partial tail") {
    std::vector<double> x(2550, 0.5);
    const auto ste = short_time_energy(x, 1000, 0.1, 7);
    CHECK(ste.frame_samples == 100);
    CHECK(ste.origin == 7);
    REQUIRE(ste.values.size() == 25);
    for (double e : ste.values) CHECK(e == doctest::Approx(25.0));
    CHECK_THROWS_AS(short_time_energy(std::vector<double>(99, 1.0), 1000, 0.1), Error);
}

TEST_CASE("causal moving average with warm-up") {
    const auto out = moving_average(seq({3, 6, 9, 12, 0}), 3);
    REQUIRE(out.values.size() == 5);
    CHECK(out.values[0] == doctest::Approx(3.0));
    CHECK(out.values[1] == doctest::Approx(4.5));
    CHECK(out.values[2] == doctest::Approx(6.0));
    CHECK(out.values[3] == doctest::Approx(9.0));
    CHECK(out.values[4] == doctest::Approx(7.0));
    CHECK(moving_average(seq({1, 2}), 1).values == std::vector<double>{1, 2});
}

TEST_CASE("dB conversion floors silence") {
    const auto d = to_db(seq({1.0, 100.0, 0.0}));
    CHECK(d.values[0] == doctest::Approx(0.0));
    CHECK(d.values[1] == doctest::Approx(20.0));
    CHECK(d.values[2] == doctest::Approx(-120.0));
}

TEST_CASE("threshold is (max - mean) / C") {
    CHECK(compute_threshold(seq({0, 0, 0, 12}), 3.0) == doctest::Approx(3.0));
    CHECK(compute_threshold(seq({-60, -60}), 3.0) == doctest::Approx(0.0));
    try {
        compute_threshold(seq({}), 3.0);
        FAIL("expected EmptySequence");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::EmptySequence);
    }
}

TEST_CASE("endpoint state machine") {
    SUBCASE("start and end runs") {
        const auto s = detect_endpoints(seq({0, 0, 5, 5, 5, 5, 0, 0, 0, 0}), 1.0, 3, 4);
        REQUIRE(s.size() == 1);
        CHECK(s[0] == Segment{20, 70, 4});
    }
    SUBCASE("a run shorter than k never starts a segment") {
        CHECK(detect_endpoints(seq({0, 5, 5, 0, 5, 5, 0}), 1.0, 3).empty());
    }
    SUBCASE("level is strict") { CHECK(detect_endpoints(seq({1, 1, 1, 1}), 1.0, 3).empty()); }
    SUBCASE("brief dips do not end a segment") {
        const auto s = detect_endpoints(seq({5, 5, 5, 0, 0, 5, 5, 0, 0, 0}), 1.0, 3);
        REQUIRE(s.size() == 1);
        CHECK(s[0] == Segment{0, 80, 0});
    }
    SUBCASE("an open segment closes at the last frame") {
        const auto s = detect_endpoints(seq({0, 5, 5, 5, 5}, 100), 1.0, 3);
        REQUIRE(s.size() == 1);
        CHECK(s[0] == Segment{100, 500, 0});
    }
}

TEST_CASE("endpoint state machine agrees with a pattern search on random sequences") {
    std::mt19937_64 rng(9);
    std::bernoulli_distribution coin(0.55);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<double> v(1 + rng() % 80);
        for (auto& x : v) x = coin(rng) ? 2.0 : 0.0;
        const int k = 1 + static_cast<int>(rng() % 4);
        const auto got = detect_endpoints(seq(v, 1), 1.0, k);
        const auto want = endpoints_by_pattern(v, 1.0, k);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].start == want[i].first);
            CHECK(got[i].end == want[i].second);
        }
    }
}

TEST_CASE("band-pass rejects bands outside the Nyquist range") {
    std::vector<double> x(1000, 0.0);
    try {
        bandpass_fir(x, 8000, 430.0, 7500.0, 513);
        FAIL("expected InvalidBand");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::InvalidBand);
    }
    CHECK_THROWS_AS(bandpass_fir(x, 16000, 3000.0, 2000.0, 513), Error);
}

TEST_CASE("segment_audio finds tone bursts to within a frame") {
    const int rate = 16000;
    const std::vector<double> onsets{1.0, 3.5, 6.2};
    const AudioClip clip = make_clip(noisy_bursts(rate, 8.0, onsets, 0.3, 0.05, 1), rate);
    const auto segs = segment_audio(clip, {0, clip.size(), "all"}, SegmenterConfig{});
    REQUIRE(segs.size() == onsets.size());
    for (std::size_t i = 0; i < segs.size(); ++i) {
        CHECK(std::abs(double(segs[i].start) / rate - onsets[i]) <= 0.011);
        CHECK(std::abs(double(segs[i].end) / rate - (onsets[i] + 0.3)) <= 0.011);
        CHECK(segs[i].window_id == 0);
    }
}

TEST_CASE("segment_audio on stationary noise finds nothing") {
    const int rate = 16000;
    const AudioClip clip = make_clip(noisy_bursts(rate, 20.0, {}, 0.0, 0.0, 2), rate);
    CHECK(segment_audio(clip, {0, clip.size(), "all"}, SegmenterConfig{}).empty());
}

TEST_CASE("analysis windows are numbered from the first id, results independent of jobs") {
    const int rate = 8000;
    SegmenterConfig cfg;
    cfg.band_high = 3500.0;
    cfg.analysis_window = 4.0;
    const AudioClip clip = make_clip(noisy_bursts(rate, 10.0, {1.0, 5.0, 9.0}, 0.3, 0.05, 3), rate);
    const auto segs = segment_audio(clip, {0, clip.size(), "all"}, cfg, 7);
    REQUIRE(segs.size() == 3);
    CHECK(segs[0].window_id == 7);
    CHECK(segs[1].window_id == 8);
    CHECK(segs[2].window_id == 9);
    CHECK(segment_audio(clip, {0, clip.size(), "all"}, cfg, 7, 3) == segs);
}

TEST_CASE("segments stay inside the sample window") {
    const int rate = 16000;
    const AudioClip clip = make_clip(noisy_bursts(rate, 6.0, {1.0, 4.0}, 0.3, 0.05, 4), rate);
    const SampleWindow w{3 * 16000, 6 * 16000, "late"};
    const auto segs = segment_audio(clip, w, SegmenterConfig{});
    REQUIRE(segs.size() == 1);
    CHECK(segs[0].start >= w.start);
    CHECK(segs[0].end <= w.end);
    CHECK(std::abs(double(segs[0].start) / rate - 4.0) <= 0.011);
}

TEST_CASE("config validation") {
    SegmenterConfig cfg;
    CHECK_NOTHROW(cfg.validate(48000));
    cfg.fir_taps = 512;
    CHECK_THROWS_AS(cfg.validate(48000), Error);
    cfg = {};
    cfg.threshold_divisor = 0.0;
    CHECK_THROWS_AS(cfg.validate(48000), Error);
}
