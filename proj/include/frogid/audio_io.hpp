#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace frogid {

// Decoded mono audio. Samples loaded from 16-bit PCM lie in [-1, 1).
struct AudioClip {
    std::vector<double> samples;
    int sample_rate = 0;
    std::string source_path;
    int channel_count_original = 1;
    // Set when the rate is neither 44100 nor 48000 Hz. Such clips are still
    // processed; all frequency settings are expressed in Hz.
    bool nonstandard_rate = false;

    std::size_t size() const noexcept { return samples.size(); }
    double duration_seconds() const noexcept {
        return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
    }
};

AudioClip make_clip(std::vector<double> samples, int sample_rate, std::string source_path = {});

struct CuePoint {
    std::string label;
    std::uint64_t position = 0;  // in sample frames

    friend bool operator==(const CuePoint&, const CuePoint&) = default;
};

// Half-open sample range [start, end) of a clip.
struct SampleWindow {
    std::size_t start = 0;
    std::size_t end = 0;
    std::string label;

    std::size_t length() const noexcept { return end - start; }
    friend bool operator==(const SampleWindow&, const SampleWindow&) = default;
};

// Reads a RIFF/WAVE file holding 16-bit integer PCM. Multi-channel audio is
// averaged to mono; samples are scaled by 1/32768.
AudioClip load_wav(const std::filesystem::path& path);

// Cue points from the `cue ` chunk, sorted by position. Labels come from a
// LIST/adtl `labl` sub-chunk when present, otherwise "cue<id>".
std::vector<CuePoint> read_cue_points(const std::filesystem::path& path);

// Consecutive cue pairs become windows; the last cue is closed after
// `default_duration` seconds (clamped to the clip). No cues: one window over
// the whole clip. Cues at or past the end of the clip are ignored.
std::vector<SampleWindow> windows_from_cues(const AudioClip& clip, std::span<const CuePoint> cues,
                                            double default_duration);

// Writes mono 16-bit PCM, clipping to the representable range, with an
// optional cue chunk and matching labl entries.
void write_wav(const std::filesystem::path& path, std::span<const double> samples, int sample_rate,
               std::span<const CuePoint> cues = {});

}  // namespace frogid
