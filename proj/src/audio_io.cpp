#include "frogid/audio_io.hpp"

#include "frogid/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>

namespace frogid {

namespace {

constexpr std::uint16_t kFormatPcm = 0x0001;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t read_u16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t read_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

struct Chunk {
    std::string id;
    std::size_t offset = 0;   // payload offset in the file image
    std::size_t declared = 0; // declared payload size
};

struct RiffImage {
    std::vector<std::uint8_t> bytes;
    std::vector<Chunk> chunks;
};

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

RiffImage parse_riff(const std::filesystem::path& path) {
    RiffImage img{slurp(path), {}};
    const auto& b = img.bytes;
    if (b.size() < 12 || std::memcmp(b.data(), "RIFF", 4) != 0 ||
        std::memcmp(b.data() + 8, "WAVE", 4) != 0)
        throw Error(Errc::NotWav, path.string() + " is not a RIFF/WAVE file");

    std::size_t pos = 12;
    while (pos + 8 <= b.size()) {
        Chunk c;
        c.id.assign(reinterpret_cast<const char*>(b.data() + pos), 4);
        c.declared = read_u32(b.data() + pos + 4);
        c.offset = pos + 8;
        img.chunks.push_back(c);
        pos = c.offset + c.declared + (c.declared & 1u);
    }
    return img;
}

const Chunk* find_chunk(const RiffImage& img, std::string_view id) {
    for (const auto& c : img.chunks)
        if (c.id == id) return &c;
    return nullptr;
}

// Labels from LIST/adtl/labl, keyed by cue id.
std::map<std::uint32_t, std::string> read_labels(const RiffImage& img) {
    std::map<std::uint32_t, std::string> labels;
    const auto& b = img.bytes;
    for (const auto& c : img.chunks) {
        if (c.id != "LIST" || c.declared < 4 || c.offset + 4 > b.size()) continue;
        if (std::memcmp(b.data() + c.offset, "adtl", 4) != 0) continue;
        const std::size_t end = std::min(b.size(), c.offset + c.declared);
        std::size_t pos = c.offset + 4;
        while (pos + 8 <= end) {
            const std::uint32_t size = read_u32(b.data() + pos + 4);
            const std::size_t payload = pos + 8;
            if (std::memcmp(b.data() + pos, "labl", 4) == 0 && size >= 4 && payload + size <= end) {
                const std::uint32_t id = read_u32(b.data() + payload);
                const char* text = reinterpret_cast<const char*>(b.data() + payload + 4);
                std::size_t len = size - 4;
                while (len > 0 && text[len - 1] == '\0') --len;
                labels[id] = std::string(text, len);
            }
            pos = payload + size + (size & 1u);
        }
    }
    return labels;
}

}  // namespace

AudioClip make_clip(std::vector<double> samples, int sample_rate, std::string source_path) {
    AudioClip clip;
    clip.samples = std::move(samples);
    clip.sample_rate = sample_rate;
    clip.source_path = std::move(source_path);
    clip.nonstandard_rate = sample_rate != 44100 && sample_rate != 48000;
    return clip;
}

AudioClip load_wav(const std::filesystem::path& path) {
    const RiffImage img = parse_riff(path);
    const auto& b = img.bytes;

    const Chunk* fmt = find_chunk(img, "fmt ");
    if (!fmt || fmt->declared < 16 || fmt->offset + 16 > b.size())
        throw Error(Errc::NotWav, path.string() + ": missing or short fmt chunk");
    const std::uint8_t* f = b.data() + fmt->offset;
    std::uint16_t format = read_u16(f);
    const std::uint16_t channels = read_u16(f + 2);
    const std::uint32_t rate = read_u32(f + 4);
    const std::uint16_t bits = read_u16(f + 14);
    if (format == kFormatExtensible && fmt->declared >= 40 && fmt->offset + 26 <= b.size())
        format = read_u16(f + 24);  // first two bytes of the sub-format GUID
    if (format != kFormatPcm || bits != 16)
        throw Error(Errc::UnsupportedEncoding,
                    path.string() + ": only 16-bit integer PCM is supported (format " +
                        std::to_string(format) + ", " + std::to_string(bits) + " bits)");
    if (channels == 0 || rate == 0)
        throw Error(Errc::UnsupportedEncoding, path.string() + ": zero channels or sample rate");

    const Chunk* data = find_chunk(img, "data");
    if (!data) throw Error(Errc::TruncatedFile, path.string() + ": no data chunk");
    if (data->offset + data->declared > b.size())
        throw Error(Errc::TruncatedFile, path.string() + ": data chunk declares " +
                                             std::to_string(data->declared) + " bytes, file holds " +
                                             std::to_string(b.size() - data->offset));

    const std::size_t frame_bytes = 2u * channels;
    const std::size_t frames = data->declared / frame_bytes;
    std::vector<double> samples(frames);
    const std::uint8_t* p = b.data() + data->offset;
    const double inv = 1.0 / (32768.0 * channels);
    for (std::size_t i = 0; i < frames; ++i) {
        std::int32_t acc = 0;
        for (std::size_t ch = 0; ch < channels; ++ch)
            acc += static_cast<std::int16_t>(read_u16(p + i * frame_bytes + 2 * ch));
        samples[i] = acc * inv;
    }

    AudioClip clip = make_clip(std::move(samples), static_cast<int>(rate), path.string());
    clip.channel_count_original = channels;
    return clip;
}

std::vector<CuePoint> read_cue_points(const std::filesystem::path& path) {
    const RiffImage img = parse_riff(path);
    const Chunk* cue = find_chunk(img, "cue ");
    if (!cue) return {};
    const auto& b = img.bytes;
    if (cue->declared < 4 || cue->offset + cue->declared > b.size())
        throw Error(Errc::MalformedCueChunk, path.string() + ": cue chunk truncated");
    const std::uint32_t count = read_u32(b.data() + cue->offset);
    if (cue->declared != 4u + 24ull * count)
        throw Error(Errc::MalformedCueChunk, path.string() + ": cue chunk size " +
                                                 std::to_string(cue->declared) + " does not match " +
                                                 std::to_string(count) + " entries");

    const auto labels = read_labels(img);
    std::vector<CuePoint> cues;
    cues.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint8_t* e = b.data() + cue->offset + 4 + 24u * i;
        const std::uint32_t id = read_u32(e);
        // dwSampleOffset; dwPosition is only meaningful with a playlist.
        const std::uint32_t position = read_u32(e + 20);
        auto it = labels.find(id);
        cues.push_back({it != labels.end() ? it->second : "cue" + std::to_string(id), position});
    }
    std::stable_sort(cues.begin(), cues.end(),
                     [](const CuePoint& a, const CuePoint& c) { return a.position < c.position; });
    return cues;
}

std::vector<SampleWindow> windows_from_cues(const AudioClip& clip, std::span<const CuePoint> cues,
                                            double default_duration) {
    const std::size_t n = clip.size();
    std::vector<CuePoint> usable;
    for (const auto& c : cues)
        if (c.position < n) usable.push_back(c);

    std::vector<SampleWindow> windows;
    if (usable.empty()) {
        if (n > 0) windows.push_back({0, n, "clip"});
        return windows;
    }
    for (std::size_t i = 0; i + 1 < usable.size(); ++i) {
        if (usable[i + 1].position > usable[i].position)
            windows.push_back({usable[i].position, usable[i + 1].position, usable[i].label});
    }
    const auto& last = usable.back();
    const auto span = static_cast<std::size_t>(std::llround(default_duration * clip.sample_rate));
    const std::size_t end = std::min<std::size_t>(last.position + span, n);
    if (end > last.position) windows.push_back({last.position, end, last.label});
    return windows;
}

namespace {

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void put_id(std::vector<std::uint8_t>& out, const char* id) { out.insert(out.end(), id, id + 4); }

}  // namespace

void write_wav(const std::filesystem::path& path, std::span<const double> samples, int sample_rate,
               std::span<const CuePoint> cues) {
    std::vector<std::uint8_t> body;
    put_id(body, "WAVE");

    put_id(body, "fmt ");
    put_u32(body, 16);
    put_u16(body, kFormatPcm);
    put_u16(body, 1);
    put_u32(body, static_cast<std::uint32_t>(sample_rate));
    put_u32(body, static_cast<std::uint32_t>(sample_rate) * 2u);
    put_u16(body, 2);
    put_u16(body, 16);

    if (!cues.empty()) {
        put_id(body, "cue ");
        put_u32(body, static_cast<std::uint32_t>(4 + 24 * cues.size()));
        put_u32(body, static_cast<std::uint32_t>(cues.size()));
        for (std::size_t i = 0; i < cues.size(); ++i) {
            put_u32(body, static_cast<std::uint32_t>(i + 1));
            put_u32(body, static_cast<std::uint32_t>(cues[i].position));
            put_id(body, "data");
            put_u32(body, 0);
            put_u32(body, 0);
            put_u32(body, static_cast<std::uint32_t>(cues[i].position));
        }

        std::vector<std::uint8_t> adtl;
        put_id(adtl, "adtl");
        for (std::size_t i = 0; i < cues.size(); ++i) {
            const std::string& text = cues[i].label;
            const auto size = static_cast<std::uint32_t>(4 + text.size() + 1);
            put_id(adtl, "labl");
            put_u32(adtl, size);
            put_u32(adtl, static_cast<std::uint32_t>(i + 1));
            adtl.insert(adtl.end(), text.begin(), text.end());
            adtl.push_back(0);
            if (size & 1u) adtl.push_back(0);
        }
        put_id(body, "LIST");
        put_u32(body, static_cast<std::uint32_t>(adtl.size()));
        body.insert(body.end(), adtl.begin(), adtl.end());
    }

    put_id(body, "data");
    put_u32(body, static_cast<std::uint32_t>(samples.size() * 2));
    body.reserve(body.size() + samples.size() * 2);
    for (double s : samples) {
        const double scaled = std::round(s * 32768.0);
        const auto v = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
        put_u16(body, static_cast<std::uint16_t>(v));
    }

    std::vector<std::uint8_t> file;
    put_id(file, "RIFF");
    put_u32(file, static_cast<std::uint32_t>(body.size()));
    file.insert(file.end(), body.begin(), body.end());

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(file.data()), static_cast<std::streamsize>(file.size()));
    if (!out) throw Error(Errc::IoError, "short write to " + path.string());
}

}  // namespace frogid
