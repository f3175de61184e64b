#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

namespace test {

// Fresh directory under the system temp path, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("frogid_" + tag + "_" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

// Little-endian byte assembly for hand-made RIFF files.
struct Bytes {
    std::vector<std::uint8_t> v;

    Bytes& id(const char* s) {
        v.insert(v.end(), s, s + 4);
        return *this;
    }
    Bytes& u16(std::uint16_t x) {
        v.push_back(static_cast<std::uint8_t>(x & 0xff));
        v.push_back(static_cast<std::uint8_t>(x >> 8));
        return *this;
    }
    Bytes& u32(std::uint32_t x) {
        for (int i = 0; i < 4; ++i) v.push_back(static_cast<std::uint8_t>((x >> (8 * i)) & 0xff));
        return *this;
    }
    Bytes& raw(const std::vector<std::uint8_t>& other) {
        v.insert(v.end(), other.begin(), other.end());
        return *this;
    }
    Bytes& chunk(const char* name, const Bytes& payload) {
        id(name).u32(static_cast<std::uint32_t>(payload.v.size())).raw(payload.v);
        if (payload.v.size() & 1u) v.push_back(0);
        return *this;
    }
};

inline Bytes fmt_chunk(std::uint16_t format, std::uint16_t channels, std::uint32_t rate, std::uint16_t bits) {
    Bytes f;
    const std::uint16_t align = static_cast<std::uint16_t>(channels * bits / 8);
    f.u16(format).u16(channels).u32(rate).u32(rate * align).u16(align).u16(bits);
    return f;
}

inline std::vector<std::uint8_t> riff(const Bytes& body) {
    Bytes file;
    file.id("RIFF").u32(static_cast<std::uint32_t>(body.v.size() + 4)).id("WAVE").raw(body.v);
    return file.v;
}

inline void write_bytes(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace test
