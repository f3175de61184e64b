#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace frogid {

enum class Errc {
    IoError,
    NotWav,
    UnsupportedEncoding,
    TruncatedFile,
    MalformedCueChunk,
    InvalidBand,
    InvalidConfig,
    ClipTooShort,
    EmptySequence,
    SegmentTooShort,
    DegenerateBand,
    TooFewFrames,
    DimensionMismatch,
    EmptyMatrix,
    InsufficientData,
    EmptyRow,
    DegenerateClass,
    LengthMismatch,
    FingerprintMismatch,
    InvalidModel,
};

std::string_view to_string(Errc code);

// Every failure raised by the library carries one of the codes above so
// callers (the CLI in particular) can map it onto an exit status.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what);

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

// True for failures caused by the file system or an unreadable input file.
bool is_io_error(Errc code);

}  // namespace frogid
