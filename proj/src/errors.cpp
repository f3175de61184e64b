#include "frogid/errors.hpp"

namespace frogid {

std::string_view to_string(Errc code) {
    switch (code) {
        case Errc::IoError: return "IoError";
        case Errc::NotWav: return "NotWav";
        case Errc::UnsupportedEncoding: return "UnsupportedEncoding";
        case Errc::TruncatedFile: return "TruncatedFile";
        case Errc::MalformedCueChunk: return "MalformedCueChunk";
        case Errc::InvalidBand: return "InvalidBand";
        case Errc::InvalidConfig: return "InvalidConfig";
        case Errc::ClipTooShort: return "ClipTooShort";
        case Errc::EmptySequence: return "EmptySequence";
        case Errc::SegmentTooShort: return "SegmentTooShort";
        case Errc::DegenerateBand: return "DegenerateBand";
        case Errc::TooFewFrames: return "TooFewFrames";
        case Errc::DimensionMismatch: return "DimensionMismatch";
        case Errc::EmptyMatrix: return "EmptyMatrix";
        case Errc::InsufficientData: return "InsufficientData";
        case Errc::EmptyRow: return "EmptyRow";
        case Errc::DegenerateClass: return "DegenerateClass";
        case Errc::LengthMismatch: return "LengthMismatch";
        case Errc::FingerprintMismatch: return "FingerprintMismatch";
        case Errc::InvalidModel: return "InvalidModel";
    }
    return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

bool is_io_error(Errc code) {
    switch (code) {
        case Errc::IoError:
        case Errc::NotWav:
        case Errc::UnsupportedEncoding:
        case Errc::TruncatedFile:
        case Errc::MalformedCueChunk:
            return true;
        default:
            return false;
    }
}

}  // namespace frogid
