#pragma once

#include <cstdint>

namespace frogid {

// Mixes a base seed with stream identifiers (fold, species, event, ...), so
// independent random streams never share state.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

}  // namespace frogid
