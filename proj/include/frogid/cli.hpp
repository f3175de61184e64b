#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace frogid {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitIo = 2;
inline constexpr int kExitData = 3;

// `args` excludes the program name. CSV reports go to files named by flags
// or to `out`; diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// One labelled segment: the row format of label and truth files.
struct LabelRow {
    std::string file;
    std::string species;
    std::size_t start = 0;
    std::size_t end = 0;
};

// Header "file,species_code,start_sample,end_sample". Relative audio paths
// are resolved against the directory of the label file.
std::vector<LabelRow> read_labels(const std::string& path);
void write_labels(const std::string& path, const std::vector<LabelRow>& rows);

}  // namespace frogid
