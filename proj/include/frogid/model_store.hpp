#pragma once

#include "frogid/detector.hpp"
#include "frogid/gmm.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace frogid {

inline constexpr int kModelFormatVersion = 1;

nlohmann::json model_to_json(const GmmModel& model);
// Throws Errc::InvalidModel on a malformed document.
GmmModel model_from_json(const nlohmann::json& j);

// One <code>.json per species plus manifest.json listing the species order
// and the shared feature fingerprint. Existing files are overwritten.
void save_model_store(const std::filesystem::path& dir, const std::vector<GmmModel>& models);

struct ModelStoreManifest {
    std::vector<std::string> species;
    std::string fingerprint;
};

ModelStoreManifest read_manifest(const std::filesystem::path& dir);
// Models in manifest order. Read-only.
std::vector<GmmModel> load_model_store(const std::filesystem::path& dir);

}  // namespace frogid
