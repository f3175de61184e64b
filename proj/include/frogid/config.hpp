#pragma once

#include "frogid/detector.hpp"
#include "frogid/features.hpp"
#include "frogid/fixtures.hpp"
#include "frogid/gmm.hpp"
#include "frogid/segmentation.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace frogid {

struct EvaluationSettings {
    double budget_seconds = 12.0;
    int folds = 10;
    double max_fpr = 0.05;

    friend bool operator==(const EvaluationSettings&, const EvaluationSettings&) = default;
};

struct ToolConfig {
    SegmenterConfig segmenter;
    FrameConfig frames;
    FilterbankSpec filterbank;
    int num_coeffs = 20;
    TrainingConfig training;
    EvaluationSettings evaluation;
    std::vector<double> thresholds;
    std::vector<std::string> species_manifest;
    double window_seconds = 600.0;       // closes the last cue window
    double min_training_seconds = 12.0;  // warn below this

    ScanConfig scan_config(int jobs) const;
    std::string fingerprint() const;
    void validate() const;

    friend bool operator==(const ToolConfig&, const ToolConfig&) = default;
};

// Unknown keys are rejected; missing keys keep their defaults.
ToolConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ToolConfig& cfg);
ToolConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const ToolConfig& cfg);

fixtures::SceneScript scene_from_json(const nlohmann::json& j);
nlohmann::json scene_to_json(const fixtures::SceneScript& script);

}  // namespace frogid
