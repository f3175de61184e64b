#include "frogid/config.hpp"

#include "frogid/errors.hpp"

#include <fstream>
#include <set>

namespace frogid {

using nlohmann::json;

namespace {

// Reads j[key] into `out` when present and records the key as consumed.
class Reader {
public:
    Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw Error(Errc::InvalidConfig, where_ + " must be a JSON object");
    }

    template <typename T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw Error(Errc::InvalidConfig, where_ + "." + key + ": " + e.what());
        }
    }

    const json* child(const char* key) {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    void finish() const {
        for (const auto& [k, v] : j_.items())
            if (!seen_.contains(k)) throw Error(Errc::InvalidConfig, "unknown key '" + k + "' in " + where_);
    }

private:
    const json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

FilterbankLayout parse_layout(const std::string& s) {
    if (s == "modified_linear") return FilterbankLayout::ModifiedLinear;
    if (s == "mel") return FilterbankLayout::Mel;
    throw Error(Errc::InvalidConfig, "filterbank.layout must be 'modified_linear' or 'mel', got '" + s + "'");
}

FilterNormalization parse_norm(const std::string& s) {
    if (s == "peak_unity") return FilterNormalization::PeakUnity;
    if (s == "unit_area") return FilterNormalization::UnitArea;
    throw Error(Errc::InvalidConfig, "filterbank.normalization must be 'peak_unity' or 'unit_area'");
}

fixtures::NoiseKind parse_noise(const std::string& s) {
    if (s == "white") return fixtures::NoiseKind::White;
    if (s == "pink") return fixtures::NoiseKind::Pink;
    throw Error(Errc::InvalidConfig, "noise must be 'white' or 'pink'");
}

}  // namespace

ScanConfig ToolConfig::scan_config(int jobs) const {
    return ScanConfig{segmenter, frames, filterbank, num_coeffs, jobs};
}

std::string ToolConfig::fingerprint() const { return feature_fingerprint(frames, filterbank, num_coeffs); }

void ToolConfig::validate() const {
    frames.validate();
    training.validate();
    if (num_coeffs < 1 || num_coeffs > filterbank.num_filters)
        throw Error(Errc::InvalidConfig, "num_coeffs must lie in [1, filterbank.num_filters]");
    if (!(window_seconds > 0.0)) throw Error(Errc::InvalidConfig, "window_seconds must be positive");
    if (evaluation.folds < 1) throw Error(Errc::InvalidConfig, "evaluation.folds must be >= 1");
    if (!(evaluation.max_fpr >= 0.0 && evaluation.max_fpr <= 1.0))
        throw Error(Errc::InvalidConfig, "evaluation.max_fpr must lie in [0, 1]");
    std::set<std::string> codes(species_manifest.begin(), species_manifest.end());
    if (codes.size() != species_manifest.size())
        throw Error(Errc::InvalidConfig, "species_manifest contains duplicates");
}

ToolConfig config_from_json(const json& j) {
    ToolConfig cfg;
    Reader root(j, "config");
    if (const json* s = root.child("segmenter")) {
        Reader r(*s, "segmenter");
        auto& c = cfg.segmenter;
        r.get("band_low", c.band_low);
        r.get("band_high", c.band_high);
        r.get("analysis_window", c.analysis_window);
        r.get("ste_frame", c.ste_frame);
        r.get("ma_length", c.ma_length);
        r.get("threshold_divisor", c.threshold_divisor);
        r.get("consecutive_frames", c.consecutive_frames);
        r.get("fir_taps", c.fir_taps);
        r.get("min_threshold_db", c.min_threshold_db);
        r.get("refine_endpoints", c.refine_endpoints);
        r.finish();
    }
    if (const json* s = root.child("frames")) {
        Reader r(*s, "frames");
        auto& c = cfg.frames;
        r.get("frame_length", c.frame_length);
        r.get("overlap_fraction", c.overlap_fraction);
        r.get("preemphasis_coeff", c.preemphasis_coeff);
        r.get("fft_size", c.fft_size);
        r.finish();
    }
    if (const json* s = root.child("filterbank")) {
        Reader r(*s, "filterbank");
        auto& c = cfg.filterbank;
        std::string layout = c.layout == FilterbankLayout::Mel ? "mel" : "modified_linear";
        std::string norm = c.normalization == FilterNormalization::UnitArea ? "unit_area" : "peak_unity";
        r.get("layout", layout);
        r.get("num_filters", c.num_filters);
        r.get("f_low", c.f_low);
        r.get("f_high", c.f_high);
        r.get("normalization", norm);
        r.finish();
        c.layout = parse_layout(layout);
        c.normalization = parse_norm(norm);
    }
    root.get("num_coeffs", cfg.num_coeffs);
    if (const json* s = root.child("training")) {
        Reader r(*s, "training");
        auto& c = cfg.training;
        r.get("num_components", c.num_components);
        r.get("max_iterations", c.max_iterations);
        r.get("log_likelihood_tolerance", c.log_likelihood_tolerance);
        r.get("variance_floor", c.variance_floor);
        r.get("rng_seed", c.rng_seed);
        r.get("kmeans_iterations", c.kmeans_iterations);
        r.finish();
    }
    if (const json* s = root.child("evaluation")) {
        Reader r(*s, "evaluation");
        r.get("budget_seconds", cfg.evaluation.budget_seconds);
        r.get("folds", cfg.evaluation.folds);
        r.get("max_fpr", cfg.evaluation.max_fpr);
        r.finish();
    }
    root.get("thresholds", cfg.thresholds);
    root.get("species_manifest", cfg.species_manifest);
    root.get("window_seconds", cfg.window_seconds);
    root.get("min_training_seconds", cfg.min_training_seconds);
    root.finish();
    cfg.validate();
    return cfg;
}

json config_to_json(const ToolConfig& cfg) {
    const auto& s = cfg.segmenter;
    const auto& f = cfg.frames;
    const auto& b = cfg.filterbank;
    const auto& t = cfg.training;
    return json{
        {"segmenter",
         {{"band_low", s.band_low},
          {"band_high", s.band_high},
          {"analysis_window", s.analysis_window},
          {"ste_frame", s.ste_frame},
          {"ma_length", s.ma_length},
          {"threshold_divisor", s.threshold_divisor},
          {"consecutive_frames", s.consecutive_frames},
          {"fir_taps", s.fir_taps},
          {"min_threshold_db", s.min_threshold_db},
          {"refine_endpoints", s.refine_endpoints}}},
        {"frames",
         {{"frame_length", f.frame_length},
          {"overlap_fraction", f.overlap_fraction},
          {"preemphasis_coeff", f.preemphasis_coeff},
          {"fft_size", f.fft_size}}},
        {"filterbank",
         {{"layout", b.layout == FilterbankLayout::Mel ? "mel" : "modified_linear"},
          {"num_filters", b.num_filters},
          {"f_low", b.f_low},
          {"f_high", b.f_high},
          {"normalization", b.normalization == FilterNormalization::UnitArea ? "unit_area" : "peak_unity"}}},
        {"num_coeffs", cfg.num_coeffs},
        {"training",
         {{"num_components", t.num_components},
          {"max_iterations", t.max_iterations},
          {"log_likelihood_tolerance", t.log_likelihood_tolerance},
          {"variance_floor", t.variance_floor},
          {"rng_seed", t.rng_seed},
          {"kmeans_iterations", t.kmeans_iterations}}},
        {"evaluation",
         {{"budget_seconds", cfg.evaluation.budget_seconds},
          {"folds", cfg.evaluation.folds},
          {"max_fpr", cfg.evaluation.max_fpr}}},
        {"thresholds", cfg.thresholds},
        {"species_manifest", cfg.species_manifest},
        {"window_seconds", cfg.window_seconds},
        {"min_training_seconds", cfg.min_training_seconds},
    };
}

ToolConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::IoError, "cannot open config " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(Errc::InvalidConfig, path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

void save_config(const std::filesystem::path& path, const ToolConfig& cfg) {
    std::ofstream out(path);
    if (!out) throw Error(Errc::IoError, "cannot write config " + path.string());
    out << config_to_json(cfg).dump(2) << '\n';
}

fixtures::SceneScript scene_from_json(const json& j) {
    fixtures::SceneScript script;
    Reader root(j, "scene");
    root.get("duration", script.duration);
    std::string noise = "white";
    root.get("noise", noise);
    script.noise = parse_noise(noise);
    root.get("noise_level_db", script.noise_level_db);
    root.get("noise_band_low", script.noise_band_low);
    root.get("noise_band_high", script.noise_band_high);
    if (const json* sp = root.child("species")) {
        for (const auto& item : *sp) {
            Reader r(item, "species");
            fixtures::SyntheticSpecies s;
            r.get("code", s.code);
            r.get("carrier_hz", s.carrier_hz);
            r.get("fm_depth_hz", s.fm_depth_hz);
            r.get("fm_rate_hz", s.fm_rate_hz);
            r.get("harmonics", s.harmonics);
            r.get("band_low", s.band_low);
            r.get("band_high", s.band_high);
            r.get("carrier_jitter", s.carrier_jitter);
            if (const json* pp = r.child("pulse_pattern")) {
                for (const auto& p : *pp) {
                    if (!p.is_array() || p.size() != 2)
                        throw Error(Errc::InvalidConfig, "pulse_pattern entries are [on, off] pairs");
                    s.pulse_pattern.push_back({p[0].get<double>(), p[1].get<double>()});
                }
            }
            r.finish();
            script.species.push_back(std::move(s));
        }
    }
    if (const json* ev = root.child("events")) {
        for (const auto& item : *ev) {
            Reader r(item, "event");
            fixtures::SceneEvent e;
            r.get("time", e.time);
            r.get("species", e.species);
            r.get("snr_db", e.snr_db);
            r.finish();
            script.events.push_back(std::move(e));
        }
    }
    root.finish();
    script.validate();
    return script;
}

json scene_to_json(const fixtures::SceneScript& script) {
    json species = json::array();
    for (const auto& s : script.species) {
        json pattern = json::array();
        for (const auto& p : s.pulse_pattern) pattern.push_back({p.on, p.off});
        species.push_back({{"code", s.code},
                           {"carrier_hz", s.carrier_hz},
                           {"fm_depth_hz", s.fm_depth_hz},
                           {"fm_rate_hz", s.fm_rate_hz},
                           {"harmonics", s.harmonics},
                           {"pulse_pattern", pattern},
                           {"band_low", s.band_low},
                           {"band_high", s.band_high},
                           {"carrier_jitter", s.carrier_jitter}});
    }
    json events = json::array();
    for (const auto& e : script.events)
        events.push_back({{"time", e.time}, {"species", e.species}, {"snr_db", e.snr_db}});
    return json{{"duration", script.duration},
                {"noise", script.noise == fixtures::NoiseKind::Pink ? "pink" : "white"},
                {"noise_level_db", script.noise_level_db},
                {"noise_band_low", script.noise_band_low},
                {"noise_band_high", script.noise_band_high},
                {"species", species},
                {"events", events}};
}

}  // namespace frogid
