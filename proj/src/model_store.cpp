#include "frogid/model_store.hpp"

#include "frogid/errors.hpp"

#include <fstream>

namespace frogid {

using nlohmann::json;

namespace {

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto row = m.row(r);
        rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    return rows;
}

Matrix matrix_from_json(const json& j, std::size_t rows, std::size_t cols, const char* what) {
    if (!j.is_array() || j.size() != rows)
        throw Error(Errc::InvalidModel, std::string(what) + " must have " + std::to_string(rows) + " rows");
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        const auto row = j[r].get<std::vector<double>>();
        if (row.size() != cols)
            throw Error(Errc::InvalidModel, std::string(what) + " row width differs from dim");
        for (std::size_t c = 0; c < cols; ++c) m(r, c) = row[c];
    }
    return m;
}

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
    try {
        json j;
        in >> j;
        return j;
    } catch (const json::exception& e) {
        throw Error(Errc::InvalidModel, path.string() + ": " + e.what());
    }
}

void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
    out << j.dump(1) << '\n';
    if (!out) throw Error(Errc::IoError, "write failed: " + path.string());
}

}  // namespace

json model_to_json(const GmmModel& model) {
    return json{{"format_version", kModelFormatVersion},
                {"species_code", model.species_code},
                {"num_components", model.num_components()},
                {"dim", model.dim()},
                {"feature_fingerprint", model.feature_spec_fingerprint},
                {"weights", model.weights},
                {"means", matrix_to_json(model.means)},
                {"variances", matrix_to_json(model.variances)},
                {"training",
                 {{"seconds", model.training_seconds},
                  {"em_iterations", model.em_iterations},
                  {"final_log_likelihood", model.final_log_likelihood}}}};
}

GmmModel model_from_json(const json& j) {
    GmmModel m;
    try {
        const int version = j.at("format_version").get<int>();
        if (version != kModelFormatVersion)
            throw Error(Errc::InvalidModel, "unsupported model format_version " + std::to_string(version));
        m.species_code = j.at("species_code").get<std::string>();
        const auto M = j.at("num_components").get<std::size_t>();
        const auto D = j.at("dim").get<std::size_t>();
        m.feature_spec_fingerprint = j.at("feature_fingerprint").get<std::string>();
        m.weights = j.at("weights").get<std::vector<double>>();
        m.means = matrix_from_json(j.at("means"), M, D, "means");
        m.variances = matrix_from_json(j.at("variances"), M, D, "variances");
        if (j.contains("training")) {
            const auto& t = j.at("training");
            m.training_seconds = t.value("seconds", 0.0);
            m.em_iterations = t.value("em_iterations", 0);
            m.final_log_likelihood = t.value("final_log_likelihood", 0.0);
        }
    } catch (const json::exception& e) {
        throw Error(Errc::InvalidModel, std::string("malformed model document: ") + e.what());
    }
    m.validate();
    return m;
}

void save_model_store(const std::filesystem::path& dir, const std::vector<GmmModel>& models) {
    if (models.empty()) throw Error(Errc::InvalidModel, "no models to save");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(Errc::IoError, "cannot create " + dir.string() + ": " + ec.message());
    const std::string& fp = models.front().feature_spec_fingerprint;
    json species = json::array();
    for (const auto& m : models) {
        if (m.feature_spec_fingerprint != fp)
            throw Error(Errc::FingerprintMismatch, "models in one store must share a feature fingerprint");
        write_json(dir / (m.species_code + ".json"), model_to_json(m));
        species.push_back(m.species_code);
    }
    write_json(dir / "manifest.json",
               json{{"format_version", kModelFormatVersion}, {"species", species}, {"feature_fingerprint", fp}});
}

ModelStoreManifest read_manifest(const std::filesystem::path& dir) {
    const json j = read_json(dir / "manifest.json");
    ModelStoreManifest man;
    try {
        if (j.at("format_version").get<int>() != kModelFormatVersion)
            throw Error(Errc::InvalidModel, "unsupported manifest format_version");
        man.species = j.at("species").get<std::vector<std::string>>();
        man.fingerprint = j.at("feature_fingerprint").get<std::string>();
    } catch (const json::exception& e) {
        throw Error(Errc::InvalidModel, std::string("malformed manifest: ") + e.what());
    }
    if (man.species.empty()) throw Error(Errc::InvalidModel, "manifest lists no species");
    return man;
}

std::vector<GmmModel> load_model_store(const std::filesystem::path& dir) {
    const auto man = read_manifest(dir);
    std::vector<GmmModel> models;
    for (const auto& code : man.species) {
        GmmModel m = model_from_json(read_json(dir / (code + ".json")));
        if (m.species_code != code)
            throw Error(Errc::InvalidModel, code + ".json holds species '" + m.species_code + "'");
        if (m.feature_spec_fingerprint != man.fingerprint)
            throw Error(Errc::FingerprintMismatch, code + ".json fingerprint differs from the manifest");
        models.push_back(std::move(m));
    }
    return models;
}

}  // namespace frogid
