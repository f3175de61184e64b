#include "frogid/audio_io.hpp"
#include "frogid/cli.hpp"
#include "frogid/config.hpp"
#include "frogid/errors.hpp"
#include "frogid/fixtures.hpp"
#include "frogid/gmm.hpp"
#include "frogid/model_store.hpp"
#include "frogid/random.hpp"
#include "support.hpp"

#include <doctest.h>

#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <random>
#include <sstream>

using namespace frogid;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> v;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);)
        if (!l.empty()) v.push_back(l);
    return v;
}

std::vector<std::string> fields(const std::string& line) {
    std::vector<std::string> v;
    std::istringstream in(line);
    for (std::string f; std::getline(in, f, ',');) v.push_back(f);
    return v;
}

// A small, quick configuration shared by the tests that train models.
void write_quick_config(const fs::path& p) {
    ToolConfig cfg;
    cfg.training.num_components = 4;
    cfg.training.max_iterations = 30;
    cfg.min_training_seconds = 8.0;
    save_config(p, cfg);
}

// Corpus recordings for each default species, labels merged into one file.
fs::path make_corpus(const test::TempDir& dir, const fs::path& config, double seconds_each,
                     std::map<std::string, double> overrides = {}) {
    std::string merged = "file,species_code,start_sample,end_sample\n";
    std::uint64_t seed = 100;
    for (const auto& sp : fixtures::default_catalog()) {
        const double secs = overrides.contains(sp.code) ? overrides[sp.code] : seconds_each;
        const fs::path wav = dir / (sp.code + ".wav");
        const fs::path truth = dir / (sp.code + "_truth.csv");
        const Run r = cli({"--config", config.string(), "--seed", std::to_string(seed++), "synth", "--preset",
                           "corpus", "--species", sp.code, "--duration", std::to_string(secs), "--rate", "16000",
                           "-o", wav.string(), "--truth", truth.string()});
        REQUIRE_MESSAGE(r.code == 0, r.err);
        const auto rows = lines(test::slurp(truth));
        for (std::size_t i = 1; i < rows.size(); ++i) merged += rows[i] + "\n";
    }
    const fs::path labels = dir / "labels.csv";
    std::ofstream(labels) << merged;
    return labels;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> m;
    for (const auto& e : fs::directory_iterator(dir)) m[e.path().filename().string()] = test::slurp(e.path());
    return m;
}

}  // namespace

TEST_CASE("config JSON round trip") {
    ToolConfig cfg;
    cfg.segmenter.min_threshold_db = 2.5;
    cfg.filterbank.layout = FilterbankLayout::Mel;
    cfg.filterbank.normalization = FilterNormalization::UnitArea;
    cfg.training.num_components = 16;
    cfg.training.rng_seed = 0xfedcba9876543210ULL;
    cfg.evaluation.max_fpr = 0.01;
    cfg.thresholds = {0.1, -2.25, 3.0};
    cfg.species_manifest = {"a", "b", "c"};
    CHECK(config_from_json(config_to_json(cfg)) == cfg);
    CHECK(config_from_json(nlohmann::json::object()) == ToolConfig{});

    auto j = config_to_json(cfg);
    j["segmenter"]["ma_lenght"] = 12;
    CHECK_THROWS_AS(config_from_json(j), Error);
    j = config_to_json(cfg);
    j["colour"] = "green";
    try {
        config_from_json(j);
        FAIL("accepted an unknown key");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::InvalidConfig);
        CHECK(std::string(e.what()).find("colour") != std::string::npos);
    }
    j = config_to_json(cfg);
    j["filterbank"]["layout"] = "bark";
    CHECK_THROWS_AS(config_from_json(j), Error);
}

TEST_CASE("config fingerprint follows feature settings only") {
    ToolConfig a, b;
    b.training.num_components = 3;
    b.thresholds = {1.0};
    CHECK(a.fingerprint() == b.fingerprint());
    b.filterbank.num_filters = 30;
    CHECK(a.fingerprint() != b.fingerprint());
}

TEST_CASE("scene script JSON round trip renders identically") {
    auto script = fixtures::random_scene_script(20.0, fixtures::default_catalog(), {{"s01", 2}, {"s03", 2}}, 3);
    script.noise = fixtures::NoiseKind::Pink;
    const auto back = scene_from_json(scene_to_json(script));
    CHECK(scene_to_json(back) == scene_to_json(script));
    CHECK(fixtures::synthesize_scene(back, 16000, 9).clip.samples ==
          fixtures::synthesize_scene(script, 16000, 9).clip.samples);
}

TEST_CASE("model store round trip is exact") {
    test::TempDir dir("store");
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<GmmModel> models;
    for (const char* code : {"x1", "x2"}) {
        Matrix data(300, 6);
        for (std::size_t i = 0; i < data.rows(); ++i)
            for (std::size_t d = 0; d < data.cols(); ++d) data(i, d) = n(rng) * (d + 1) + (i % 3);
        TrainingConfig tc;
        tc.num_components = 3;
        GmmModel m = em_fit(data, tc);
        m.species_code = code;
        m.feature_spec_fingerprint = "fp-1";
        m.training_seconds = 1.0 / 3.0;
        models.push_back(std::move(m));
    }
    save_model_store(dir.path(), models);
    CHECK(read_manifest(dir.path()).species == std::vector<std::string>{"x1", "x2"});
    const auto back = load_model_store(dir.path());
    REQUIRE(back.size() == 2);
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(back[k].weights == models[k].weights);
        CHECK(back[k].means.data() == models[k].means.data());
        CHECK(back[k].variances.data() == models[k].variances.data());
        CHECK(back[k].training_seconds == models[k].training_seconds);
        CHECK(back[k].species_code == models[k].species_code);
    }

    auto j = model_to_json(models[0]);
    j["weights"][0] = -1.0;
    CHECK_THROWS_AS(model_from_json(j), Error);
    j = model_to_json(models[0]);
    j.erase("variances");
    CHECK_THROWS_AS(model_from_json(j), Error);

    auto tampered = model_to_json(models[1]);
    tampered["feature_fingerprint"] = "fp-2";
    std::ofstream(dir / "x2.json") << tampered.dump();
    CHECK_THROWS_AS(load_model_store(dir.path()), Error);
}

TEST_CASE("label files resolve relative paths against their directory") {
    test::TempDir dir("labels");
    fs::create_directories(dir / "sub");
    write_labels((dir / "sub" / "l.csv").string(), {{"a.wav", "s01", 10, 20}, {"/abs/b.wav", "s02", 0, 5}});
    const auto rows = read_labels((dir / "sub" / "l.csv").string());
    REQUIRE(rows.size() == 2);
    CHECK(fs::path(rows[0].file) == dir / "sub" / "a.wav");
    CHECK(rows[1].file == "/abs/b.wav");
    CHECK(rows[0].end == 20);
    std::ofstream(dir / "bad.csv") << "file,species_code,start_sample,end_sample\nx.wav,s01,4\n";
    CHECK_THROWS_AS(read_labels((dir / "bad.csv").string()), Error);
}

TEST_CASE("exit codes") {
    test::TempDir dir("exit");
    const std::string missing = (dir / "nowhere.wav").string();
    Run r = cli({"segment", missing});
    CHECK(r.code == kExitIo);
    CHECK(r.err.find(missing) != std::string::npos);

    CHECK(cli({"segment", "--frobnicate", missing}).code == kExitUsage);
    CHECK(cli({}).code == kExitUsage);
    CHECK(cli({"--help"}).code == kExitOk);

    std::ofstream(dir / "bad.json") << R"({"segmenter": {"nope": 1}})";
    r = cli({"--config", (dir / "bad.json").string(), "segment", missing});
    CHECK(r.code == kExitUsage);
    CHECK(r.err.find("nope") != std::string::npos);

    std::ofstream(dir / "broken.wav") << "RIFF....WAVEjunk";
    CHECK(cli({"segment", (dir / "broken.wav").string()}).code == kExitIo);
}

TEST_CASE("seed is printed when drawn") {
    test::TempDir dir("seed");
    const Run r = cli({"synth", "--preset", "noise", "--duration", "1", "-o", (dir / "n.wav").string()});
    REQUIRE(r.code == 0);
    CHECK(r.err.rfind("seed: ", 0) == 0);
    const Run s = cli({"--seed", "4", "synth", "--preset", "noise", "--duration", "1", "-o", (dir / "m.wav").string()});
    CHECK(s.err.find("seed:") == std::string::npos);
}

TEST_CASE("segment: silence and bursts") {
    test::TempDir dir("segment");
    const fs::path silent = dir / "silent.wav";
    write_wav(silent, std::vector<double>(48000 * 3, 0.0), 48000);
    Run r = cli({"segment", silent.string()});
    REQUIRE(r.code == 0);
    CHECK(lines(r.out) == std::vector<std::string>{"file,window_id,start_sample,end_sample,start_seconds,end_seconds"});

    const fs::path bursts = dir / "bursts.wav";
    const fs::path truth = dir / "bursts_truth.csv";
    REQUIRE(cli({"--seed", "1", "synth", "--preset", "burst", "--duration", "12", "-o", bursts.string(), "--truth",
                 truth.string()})
                .code == 0);
    const fs::path csv = dir / "seg.csv";
    r = cli({"segment", bursts.string(), "-o", csv.string()});
    REQUIRE(r.code == 0);
    const auto rows = lines(test::slurp(csv));
    const auto want = read_labels(truth.string());
    REQUIRE(rows.size() == want.size() + 1);
    for (std::size_t i = 0; i < want.size(); ++i) {
        const auto f = fields(rows[i + 1]);
        REQUIRE(f.size() == 6);
        CHECK(std::abs(std::stod(f[2]) - double(want[i].start)) <= 480.0);
        CHECK(std::abs(std::stod(f[3]) - double(want[i].end)) <= 480.0);
        CHECK(std::stod(f[4]) == doctest::Approx(std::stod(f[2]) / 48000.0).epsilon(1e-6));
    }
}

TEST_CASE("train, scan and store handling") {
    test::TempDir dir("pipeline");
    const fs::path config = dir / "config.json";
    write_quick_config(config);
    const fs::path labels = make_corpus(dir, config, 20.0, {{"s05", 6.0}});
    const fs::path store = dir / "models";
    Run r = cli({"--config", config.string(), "--seed", "11", "train", "--labels", labels.string(), "-o",
                 store.string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(r.err.find("s05") != std::string::npos);
    CHECK(r.err.find("warning") != std::string::npos);
    for (const char* f : {"s01.json", "s02.json", "s03.json", "s04.json", "s05.json", "manifest.json"})
        CHECK(fs::exists(store / f));
    CHECK(read_manifest(store).species == std::vector<std::string>{"s01", "s02", "s03", "s04", "s05"});

    SUBCASE("training is reproducible") {
        const fs::path again = dir / "again";
        REQUIRE(cli({"--config", config.string(), "--seed", "11", "train", "--labels", labels.string(), "-o",
                     again.string()})
                    .code == 0);
        CHECK(snapshot(again) == snapshot(store));
    }

    SUBCASE("empty labels") {
        std::ofstream(dir / "empty.csv") << "file,species_code,start_sample,end_sample\n";
        r = cli({"--config", config.string(), "--seed", "1", "train", "--labels", (dir / "empty.csv").string(), "-o",
                 (dir / "none").string()});
        CHECK(r.code != 0);
    }

    SUBCASE("scan reports presence and leaves the store alone") {
        const auto before = snapshot(store);
        const fs::path scene = dir / "scene.wav";
        REQUIRE(cli({"--seed", "21", "synth", "--preset", "scene", "--calls", "1", "--duration", "30", "--rate",
                     "16000", "-o", scene.string()})
                    .code == 0);
        const fs::path quiet = dir / "quiet.wav";
        write_wav(quiet, std::vector<double>(16000 * 5, 0.0), 16000);
        const fs::path det = dir / "det.csv";
        r = cli({"--config", config.string(), "--thresholds", "0,0,0,0,0", "scan", scene.string(), quiet.string(),
                 "--models", store.string(), "--detections", det.string()});
        REQUIRE_MESSAGE(r.code == 0, r.err);
        const auto rows = lines(r.out);
        REQUIRE(rows.size() == 3);
        CHECK(rows[0] == "file,window,start_s,end_s,s01,s02,s03,s04,s05,single_detection");
        CHECK(fields(rows[2]).size() == 9);
        const auto q = fields(rows[2]);
        for (int k = 4; k < 9; ++k) CHECK(q[k] == "0");
        const auto s = fields(rows[1]);
        int present = 0;
        for (int k = 4; k < 9; ++k) present += s[k] == "1";
        CHECK(present >= 3);
        CHECK(lines(test::slurp(det)).size() >= 4);
        CHECK(r.err.find("scanned 2 files") != std::string::npos);
        CHECK(snapshot(store) == before);
    }

    SUBCASE("a scene with one species yields a one-hot presence row") {
        const auto script = fixtures::random_scene_script(40.0, fixtures::default_catalog(), {{"s02", 4}}, 8);
        std::ofstream(dir / "only_s02.json") << scene_to_json(script).dump();
        REQUIRE(cli({"--seed", "3", "synth", "--script", (dir / "only_s02.json").string(), "--rate", "16000", "-o",
                     (dir / "only_s02.wav").string()})
                    .code == 0);
        r = cli({"--config", config.string(), "--thresholds", "0,0,0,0,0", "scan", (dir / "only_s02.wav").string(),
                 "--models", store.string()});
        REQUIRE_MESSAGE(r.code == 0, r.err);
        const auto rows = lines(r.out);
        REQUIRE(rows.size() == 2);
        const auto f = fields(rows[1]);
        CHECK(std::vector<std::string>(f.begin() + 4, f.begin() + 9) ==
              std::vector<std::string>{"0", "1", "0", "0", "0"});
    }

    SUBCASE("scan rejects a store built with other features") {
        ToolConfig other = load_config(config);
        other.filterbank.num_filters = 30;
        save_config(dir / "other.json", other);
        const fs::path quiet = dir / "quiet.wav";
        write_wav(quiet, std::vector<double>(16000, 0.0), 16000);
        r = cli({"--config", (dir / "other.json").string(), "scan", quiet.string(), "--models", store.string()});
        CHECK(r.code == kExitData);
        INFO(r.err);
        CHECK(r.err.find("FingerprintMismatch") != std::string::npos);
    }
}

TEST_CASE("roc command") {
    test::TempDir dir("roc");
    std::ofstream(dir / "perfect.csv") << "fold,score,true_species,hyp_species\n"
                                          "1,5,a,a\n1,4,a,a\n1,-1,b,a\n1,-2,none,a\n"
                                          "1,3,b,b\n1,2,b,b\n1,0.5,a,b\n";
    Run r = cli({"roc", "--scores", (dir / "perfect.csv").string(), "-o", (dir / "out").string(), "--max-fpr", "0"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(lines(r.out).size() == 1);
    const auto ops = lines(test::slurp(dir / "out" / "operating_points.csv"));
    REQUIRE(ops.size() == 3);
    const auto a = fields(ops[1]);
    CHECK(a[0] == "a");
    CHECK(std::stod(a[1]) == 4.0);
    CHECK(std::stod(a[2]) == 1.0);
    CHECK(std::stod(a[3]) == 0.0);
    CHECK(std::stod(a[4]) == 1.0);
    CHECK(fs::exists(dir / "out" / "roc_b.csv"));

    std::ofstream(dir / "degenerate.csv") << "fold,score,true_species,hyp_species\n1,5,a,a\n1,4,a,a\n1,3,b,b\n";
    r = cli({"roc", "--scores", (dir / "degenerate.csv").string(), "-o", (dir / "deg").string()});
    CHECK(r.code == kExitData);
    CHECK(r.err.find("class a") != std::string::npos);
    CHECK(r.err.find("class b") != std::string::npos);
}

TEST_CASE("synth and segment output is byte-identical across runs") {
    test::TempDir dir("determinism");
    std::string first;
    for (int run = 0; run < 2; ++run) {
        const fs::path wav = dir / ("s" + std::to_string(run) + ".wav");
        REQUIRE(cli({"--seed", "99", "synth", "--preset", "scene", "--calls", "2", "--duration", "20", "--rate", "16000",
                     "-o", wav.string(), "--cue-every", "10"})
                    .code == 0);
        const Run r = cli({"--jobs", run == 0 ? "1" : "3", "segment", wav.string()});
        REQUIRE(r.code == 0);
        std::string body = r.out.substr(r.out.find('\n'));
        for (std::size_t p; (p = body.find(wav.string())) != std::string::npos;) body.replace(p, wav.string().size(), "F");
        if (run == 0)
            first = test::slurp(wav) + body;
        else
            CHECK(test::slurp(wav) + body == first);
    }
}
