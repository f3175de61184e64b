#include "frogid/cli.hpp"

#include "frogid/audio_io.hpp"
#include "frogid/config.hpp"
#include "frogid/detector.hpp"
#include "frogid/errors.hpp"
#include "frogid/evaluation.hpp"
#include "frogid/features.hpp"
#include "frogid/fixtures.hpp"
#include "frogid/gmm.hpp"
#include "frogid/model_store.hpp"
#include "frogid/parallel.hpp"
#include "frogid/random.hpp"
#include "frogid/segmentation.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <sstream>

namespace frogid {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string num(double v, int precision = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", precision, v);
    return buf;
}

std::string num_exact(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(line);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<double> parse_threshold_list(const std::string& text) {
    std::vector<double> out;
    for (const auto& field : split(text, ',')) {
        const std::string f = trim(field);
        char* end = nullptr;
        const double v = std::strtod(f.c_str(), &end);
        if (f.empty() || end != f.c_str() + f.size() || !std::isfinite(v))
            throw Error(Errc::InvalidConfig, "--thresholds expects comma-separated reals, got '" + text + "'");
        out.push_back(v);
    }
    return out;
}

// Output sink: a file, or the caller's stream for "-".
class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
        if (path.empty() || path == "-") return;
        file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
        if (!*file_) throw Error(Errc::IoError, "cannot write " + path);
        stream_ = file_.get();
    }
    std::ostream& operator*() { return *stream_; }

private:
    std::unique_ptr<std::ofstream> file_;
    std::ostream* stream_;
};

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    int jobs = 1;
    std::string thresholds;
};

struct Context {
    Globals g;
    ToolConfig cfg;
    std::ostream& out;
    std::ostream& err;

    std::uint64_t seed() {
        if (!g.seed) {
            std::random_device rd;
            g.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
            err << "seed: " << *g.seed << '\n';
        }
        return *g.seed;
    }
};

struct LoadedAudio {
    AudioClip clip;
    std::vector<SampleWindow> windows;
};

LoadedAudio load_audio(const std::string& path, double window_seconds) {
    LoadedAudio a;
    a.clip = load_wav(path);
    const auto cues = read_cue_points(path);
    a.windows = windows_from_cues(a.clip, cues, window_seconds);
    return a;
}

int analysis_blocks(const SampleWindow& w, const SegmenterConfig& cfg, int rate) {
    const auto block = static_cast<std::size_t>(std::llround(cfg.analysis_window * rate));
    return static_cast<int>((w.length() + block - 1) / block);
}

// Per-file outcome for commands that keep going after a bad input.
struct FileReport {
    std::string text;
    std::string error;
    int code = kExitOk;
};

int worst(int a, int b) {
    // I/O failures outrank data errors.
    if (a == kExitIo || b == kExitIo) return kExitIo;
    return std::max(a, b);
}

int code_for(const Error& e) {
    if (is_io_error(e.code())) return kExitIo;
    if (e.code() == Errc::InvalidConfig) return kExitUsage;
    return kExitData;
}

// ---------------------------------------------------------------- segment

struct SegmentArgs {
    std::vector<std::string> files;
    std::string out = "-";
};

int cmd_segment(Context& ctx, const SegmentArgs& a) {
    const int inner_jobs = a.files.size() == 1 ? ctx.g.jobs : 1;
    std::vector<FileReport> reports(a.files.size());
    parallel_for(a.files.size(), ctx.g.jobs, [&](std::size_t i) {
        auto& rep = reports[i];
        const std::string& path = a.files[i];
        try {
            const auto audio = load_audio(path, ctx.cfg.window_seconds);
            const int rate = audio.clip.sample_rate;
            std::ostringstream rows;
            int next_id = 0;
            for (const auto& w : audio.windows) {
                for (const auto& s : segment_audio(audio.clip, w, ctx.cfg.segmenter, next_id, inner_jobs))
                    rows << path << ',' << s.window_id << ',' << s.start << ',' << s.end << ','
                         << num(static_cast<double>(s.start) / rate) << ','
                         << num(static_cast<double>(s.end) / rate) << '\n';
                next_id += analysis_blocks(w, ctx.cfg.segmenter, rate);
            }
            rep.text = rows.str();
        } catch (const Error& e) {
            rep.error = path + ": " + e.what();
            rep.code = code_for(e);
        }
    });

    Sink sink(a.out, ctx.out);
    *sink << "file,window_id,start_sample,end_sample,start_seconds,end_seconds\n";
    int code = kExitOk;
    for (const auto& r : reports) {
        *sink << r.text;
        if (!r.error.empty()) ctx.err << "error: " << r.error << '\n';
        code = worst(code, r.code);
    }
    return code;
}

// ---------------------------------------------------------------- labels

std::vector<std::string> species_order(const ToolConfig& cfg, const std::vector<LabelRow>& rows) {
    if (!cfg.species_manifest.empty()) return cfg.species_manifest;
    std::set<std::string> codes;
    for (const auto& r : rows) codes.insert(r.species);
    return {codes.begin(), codes.end()};
}

struct SpeciesFeatures {
    std::vector<FeatureMatrix> segments;
    std::vector<double> durations;
};

// Loads each referenced file once and extracts the features of every
// labelled segment, grouped by species in `order`.
std::vector<SpeciesFeatures> featurize_labels(Context& ctx, const std::vector<LabelRow>& rows,
                                              const std::vector<std::string>& order) {
    std::map<std::string, std::size_t> index;
    for (std::size_t k = 0; k < order.size(); ++k) index[order[k]] = k;
    std::set<std::string> unknown;
    std::vector<std::string> files;
    std::map<std::string, std::vector<const LabelRow*>> by_file;
    for (const auto& r : rows) {
        if (!index.contains(r.species)) {
            if (unknown.insert(r.species).second)
                ctx.err << "warning: species '" << r.species << "' is not in species_manifest; ignored\n";
            continue;
        }
        if (!by_file.contains(r.file)) files.push_back(r.file);
        by_file[r.file].push_back(&r);
    }

    struct Item {
        std::size_t species;
        FeatureMatrix features;
        double seconds;
    };
    std::vector<std::vector<Item>> per_file(files.size());
    std::vector<std::string> warnings(files.size());
    parallel_for(files.size(), ctx.g.jobs, [&](std::size_t f) {
        const AudioClip clip = load_wav(files[f]);
        FeatureExtractor fx(ctx.cfg.frames, ctx.cfg.filterbank, ctx.cfg.num_coeffs, clip.sample_rate);
        for (const LabelRow* r : by_file[files[f]]) {
            if (r->end > clip.size() || r->start >= r->end)
                throw Error(Errc::InvalidConfig, files[f] + ": label [" + std::to_string(r->start) + ", " +
                                                     std::to_string(r->end) + ") lies outside the clip");
            const Segment seg{r->start, r->end, 0};
            try {
                per_file[f].push_back({index.at(r->species), fx.extract(clip, seg),
                                       static_cast<double>(seg.length()) / clip.sample_rate});
            } catch (const Error& e) {
                if (e.code() != Errc::SegmentTooShort) throw;
                warnings[f] += "warning: " + files[f] + ": segment at sample " + std::to_string(r->start) +
                               " is shorter than one feature frame; skipped\n";
            }
        }
    });

    std::vector<SpeciesFeatures> out(order.size());
    for (std::size_t f = 0; f < files.size(); ++f) {
        ctx.err << warnings[f];
        for (auto& item : per_file[f]) {
            out[item.species].segments.push_back(std::move(item.features));
            out[item.species].durations.push_back(item.seconds);
        }
    }
    return out;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
    std::string labels;
    std::string out_dir;
    int components = 0;
};

int cmd_train(Context& ctx, const TrainArgs& a) {
    const auto rows = read_labels(a.labels);
    const auto order = species_order(ctx.cfg, rows);
    if (order.empty()) {
        ctx.err << "error: no labelled species to train\n";
        return kExitData;
    }
    TrainingConfig tc = ctx.cfg.training;
    if (a.components > 0) tc.num_components = a.components;
    tc.validate();
    const std::uint64_t seed = ctx.seed();
    const auto data = featurize_labels(ctx, rows, order);
    const std::string fp = ctx.cfg.fingerprint();

    std::vector<std::optional<GmmModel>> models(order.size());
    std::vector<std::string> notes(order.size());
    parallel_for(order.size(), ctx.g.jobs, [&](std::size_t k) {
        const auto& sp = data[k];
        double seconds = 0.0;
        for (double d : sp.durations) seconds += d;
        std::ostringstream note;
        if (seconds < ctx.cfg.min_training_seconds)
            note << "warning: " << order[k] << " has " << num(seconds, 2) << " s of labelled audio, below "
                 << ctx.cfg.min_training_seconds << " s; identification may degrade\n";
        std::vector<std::size_t> all(sp.segments.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        try {
            if (all.empty()) throw Error(Errc::InsufficientData, "no usable labelled segments");
            const Matrix frames = stack_frames(sp.segments, all);
            TrainingConfig local = tc;
            local.rng_seed = derive_seed(seed, k);
            FitReport report;
            GmmModel m = em_fit(frames, local, &report);
            m.species_code = order[k];
            m.feature_spec_fingerprint = fp;
            m.training_seconds = seconds;
            note << "trained " << order[k] << ": " << num(seconds, 2) << " s, " << frames.rows() << " frames, "
                 << report.iterations << " EM iterations\n";
            models[k] = std::move(m);
        } catch (const Error& e) {
            note << "warning: skipping " << order[k] << ": " << e.what() << '\n';
        }
        notes[k] = note.str();
    });

    std::vector<GmmModel> trained;
    for (std::size_t k = 0; k < order.size(); ++k) {
        ctx.err << notes[k];
        if (models[k]) trained.push_back(std::move(*models[k]));
    }
    if (trained.empty()) {
        ctx.err << "error: no species could be trained\n";
        return kExitData;
    }
    save_model_store(a.out_dir, trained);
    ctx.err << "wrote " << trained.size() << " models to " << a.out_dir << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------- scan

struct ScanArgs {
    std::vector<std::string> files;
    std::string models;
    std::string detections;
    std::string presence = "-";
};

struct ScanFileResult {
    std::string detections;
    std::string presence;
    std::size_t windows = 0, accepted = 0, rejected = 0, skipped = 0;
};

int cmd_scan(Context& ctx, const ScanArgs& a) {
    std::vector<GmmModel> models = load_model_store(a.models);
    if (!ctx.cfg.species_manifest.empty()) {
        std::vector<std::string> codes;
        for (const auto& m : models) codes.push_back(m.species_code);
        if (codes != ctx.cfg.species_manifest)
            throw Error(Errc::InvalidConfig, "species_manifest does not match the model store order");
    }
    std::vector<double> thresholds = ctx.cfg.thresholds;
    if (!ctx.g.thresholds.empty()) thresholds = parse_threshold_list(ctx.g.thresholds);
    if (thresholds.empty()) ctx.err << "warning: no thresholds configured; using 0 for every species\n";
    const SpeciesModelSet set(std::move(models), thresholds);
    if (set.fingerprint() != ctx.cfg.fingerprint())
        throw Error(Errc::FingerprintMismatch, "model store was trained with different feature settings (" +
                                                   set.fingerprint() + " vs " + ctx.cfg.fingerprint() + ")");

    const int inner_jobs = a.files.size() == 1 ? ctx.g.jobs : 1;
    const ScanConfig scan_cfg = ctx.cfg.scan_config(inner_jobs);
    std::vector<ScanFileResult> results(a.files.size());
    std::vector<FileReport> reports(a.files.size());
    parallel_for(a.files.size(), ctx.g.jobs, [&](std::size_t i) {
        const std::string& path = a.files[i];
        auto& res = results[i];
        try {
            const auto audio = load_audio(path, ctx.cfg.window_seconds);
            const int rate = audio.clip.sample_rate;
            std::ostringstream det, pres;
            int next_id = 0;
            for (const auto& w : audio.windows) {
                const WindowScan scan = scan_window(audio.clip, w, set, scan_cfg, next_id);
                next_id += analysis_blocks(w, ctx.cfg.segmenter, rate);
                for (const auto& ev : scan.events) {
                    det << path << ',' << ev.segment.window_id << ','
                        << num(static_cast<double>(ev.segment.start) / rate) << ','
                        << num(static_cast<double>(ev.segment.end) / rate) << ',' << ev.species_code << ','
                        << num(ev.score) << ',' << (ev.accepted ? 1 : 0) << '\n';
                    ++(ev.accepted ? res.accepted : res.rejected);
                }
                pres << path << ',' << w.label << ',' << num(static_cast<double>(w.start) / rate) << ','
                     << num(static_cast<double>(w.end) / rate);
                std::string single;
                for (std::size_t k = 0; k < set.size(); ++k) {
                    pres << ',' << (scan.presence.bits[k] ? 1 : 0);
                    if (scan.presence.detection_counts[k] == 1) single += (single.empty() ? "" : ";") + set.codes()[k];
                }
                pres << ',' << single << '\n';
                res.skipped += scan.segments_skipped;
                ++res.windows;
            }
            res.detections = det.str();
            res.presence = pres.str();
        } catch (const Error& e) {
            reports[i].error = path + ": " + e.what();
            reports[i].code = code_for(e);
        }
    });

    std::optional<Sink> det_sink;
    if (!a.detections.empty()) det_sink.emplace(a.detections, ctx.out);
    Sink pres_sink(a.presence, ctx.out);
    if (det_sink) **det_sink << "file,window_id,start_s,end_s,species_code,lambda_score,accepted\n";
    *pres_sink << "file,window,start_s,end_s";
    for (const auto& c : set.codes()) *pres_sink << ',' << c;
    *pres_sink << ",single_detection\n";

    int code = kExitOk;
    std::size_t files = 0, windows = 0, accepted = 0, rejected = 0, skipped = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (!reports[i].error.empty()) {
            ctx.err << "error: " << reports[i].error << '\n';
            code = worst(code, reports[i].code);
            continue;
        }
        if (det_sink) **det_sink << results[i].detections;
        *pres_sink << results[i].presence;
        ++files;
        windows += results[i].windows;
        accepted += results[i].accepted;
        rejected += results[i].rejected;
        skipped += results[i].skipped;
    }
    ctx.err << "scanned " << files << " files, " << windows << " windows, " << accepted << " accepted, "
            << rejected << " rejected, " << skipped << " segments too short to score\n";
    return code;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
    std::string labels;
    std::string out = "-";
    std::string scores;
    double budget = -1.0;
    int folds = 0;
    int components = 0;
};

int cmd_evaluate(Context& ctx, const EvaluateArgs& a) {
    const auto rows = read_labels(a.labels);
    const auto order = species_order(ctx.cfg, rows);
    if (order.size() < 2) {
        ctx.err << "error: evaluation needs at least two labelled species\n";
        return kExitData;
    }
    CrossValidationConfig cv;
    cv.budget_seconds = a.budget >= 0.0 ? a.budget : ctx.cfg.evaluation.budget_seconds;
    cv.folds = a.folds > 0 ? a.folds : ctx.cfg.evaluation.folds;
    cv.training = ctx.cfg.training;
    if (a.components > 0) cv.training.num_components = a.components;
    cv.training.validate();
    cv.seed = ctx.seed();
    cv.jobs = ctx.g.jobs;

    auto data = featurize_labels(ctx, rows, order);
    LabeledCorpus corpus;
    corpus.codes = order;
    corpus.fingerprint = ctx.cfg.fingerprint();
    for (auto& sp : data) {
        corpus.segments.push_back(std::move(sp.segments));
        corpus.durations.push_back(std::move(sp.durations));
    }
    const CrossValidationResult res = cross_validate(corpus, cv);

    json folds = json::array();
    for (const auto& f : res.folds) {
        folds.push_back({{"fold", f.fold_id},
                         {"wer", f.wer.weighted_error_rate},
                         {"per_species_error", f.wer.per_species_error},
                         {"training_seconds", f.training_seconds},
                         {"confusion", f.confusion}});
        ctx.err << "fold " << f.fold_id << ": WER " << num(f.wer.weighted_error_rate, 4) << '\n';
    }
    const json report{{"species", order},
                      {"budget_seconds", cv.budget_seconds},
                      {"num_components", cv.training.num_components},
                      {"seed", cv.seed},
                      {"folds", folds},
                      {"wer",
                       {{"mean", res.wer.mean},
                        {"median", res.wer.median},
                        {"min", res.wer.min},
                        {"max", res.wer.max}}}};
    ctx.err << "WER mean " << num(res.wer.mean, 4) << " median " << num(res.wer.median, 4) << " min "
            << num(res.wer.min, 4) << " max " << num(res.wer.max, 4) << '\n';
    Sink sink(a.out, ctx.out);
    *sink << report.dump(2) << '\n';

    if (!a.scores.empty()) {
        Sink scores(a.scores, ctx.out);
        *scores << "fold,score,true_species,hyp_species\n";
        for (const auto& f : res.folds)
            for (const auto& s : f.scores)
                *scores << f.fold_id << ',' << num_exact(s.score) << ','
                        << (s.true_class < 0 ? std::string("none") : order[s.true_class]) << ','
                        << order[s.hyp_class] << '\n';
    }
    return kExitOk;
}

// ---------------------------------------------------------------- roc

struct RocArgs {
    std::string scores;
    std::string out_dir;
    double max_fpr = -1.0;
};

int cmd_roc(Context& ctx, const RocArgs& a) {
    std::ifstream in(a.scores);
    if (!in) throw Error(Errc::IoError, "cannot open " + a.scores);
    struct Raw {
        double score;
        std::string truth, hyp;
    };
    std::vector<Raw> raw;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || (line_no == 1 && line.rfind("fold,", 0) == 0)) continue;
        const auto f = split(line, ',');
        if (f.size() != 4) throw Error(Errc::InvalidConfig, a.scores + ":" + std::to_string(line_no) + ": expected 4 fields");
        raw.push_back({std::stod(f[1]), trim(f[2]), trim(f[3])});
    }

    std::vector<std::string> order = ctx.cfg.species_manifest;
    if (order.empty()) {
        std::set<std::string> codes;
        for (const auto& r : raw) {
            codes.insert(r.hyp);
            if (r.truth != "none") codes.insert(r.truth);
        }
        order.assign(codes.begin(), codes.end());
    }
    std::map<std::string, int> index;
    for (std::size_t k = 0; k < order.size(); ++k) index[order[k]] = static_cast<int>(k);
    std::vector<ScoredEvent> events;
    for (const auto& r : raw) {
        if (!index.contains(r.hyp)) throw Error(Errc::InvalidConfig, "unknown species '" + r.hyp + "' in scores");
        const auto t = index.find(r.truth);
        events.push_back({r.score, t == index.end() ? -1 : t->second, index.at(r.hyp)});
    }

    const double max_fpr = a.max_fpr >= 0.0 ? a.max_fpr : ctx.cfg.evaluation.max_fpr;
    std::error_code ec;
    fs::create_directories(a.out_dir, ec);
    if (ec) throw Error(Errc::IoError, "cannot create " + a.out_dir + ": " + ec.message());

    std::vector<std::optional<RocPoint>> picks(order.size());
    std::vector<double> aucs(order.size(), 0.0);
    int code = kExitOk;
    for (std::size_t k = 0; k < order.size(); ++k) {
        try {
            const RocCurve curve = roc_one_vs_all(events, static_cast<int>(k));
            Sink sink((fs::path(a.out_dir) / ("roc_" + order[k] + ".csv")).string(), ctx.out);
            *sink << "threshold,tpr,fpr\n";
            for (const auto& p : curve.points)
                *sink << num_exact(p.threshold) << ',' << num_exact(p.tpr) << ',' << num_exact(p.fpr) << '\n';
            picks[k] = pick_operating_point(curve, max_fpr);
            aucs[k] = curve.auc;
        } catch (const Error& e) {
            if (e.code() != Errc::DegenerateClass) throw;
            ctx.err << "error: class " << order[k] << ": " << e.what() << '\n';
            code = kExitData;
        }
    }

    Sink table((fs::path(a.out_dir) / "operating_points.csv").string(), ctx.out);
    *table << "species_code,threshold,tpr,fpr,auc\n";
    for (std::size_t k = 0; k < order.size(); ++k) {
        if (!picks[k]) continue;
        *table << order[k] << ',' << num_exact(picks[k]->threshold) << ',' << num_exact(picks[k]->tpr) << ','
               << num_exact(picks[k]->fpr) << ',' << num_exact(aucs[k]) << '\n';
    }
    if (code != kExitOk) return code;
    for (std::size_t k = 0; k < order.size(); ++k) ctx.out << (k ? "," : "") << num_exact(picks[k]->threshold);
    ctx.out << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
    std::string script;
    std::string preset;
    std::string species;
    std::string out;
    std::string truth;
    std::string write_script;
    double duration = 60.0;
    double cue_every = 0.0;
    int rate = 48000;
    int calls = 10;
};

fixtures::SceneScript preset_script(const SynthArgs& a, std::uint64_t seed) {
    if (a.preset == "burst") {
        const auto tone = fixtures::tone_burst_species();
        return fixtures::burst_script(a.duration, 2.0, 1.0, 10.0, tone, tone.band_low, tone.band_high);
    }
    if (a.preset == "noise") {
        fixtures::SceneScript s;
        s.duration = a.duration;
        return s;
    }
    if (a.preset == "corpus") {
        std::vector<fixtures::SyntheticSpecies> all = fixtures::default_catalog();
        for (auto extra : {fixtures::overlapping_band_catalog(), fixtures::distractor_catalog()})
            all.insert(all.end(), extra.begin(), extra.end());
        for (const auto& sp : all)
            if (sp.code == a.species) return fixtures::species_corpus_script(sp, a.duration, derive_seed(seed, 7));
        throw Error(Errc::InvalidConfig, "unknown catalog species '" + a.species + "'");
    }
    if (a.preset == "scene") {
        const auto catalog = fixtures::default_catalog();
        std::vector<std::pair<std::string, int>> calls;
        for (const auto& sp : catalog) calls.emplace_back(sp.code, a.calls);
        return fixtures::random_scene_script(a.duration, catalog, calls, derive_seed(seed, 8));
    }
    throw Error(Errc::InvalidConfig, "unknown preset '" + a.preset + "' (burst, noise, corpus, scene)");
}

int cmd_synth(Context& ctx, const SynthArgs& a) {
    if (a.script.empty() == a.preset.empty()) {
        ctx.err << "error: give exactly one of --script or --preset\n";
        return kExitUsage;
    }
    const std::uint64_t seed = ctx.seed();
    fixtures::SceneScript script;
    if (!a.script.empty()) {
        std::ifstream in(a.script);
        if (!in) throw Error(Errc::IoError, "cannot open " + a.script);
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw Error(Errc::InvalidConfig, a.script + ": " + e.what());
        }
        script = scene_from_json(j);
    } else {
        script = preset_script(a, seed);
    }
    const fixtures::Scene scene = fixtures::synthesize_scene(script, a.rate, seed);

    std::vector<CuePoint> cues;
    if (a.cue_every > 0.0) {
        const auto step = static_cast<std::uint64_t>(std::llround(a.cue_every * a.rate));
        for (std::uint64_t p = 0, i = 1; p < scene.clip.size(); p += step, ++i)
            cues.push_back({"w" + std::to_string(i), p});
    }
    write_wav(a.out, scene.clip.samples, a.rate, cues);

    if (!a.truth.empty()) {
        const fs::path base = fs::absolute(a.truth).parent_path();
        const std::string rel = fs::absolute(a.out).lexically_relative(base).generic_string();
        std::vector<LabelRow> rows;
        for (const auto& t : scene.truth) rows.push_back({rel, t.species, t.start, t.end});
        write_labels(a.truth, rows);
    }
    if (!a.write_script.empty()) {
        std::ofstream js(a.write_script);
        if (!js) throw Error(Errc::IoError, "cannot write " + a.write_script);
        js << scene_to_json(script).dump(2) << '\n';
    }
    ctx.err << "wrote " << a.out << ": " << num(scene.clip.duration_seconds(), 2) << " s, " << scene.truth.size()
            << " calls\n";
    return kExitOk;
}

}  // namespace

std::vector<LabelRow> read_labels(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::IoError, "cannot open labels " + path);
    const fs::path base = fs::path(path).parent_path();
    std::vector<LabelRow> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (line_no == 1 && !f.empty() && trim(f[0]) == "file") continue;
        if (f.size() != 4)
            throw Error(Errc::InvalidConfig, path + ":" + std::to_string(line_no) + ": expected 4 fields");
        LabelRow r;
        fs::path audio = trim(f[0]);
        r.file = (audio.is_relative() ? base / audio : audio).lexically_normal().string();
        r.species = trim(f[1]);
        try {
            r.start = std::stoull(trim(f[2]));
            r.end = std::stoull(trim(f[3]));
        } catch (const std::exception&) {
            throw Error(Errc::InvalidConfig, path + ":" + std::to_string(line_no) + ": bad sample index");
        }
        if (r.end <= r.start || r.species.empty())
            throw Error(Errc::InvalidConfig, path + ":" + std::to_string(line_no) + ": empty segment or species");
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_labels(const std::string& path, const std::vector<LabelRow>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::IoError, "cannot write " + path);
    out << "file,species_code,start_sample,end_sample\n";
    for (const auto& r : rows) out << r.file << ',' << r.species << ',' << r.start << ',' << r.end << '\n';
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Frog species detection in long field recordings", "frogid"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_path, "JSON configuration file (default: $FROGID_CONFIG)");
    app.add_option("--seed", g.seed, "Seed for every random choice; drawn and printed when omitted");
    app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--thresholds", g.thresholds, "Per-species acceptance thresholds, comma-separated");

    SegmentArgs seg;
    auto* s_seg = app.add_subcommand("segment", "Write the call segments found in each file");
    s_seg->add_option("files", seg.files, "WAV files")->required();
    s_seg->add_option("-o,--out", seg.out, "Segments CSV (default: stdout)");

    TrainArgs tr;
    auto* s_tr = app.add_subcommand("train", "Train one model per labelled species");
    s_tr->add_option("--labels", tr.labels, "Label CSV: file,species_code,start_sample,end_sample")->required();
    s_tr->add_option("-o,--out", tr.out_dir, "Model store directory")->required();
    s_tr->add_option("--components", tr.components, "Mixture components (overrides the config)");

    ScanArgs sc;
    auto* s_sc = app.add_subcommand("scan", "Detect species in recordings");
    s_sc->add_option("files", sc.files, "WAV files")->required();
    s_sc->add_option("--models", sc.models, "Model store directory")->required();
    s_sc->add_option("--detections", sc.detections, "Detections CSV");
    s_sc->add_option("--presence", sc.presence, "Presence CSV (default: stdout)");

    EvaluateArgs ev;
    auto* s_ev = app.add_subcommand("evaluate", "k-fold cross-validation with a training budget");
    s_ev->add_option("--labels", ev.labels, "Label CSV")->required();
    s_ev->add_option("-o,--out", ev.out, "JSON report (default: stdout)");
    s_ev->add_option("--scores", ev.scores, "Write scored validation events for 'roc'");
    s_ev->add_option("--budget", ev.budget, "Training seconds per species and fold");
    s_ev->add_option("--folds", ev.folds, "Number of folds");
    s_ev->add_option("--components", ev.components, "Mixture components (overrides the config)");

    RocArgs rc;
    auto* s_rc = app.add_subcommand("roc", "Per-species ROC curves and suggested thresholds");
    s_rc->add_option("--scores", rc.scores, "Scores CSV from 'evaluate --scores'")->required();
    s_rc->add_option("-o,--out-dir", rc.out_dir, "Directory for the ROC CSVs")->required();
    s_rc->add_option("--max-fpr", rc.max_fpr, "False-positive ceiling for the operating point");

    SynthArgs sy;
    auto* s_sy = app.add_subcommand("synth", "Render a synthetic scene");
    s_sy->add_option("--script", sy.script, "Scene script JSON");
    s_sy->add_option("--preset", sy.preset, "burst | noise | corpus | scene");
    s_sy->add_option("--calls", sy.calls, "Calls per catalog species for the scene preset");
    s_sy->add_option("--species", sy.species, "Catalog species for the corpus preset");
    s_sy->add_option("--duration", sy.duration, "Preset duration (corpus: seconds of calls)");
    s_sy->add_option("--rate", sy.rate, "Sample rate")->check(CLI::PositiveNumber);
    s_sy->add_option("-o,--out", sy.out, "Output WAV")->required();
    s_sy->add_option("--truth", sy.truth, "Ground-truth label CSV");
    s_sy->add_option("--cue-every", sy.cue_every, "Insert a cue point every N seconds");
    s_sy->add_option("--write-script", sy.write_script, "Save the rendered script as JSON");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int rc_code = app.exit(e, out, err);
        return rc_code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (g.config_path.empty()) {
            if (const char* env = std::getenv("FROGID_CONFIG"); env && *env) g.config_path = env;
        }
        Context ctx{g, g.config_path.empty() ? ToolConfig{} : load_config(g.config_path), out, err};
        if (*s_seg) return cmd_segment(ctx, seg);
        if (*s_tr) return cmd_train(ctx, tr);
        if (*s_sc) return cmd_scan(ctx, sc);
        if (*s_ev) return cmd_evaluate(ctx, ev);
        if (*s_rc) return cmd_roc(ctx, rc);
        if (*s_sy) return cmd_synth(ctx, sy);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return code_for(e);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}

}  // namespace frogid
