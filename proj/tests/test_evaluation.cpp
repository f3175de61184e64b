#include "frogid/errors.hpp"
#include "frogid/evaluation.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <set>

using namespace frogid;

namespace {

// Mann-Whitney form of the area under the ROC curve.
double pairwise_auc(const std::vector<double>& pos, const std::vector<double>& neg) {
    double wins = 0.0;
    for (double p : pos)
        for (double n : neg) wins += p > n ? 1.0 : (p == n ? 0.5 : 0.0);
    return wins / (double(pos.size()) * double(neg.size()));
}

std::vector<ScoredEvent> one_class_events(const std::vector<double>& pos, const std::vector<double>& neg) {
    std::vector<ScoredEvent> ev;
    for (double p : pos) ev.push_back({p, 0, 0});
    for (double n : neg) ev.push_back({n, 1, 0});
    return ev;
}

LabeledCorpus gaussian_corpus(std::size_t species, std::size_t segments, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    LabeledCorpus c;
    c.fingerprint = "fp";
    for (std::size_t s = 0; s < species; ++s) {
        c.codes.push_back("sp" + std::to_string(s));
        c.segments.emplace_back();
        c.durations.emplace_back();
        for (std::size_t i = 0; i < segments; ++i) {
            FeatureMatrix fm;
            fm.values = Matrix(30, 3);
            for (std::size_t t = 0; t < 30; ++t)
                for (std::size_t d = 0; d < 3; ++d) fm.values(t, d) = (d == s % 3 ? 4.0 * double(1 + s / 3) : 0.0) + g(rng);
            c.segments.back().push_back(std::move(fm));
            c.durations.back().push_back(0.5);
        }
    }
    return c;
}

}  // namespace

TEST_CASE("budgeted split partitions every species' segments") {
    const std::vector<std::vector<double>> d{{1, 2, 3, 4, 5, 6}, {0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 9.0}};
    const auto splits = kfold_budgeted_split(d, 4.0, 5, 17);
    REQUIRE(splits.size() == 5);
    std::set<std::vector<std::size_t>> distinct;
    for (const auto& sp : splits) {
        for (std::size_t s = 0; s < 2; ++s) {
            std::vector<std::size_t> all(sp.training[s]);
            all.insert(all.end(), sp.validation[s].begin(), sp.validation[s].end());
            std::sort(all.begin(), all.end());
            std::vector<std::size_t> want(d[s].size());
            std::iota(want.begin(), want.end(), std::size_t{0});
            CHECK(all == want);
            double secs = 0.0;
            for (std::size_t i : sp.training[s]) secs += d[s][i];
            CHECK(secs == doctest::Approx(sp.training_seconds[s]));
            CHECK(secs >= 4.0);
            // Selection stops at the first segment that reaches the budget.
            CHECK(secs < 4.0 + *std::max_element(d[s].begin(), d[s].end()));
        }
        distinct.insert(sp.training[0]);
    }
    CHECK(distinct.size() > 1);
    const auto again = kfold_budgeted_split(d, 4.0, 5, 17);
    for (std::size_t f = 0; f < 5; ++f) CHECK(again[f].training == splits[f].training);
}

TEST_CASE("split refuses species without data beyond the budget") {
    try {
        kfold_budgeted_split({{1.0, 2.0}, {5.0, 5.0}}, 3.0, 2, 1);
        FAIL("expected InsufficientData");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::InsufficientData);
    }
}

TEST_CASE("weighted error rate is the mean per-species error") {
    const Confusion c{{8, 2, 0}, {1, 9, 0}, {0, 0, 5}};
    const WerReport r = weighted_error_rate(c);
    CHECK(r.per_species_error[0] == doctest::Approx(0.2));
    CHECK(r.per_species_error[1] == doctest::Approx(0.1));
    CHECK(r.per_species_error[2] == 0.0);
    CHECK(r.weighted_error_rate == doctest::Approx(0.1));
    try {
        weighted_error_rate({{1, 0}, {0, 0}});
        FAIL("expected EmptyRow");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::EmptyRow);
    }
}

TEST_CASE("ROC curve shape and AUC") {
    SUBCASE("separated scores") {
        const auto ev = one_class_events({5, 6, 7}, {1, 2, 3});
        const RocCurve c = roc_one_vs_all(ev, 0);
        CHECK(c.auc == 1.0);
        CHECK(c.points.front().tpr == 0.0);
        CHECK(c.points.front().fpr == 0.0);
        CHECK(c.points.front().threshold > 7.0);
        CHECK(c.points.back().tpr == 1.0);
        CHECK(c.points.back().fpr == 1.0);
        CHECK(c.points.back().threshold < 1.0);
    }
    SUBCASE("ties and overlap match the pairwise statistic") {
        std::mt19937_64 rng(5);
        std::uniform_int_distribution<int> u(0, 20);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<double> pos(10 + trial), neg(7 + trial);
            for (auto& p : pos) p = u(rng) + 3;
            for (auto& n : neg) n = u(rng);
            const RocCurve c = roc_one_vs_all(one_class_events(pos, neg), 0);
            CHECK(c.auc == doctest::Approx(pairwise_auc(pos, neg)).epsilon(1e-12));
            for (std::size_t i = 1; i < c.points.size(); ++i) {
                CHECK(c.points[i].threshold < c.points[i - 1].threshold);
                CHECK(c.points[i].tpr >= c.points[i - 1].tpr);
                CHECK(c.points[i].fpr >= c.points[i - 1].fpr);
            }
        }
    }
    SUBCASE("only events hypothesized as the class count") {
        std::vector<ScoredEvent> ev = one_class_events({5}, {1});
        ev.push_back({100.0, 1, 1});
        ev.push_back({-100.0, 0, 1});
        CHECK(roc_one_vs_all(ev, 0).auc == 1.0);
    }
    SUBCASE("a class without negatives is degenerate") {
        try {
            roc_one_vs_all(one_class_events({1, 2}, {}), 0);
            FAIL("expected DegenerateClass");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::DegenerateClass);
        }
    }
}

TEST_CASE("operating point: best TPR under the FPR ceiling, ties to the larger threshold") {
    RocCurve c;
    c.points = {{10, 0.0, 0.0}, {8, 0.5, 0.0}, {6, 0.5, 0.0}, {5, 0.8, 0.1}, {2, 1.0, 0.5}, {1, 1.0, 1.0}};
    const RocPoint p = pick_operating_point(c, 0.05);
    CHECK(p.threshold == 8);
    CHECK(p.tpr == 0.5);
    CHECK(pick_operating_point(c, 0.1).threshold == 5);
    CHECK(pick_operating_point(c, 1.0).threshold == 2);
}

TEST_CASE("binary metrics for 42 / 0 / 132 / 6") {
    const BinaryMetrics m = binary_metrics(42, 0, 132, 6);
    CHECK(*m.recall == 0.875);
    CHECK(*m.precision == 1.0);
    CHECK(*m.specificity == 1.0);
    CHECK(*m.f1 == doctest::Approx(0.9333).epsilon(5e-4));
    CHECK(*m.mcc == doctest::Approx(0.9149).epsilon(5e-4));
    CHECK(*m.accuracy == doctest::Approx(0.9667).epsilon(5e-4));
}

TEST_CASE("binary metrics with zero denominators") {
    const BinaryMetrics none = binary_metrics(0, 0, 10, 0);
    CHECK_FALSE(none.recall.has_value());
    CHECK_FALSE(none.precision.has_value());
    CHECK_FALSE(none.mcc.has_value());
    CHECK_FALSE(none.f1.has_value());
    CHECK(*none.accuracy == 1.0);
    CHECK(*none.specificity == 1.0);
    const BinaryMetrics perfect = binary_metrics(3, 0, 4, 0);
    CHECK(*perfect.mcc == 1.0);
    CHECK(*perfect.f1 == 1.0);
}

TEST_CASE("swapping prediction and truth swaps precision and recall") {
    std::mt19937_64 rng(8);
    std::bernoulli_distribution coin(0.4);
    std::vector<std::vector<bool>> a(20, std::vector<bool>(10)), b(20, std::vector<bool>(10));
    for (std::size_t i = 0; i < 20; ++i)
        for (std::size_t k = 0; k < 10; ++k) {
            a[i][k] = coin(rng);
            b[i][k] = coin(rng);
        }
    const auto ab = binary_metrics(std::span<const std::vector<bool>>(a), std::span<const std::vector<bool>>(b));
    const auto ba = binary_metrics(std::span<const std::vector<bool>>(b), std::span<const std::vector<bool>>(a));
    CHECK(ab.tp + ab.fp + ab.tn + ab.fn == 200);
    CHECK(*ab.accuracy == *ba.accuracy);
    CHECK(*ab.precision == doctest::Approx(*ba.recall));
    CHECK(*ab.recall == doctest::Approx(*ba.precision));
    b.pop_back();
    CHECK_THROWS_AS(binary_metrics(std::span<const std::vector<bool>>(a), std::span<const std::vector<bool>>(b)), Error);
}

TEST_CASE("summary statistics") {
    const std::vector<double> odd{0.3, 0.1, 0.2};
    const WerSummary s = summarize(odd);
    CHECK(s.median == doctest::Approx(0.2));
    CHECK(s.mean == doctest::Approx(0.2));
    CHECK(s.min == doctest::Approx(0.1));
    CHECK(s.max == doctest::Approx(0.3));
    const std::vector<double> even{4.0, 1.0, 2.0, 3.0};
    CHECK(summarize(even).median == doctest::Approx(2.5));
}

TEST_CASE("stack_frames concatenates the chosen segments in order") {
    std::vector<FeatureMatrix> segs(3);
    for (std::size_t i = 0; i < 3; ++i) segs[i].values = Matrix(i + 1, 2, double(i));
    const std::vector<std::size_t> pick{2, 0};
    const Matrix m = stack_frames(segs, pick);
    REQUIRE(m.rows() == 4);
    CHECK(m(0, 0) == 2.0);
    CHECK(m(2, 1) == 2.0);
    CHECK(m(3, 0) == 0.0);
}

TEST_CASE("cross-validation on separable species") {
    const LabeledCorpus corpus = gaussian_corpus(4, 40, 3);
    CrossValidationConfig cfg;
    cfg.budget_seconds = 5.0;
    cfg.folds = 4;
    cfg.training.num_components = 2;
    cfg.seed = 21;
    const auto res = cross_validate(corpus, cfg);
    REQUIRE(res.folds.size() == 4);
    CHECK(res.wer.max == 0.0);
    for (const auto& f : res.folds) {
        CHECK(f.scores.size() == 4 * 30);
        for (const auto& row : f.confusion) CHECK(std::accumulate(row.begin(), row.end(), std::int64_t{0}) == 30);
        for (const auto& s : f.scores) CHECK(s.score > 0.0);
    }
    cfg.jobs = 3;
    const auto threaded = cross_validate(corpus, cfg);
    for (std::size_t f = 0; f < 4; ++f)
        for (std::size_t i = 0; i < res.folds[f].scores.size(); ++i)
            CHECK(threaded.folds[f].scores[i].score == res.folds[f].scores[i].score);
}
