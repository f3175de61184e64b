#include "frogid/gmm.hpp"

#include "frogid/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

namespace frogid {

namespace {

constexpr double kAbsoluteVarianceFloor = 1e-10;

void check_data(const Matrix& data, int num_components) {
    if (num_components < 1) throw Error(Errc::InvalidConfig, "mixture needs at least one component");
    if (data.rows() < static_cast<std::size_t>(num_components))
        throw Error(Errc::TooFewFrames, std::to_string(data.rows()) + " frames cannot seed " +
                                            std::to_string(num_components) + " components");
    if (data.cols() == 0) throw Error(Errc::EmptyMatrix, "training data has zero dimensions");
    for (double v : data.data())
        if (!std::isfinite(v)) throw Error(Errc::InvalidConfig, "training data contains non-finite values");
}

std::vector<double> column_means(const Matrix& data) {
    std::vector<double> mu(data.cols(), 0.0);
    for (std::size_t t = 0; t < data.rows(); ++t) {
        const auto x = data.row(t);
        for (std::size_t d = 0; d < mu.size(); ++d) mu[d] += x[d];
    }
    for (auto& m : mu) m /= static_cast<double>(data.rows());
    return mu;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) {
        const double diff = a[d] - b[d];
        s += diff * diff;
    }
    return s;
}

double log_sum_exp(std::span<const double> v) {
    const double mx = *std::max_element(v.begin(), v.end());
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (double x : v) s += std::exp(x - mx);
    return mx + std::log(s);
}

}  // namespace

void GmmModel::validate() const {
    const std::size_t M = weights.size();
    if (M == 0) throw Error(Errc::InvalidModel, "model has no components");
    if (means.rows() != M || variances.rows() != M || means.cols() != variances.cols() || means.cols() == 0)
        throw Error(Errc::InvalidModel, "model '" + species_code + "' has inconsistent shapes");
    double sum = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw Error(Errc::InvalidModel, "negative mixture weight");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw Error(Errc::InvalidModel, "mixture weights do not sum to 1");
    for (double v : variances.data())
        if (!(v > 0.0) || !std::isfinite(v)) throw Error(Errc::InvalidModel, "non-positive variance");
    for (double v : means.data())
        if (!std::isfinite(v)) throw Error(Errc::InvalidModel, "non-finite mean");
}

void TrainingConfig::validate() const {
    if (num_components < 1) throw Error(Errc::InvalidConfig, "num_components must be >= 1");
    if (max_iterations < 0) throw Error(Errc::InvalidConfig, "max_iterations must be >= 0");
    if (!(log_likelihood_tolerance > 0.0)) throw Error(Errc::InvalidConfig, "tolerance must be > 0");
    if (!(variance_floor >= 0.0)) throw Error(Errc::InvalidConfig, "variance_floor must be >= 0");
}

std::vector<double> column_variances(const Matrix& data) {
    const auto mu = column_means(data);
    std::vector<double> var(data.cols(), 0.0);
    for (std::size_t t = 0; t < data.rows(); ++t) {
        const auto x = data.row(t);
        for (std::size_t d = 0; d < var.size(); ++d) var[d] += (x[d] - mu[d]) * (x[d] - mu[d]);
    }
    for (auto& v : var) v /= static_cast<double>(data.rows());
    return var;
}

GmmModel kmeans_pp_init(const Matrix& data, int num_components, std::uint64_t seed, int kmeans_iterations) {
    check_data(data, num_components);
    const std::size_t T = data.rows();
    const std::size_t D = data.cols();
    const auto M = static_cast<std::size_t>(num_components);
    std::mt19937_64 rng(seed);

    // Seeding: first centre uniform, the rest proportional to squared distance
    // to the nearest chosen centre.
    Matrix centres(M, D);
    std::vector<double> nearest(T, std::numeric_limits<double>::infinity());
    std::size_t pick = std::uniform_int_distribution<std::size_t>(0, T - 1)(rng);
    for (std::size_t c = 0; c < M; ++c) {
        std::copy(data.row(pick).begin(), data.row(pick).end(), centres.row(c).begin());
        double total = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
            nearest[t] = std::min(nearest[t], squared_distance(data.row(t), centres.row(c)));
            total += nearest[t];
        }
        if (c + 1 == M) break;
        if (total > 0.0) {
            double u = std::uniform_real_distribution<double>(0.0, total)(rng);
            pick = T - 1;
            for (std::size_t t = 0; t < T; ++t) {
                if (nearest[t] <= 0.0) continue;
                u -= nearest[t];
                if (u < 0.0) {
                    pick = t;
                    break;
                }
            }
            while (nearest[pick] <= 0.0 && pick > 0) --pick;
        } else {
            pick = std::uniform_int_distribution<std::size_t>(0, T - 1)(rng);
        }
    }

    // Lloyd refinement; empty clusters keep their previous centre.
    std::vector<std::size_t> assign(T, M);
    for (int it = 0; it < kmeans_iterations; ++it) {
        bool changed = false;
        for (std::size_t t = 0; t < T; ++t) {
            std::size_t best = 0;
            double best_d = squared_distance(data.row(t), centres.row(0));
            for (std::size_t c = 1; c < M; ++c) {
                const double dist = squared_distance(data.row(t), centres.row(c));
                if (dist < best_d) {
                    best_d = dist;
                    best = c;
                }
            }
            if (assign[t] != best) {
                assign[t] = best;
                changed = true;
            }
        }
        if (!changed) break;
        Matrix sums(M, D);
        std::vector<std::size_t> counts(M, 0);
        for (std::size_t t = 0; t < T; ++t) {
            auto s = sums.row(assign[t]);
            const auto x = data.row(t);
            for (std::size_t d = 0; d < D; ++d) s[d] += x[d];
            ++counts[assign[t]];
        }
        for (std::size_t c = 0; c < M; ++c) {
            if (counts[c] == 0) continue;
            for (std::size_t d = 0; d < D; ++d) centres(c, d) = sums(c, d) / static_cast<double>(counts[c]);
        }
    }

    GmmModel model;
    model.weights.assign(M, 1.0 / static_cast<double>(M));
    model.means = std::move(centres);
    model.variances = Matrix(M, D);
    const auto var = column_variances(data);
    for (std::size_t c = 0; c < M; ++c)
        for (std::size_t d = 0; d < D; ++d) model.variances(c, d) = std::max(var[d], kAbsoluteVarianceFloor);
    return model;
}

GmmModel em_fit(const Matrix& data, const TrainingConfig& cfg, FitReport* report) {
    cfg.validate();
    check_data(data, cfg.num_components);
    const std::size_t T = data.rows();
    const std::size_t D = data.cols();
    const auto M = static_cast<std::size_t>(cfg.num_components);

    std::vector<double> floor = column_variances(data);
    for (auto& f : floor) f = std::max(f * cfg.variance_floor, kAbsoluteVarianceFloor);

    GmmModel model = kmeans_pp_init(data, cfg.num_components, cfg.rng_seed, cfg.kmeans_iterations);
    for (std::size_t c = 0; c < M; ++c)
        for (std::size_t d = 0; d < D; ++d) model.variances(c, d) = std::max(model.variances(c, d), floor[d]);

    FitReport local;
    FitReport& rep = report ? *report : local;
    rep = FitReport{};

    Matrix resp(T, M);
    std::vector<double> frame_ll(T);
    for (int it = 0;; ++it) {
        // E-step.
        const GmmScorer scorer(model);
        double total = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
            auto r = resp.row(t);
            const double ll = scorer.component_log_densities(data.row(t), r);
            for (auto& v : r) v = std::exp(v - ll);
            frame_ll[t] = ll;
            total += ll;
        }
        const double mean_ll = total / static_cast<double>(T);
        rep.log_likelihood_trace.push_back(mean_ll);
        model.final_log_likelihood = mean_ll;
        const auto n = rep.log_likelihood_trace.size();
        if (n >= 2 && rep.log_likelihood_trace[n - 1] - rep.log_likelihood_trace[n - 2] < cfg.log_likelihood_tolerance) {
            rep.converged = true;
            break;
        }
        if (it >= cfg.max_iterations) break;

        // M-step.
        std::vector<double> mass(M, 0.0);
        for (std::size_t t = 0; t < T; ++t) {
            const auto r = resp.row(t);
            for (std::size_t c = 0; c < M; ++c) mass[c] += r[c];
        }
        Matrix means(M, D);
        for (std::size_t t = 0; t < T; ++t) {
            const auto r = resp.row(t);
            const auto x = data.row(t);
            for (std::size_t c = 0; c < M; ++c) {
                if (r[c] == 0.0) continue;
                auto m = means.row(c);
                for (std::size_t d = 0; d < D; ++d) m[d] += r[c] * x[d];
            }
        }
        for (std::size_t c = 0; c < M; ++c)
            if (mass[c] > 0.0)
                for (std::size_t d = 0; d < D; ++d) means(c, d) /= mass[c];
        Matrix vars(M, D);
        for (std::size_t t = 0; t < T; ++t) {
            const auto r = resp.row(t);
            const auto x = data.row(t);
            for (std::size_t c = 0; c < M; ++c) {
                if (r[c] == 0.0) continue;
                auto v = vars.row(c);
                const auto m = means.row(c);
                for (std::size_t d = 0; d < D; ++d) v[d] += r[c] * (x[d] - m[d]) * (x[d] - m[d]);
            }
        }

        std::vector<double> weights(M);
        std::vector<std::size_t> worst_frames;
        for (std::size_t c = 0; c < M; ++c) {
            if (mass[c] > 0.0 && std::isfinite(mass[c])) {
                for (std::size_t d = 0; d < D; ++d) vars(c, d) = std::max(vars(c, d) / mass[c], floor[d]);
                weights[c] = mass[c] / static_cast<double>(T);
                continue;
            }
            // Responsibility mass underflowed: restart the component on the
            // worst-explained frame not already used for a restart.
            if (worst_frames.empty()) {
                worst_frames.resize(T);
                std::iota(worst_frames.begin(), worst_frames.end(), std::size_t{0});
                std::stable_sort(worst_frames.begin(), worst_frames.end(),
                                 [&](std::size_t a, std::size_t b) { return frame_ll[a] < frame_ll[b]; });
            }
            const std::size_t f = worst_frames[static_cast<std::size_t>(rep.reinitialized_components) % T];
            const auto data_var = column_variances(data);
            for (std::size_t d = 0; d < D; ++d) {
                means(c, d) = data(f, d);
                vars(c, d) = std::max(data_var[d], floor[d]);
            }
            weights[c] = 1.0 / static_cast<double>(T);
            ++rep.reinitialized_components;
        }
        const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
        for (auto& w : weights) w /= wsum;

        model.weights = std::move(weights);
        model.means = std::move(means);
        model.variances = std::move(vars);
        ++rep.iterations;
    }
    model.em_iterations = rep.iterations;
    return model;
}

GmmScorer::GmmScorer(const GmmModel& model) : dim_(model.dim()) {
    const std::size_t M = model.num_components();
    means_ = model.means.data();
    inv_var_.resize(M * dim_);
    consts_.resize(M);
    const double log_2pi = std::log(2.0 * std::numbers::pi);
    for (std::size_t c = 0; c < M; ++c) {
        double log_det = 0.0;
        for (std::size_t d = 0; d < dim_; ++d) {
            const double v = model.variances(c, d);
            inv_var_[c * dim_ + d] = 1.0 / v;
            log_det += std::log(v);
        }
        consts_[c] = std::log(model.weights[c]) - 0.5 * (static_cast<double>(dim_) * log_2pi + log_det);
    }
}

double GmmScorer::component_log_densities(std::span<const double> frame, std::span<double> out) const {
    if (frame.size() != dim_)
        throw Error(Errc::DimensionMismatch, "frame has " + std::to_string(frame.size()) +
                                                 " dimensions, model expects " + std::to_string(dim_));
    for (double x : frame)
        if (!std::isfinite(x)) {
            std::fill(out.begin(), out.end(), -std::numeric_limits<double>::infinity());
            return -std::numeric_limits<double>::infinity();
        }
    const std::size_t M = consts_.size();
    for (std::size_t c = 0; c < M; ++c) {
        const double* mu = means_.data() + c * dim_;
        const double* iv = inv_var_.data() + c * dim_;
        double q = 0.0;
        for (std::size_t d = 0; d < dim_; ++d) {
            const double diff = frame[d] - mu[d];
            q += diff * diff * iv[d];
        }
        out[c] = consts_[c] - 0.5 * q;
    }
    return log_sum_exp(out.first(M));
}

double GmmScorer::log_density(std::span<const double> frame) const {
    std::vector<double> buf(consts_.size());
    return component_log_densities(frame, buf);
}

double GmmScorer::avg_log_likelihood(const Matrix& frames) const {
    if (frames.rows() == 0) throw Error(Errc::EmptyMatrix, "cannot score an empty feature matrix");
    std::vector<double> buf(consts_.size());
    double total = 0.0;
    for (std::size_t t = 0; t < frames.rows(); ++t) total += component_log_densities(frames.row(t), buf);
    return total / static_cast<double>(frames.rows());
}

double log_density(const GmmModel& model, std::span<const double> frame) {
    return GmmScorer(model).log_density(frame);
}

double avg_log_likelihood(const GmmModel& model, const FeatureMatrix& features) {
    return GmmScorer(model).avg_log_likelihood(features.values);
}

}  // namespace frogid
