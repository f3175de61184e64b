#pragma once

#include "frogid/features.hpp"
#include "frogid/matrix.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace frogid {

// Diagonal-covariance Gaussian mixture for one species.
struct GmmModel {
    std::vector<double> weights;  // M
    Matrix means;                 // M x D
    Matrix variances;             // M x D, diagonal covariances
    std::string species_code;
    std::string feature_spec_fingerprint;
    double training_seconds = 0.0;
    // Training metadata; informational only.
    int em_iterations = 0;
    double final_log_likelihood = 0.0;

    std::size_t num_components() const noexcept { return weights.size(); }
    std::size_t dim() const noexcept { return means.cols(); }

    // Throws Errc::InvalidModel if shapes disagree, weights do not sum to 1,
    // or any variance is non-positive.
    void validate() const;
};

struct TrainingConfig {
    int num_components = 64;
    int max_iterations = 200;
    double log_likelihood_tolerance = 1e-6;  // per-frame mean log-likelihood
    double variance_floor = 1e-4;            // relative to per-dimension data variance
    std::uint64_t rng_seed = 0;
    int kmeans_iterations = 50;

    void validate() const;
    friend bool operator==(const TrainingConfig&, const TrainingConfig&) = default;
};

struct FitReport {
    int iterations = 0;                        // M-steps performed
    std::vector<double> log_likelihood_trace;  // mean per-frame log-likelihood before each M-step and at exit
    int reinitialized_components = 0;
    bool converged = false;
};

// k-means++ seeding followed by Lloyd refinement. Every component starts
// with the per-dimension variance of the whole data set and weight 1/M.
GmmModel kmeans_pp_init(const Matrix& data, int num_components, std::uint64_t seed, int kmeans_iterations = 50);

// Maximum-likelihood fit by expectation-maximization.
GmmModel em_fit(const Matrix& data, const TrainingConfig& cfg, FitReport* report = nullptr);

// Precomputed per-component constants for fast repeated scoring.
class GmmScorer {
public:
    explicit GmmScorer(const GmmModel& model);

    std::size_t dim() const noexcept { return dim_; }
    std::size_t num_components() const noexcept { return consts_.size(); }

    // log p(x | model); -inf for non-finite input, never NaN.
    double log_density(std::span<const double> frame) const;
    // Per-component log(p_i b_i(x)) written to `out` (size M); returns the log-sum-exp.
    double component_log_densities(std::span<const double> frame, std::span<double> out) const;
    double avg_log_likelihood(const Matrix& frames) const;

private:
    std::size_t dim_;
    std::vector<double> means_;    // M*D
    std::vector<double> inv_var_;  // M*D
    std::vector<double> consts_;   // log p_i - 0.5 * sum log(2 pi var)
};

double log_density(const GmmModel& model, std::span<const double> frame);
double avg_log_likelihood(const GmmModel& model, const FeatureMatrix& features);

// Per-dimension biased variance of the rows of `data`.
std::vector<double> column_variances(const Matrix& data);

}  // namespace frogid
