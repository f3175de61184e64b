#pragma once

#include "frogid/audio_io.hpp"
#include "frogid/dsp.hpp"
#include "frogid/matrix.hpp"
#include "frogid/segmentation.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace frogid {

struct FrameConfig {
    double frame_length = 0.020;   // seconds
    double overlap_fraction = 0.75;
    double preemphasis_coeff = 0.99;
    int fft_size = 0;              // 0: next power of two >= frame samples

    std::size_t frame_samples(int sample_rate) const;
    std::size_t hop_samples(int sample_rate) const;
    std::size_t fft_size_for(int sample_rate) const;
    void validate() const;

    friend bool operator==(const FrameConfig&, const FrameConfig&) = default;
};

enum class FilterbankLayout { ModifiedLinear, Mel };
enum class FilterNormalization { PeakUnity, UnitArea };

struct FilterbankSpec {
    FilterbankLayout layout = FilterbankLayout::ModifiedLinear;
    int num_filters = 40;
    double f_low = 200.0;
    double f_high = 8000.0;
    FilterNormalization normalization = FilterNormalization::PeakUnity;

    friend bool operator==(const FilterbankSpec&, const FilterbankSpec&) = default;
};

// T frames x D cepstral coefficients for one segment.
struct FeatureMatrix {
    Matrix values;
    Segment segment_ref;

    std::size_t rows() const noexcept { return values.rows(); }
    std::size_t cols() const noexcept { return values.cols(); }
    std::span<const double> row(std::size_t t) const { return values.row(t); }
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

std::vector<double> pre_emphasize(std::span<const double> samples, double coeff);

// Start offsets of every frame that fits entirely inside `length` samples.
std::vector<std::size_t> frame_starts(std::size_t length, const FrameConfig& cfg, int sample_rate);

// Hamming-windowed frames. Throws Errc::SegmentTooShort below one frame.
std::vector<std::vector<double>> frame_signal(std::span<const double> samples, const FrameConfig& cfg,
                                              int sample_rate);

std::vector<double> power_spectrum(std::span<const double> frame, std::size_t fft_size);

// num_filters x (fft_size/2 + 1) triangular weights.
Matrix build_filterbank(const FilterbankSpec& spec, std::size_t fft_size, int sample_rate);

// Orthonormal DCT-II, keeping the first `num_out` coefficients.
std::vector<double> dct2_orthonormal(std::span<const double> x, std::size_t num_out);
// Inverse of the full-length orthonormal DCT-II.
std::vector<double> idct2_orthonormal(std::span<const double> coeffs);

// Stable identifier of everything that determines feature values; stored in
// every trained model and checked before scoring.
std::string feature_fingerprint(const FrameConfig& frames, const FilterbankSpec& fb, int num_coeffs);

// Reusable extraction pipeline for one sample rate. Holds FFT scratch space,
// so one instance must not be shared between threads.
class FeatureExtractor {
public:
    FeatureExtractor(const FrameConfig& frames, const FilterbankSpec& fb, int num_coeffs, int sample_rate);

    int sample_rate() const noexcept { return sample_rate_; }
    int num_coeffs() const noexcept { return num_coeffs_; }
    std::size_t frame_samples() const noexcept { return frame_len_; }

    FeatureMatrix extract(std::span<const double> samples, const Segment& ref = {});
    FeatureMatrix extract(const AudioClip& clip, const Segment& segment);

private:
    struct Band {
        std::size_t first_bin = 0;
        std::vector<double> weights;
    };

    FrameConfig frames_;
    int num_coeffs_;
    int sample_rate_;
    std::size_t frame_len_;
    std::vector<double> window_;
    std::vector<Band> bands_;
    Matrix dct_;  // num_coeffs x num_filters
    dsp::RealFft fft_;
};

FeatureMatrix extract_features(const AudioClip& clip, const Segment& segment, const FrameConfig& frames,
                               const FilterbankSpec& fb, int num_coeffs = 20);

}  // namespace frogid
