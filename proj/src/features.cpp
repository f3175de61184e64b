#include "frogid/features.hpp"

#include "frogid/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>

namespace frogid {

namespace {

constexpr double kLogFloor = 1e-12;

std::vector<double> dct_row_scales(std::size_t n) {
    std::vector<double> s(n, std::sqrt(2.0 / static_cast<double>(n)));
    if (n > 0) s[0] = std::sqrt(1.0 / static_cast<double>(n));
    return s;
}

}  // namespace

std::size_t FrameConfig::frame_samples(int sample_rate) const {
    return static_cast<std::size_t>(std::llround(frame_length * sample_rate));
}

std::size_t FrameConfig::hop_samples(int sample_rate) const {
    const auto hop = static_cast<std::size_t>(
        std::llround(static_cast<double>(frame_samples(sample_rate)) * (1.0 - overlap_fraction)));
    return std::max<std::size_t>(hop, 1);
}

std::size_t FrameConfig::fft_size_for(int sample_rate) const {
    const std::size_t n = frame_samples(sample_rate);
    if (fft_size > 0) return static_cast<std::size_t>(fft_size);
    return dsp::next_pow2(n);
}

void FrameConfig::validate() const {
    if (!(frame_length > 0.0)) throw Error(Errc::InvalidConfig, "frame_length must be > 0");
    if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0))
        throw Error(Errc::InvalidConfig, "overlap_fraction must lie in [0, 1)");
    if (fft_size < 0 || (fft_size > 0 && (fft_size & (fft_size - 1)) != 0))
        throw Error(Errc::InvalidConfig, "fft_size must be 0 or a power of two");
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<double> pre_emphasize(std::span<const double> samples, double coeff) {
    std::vector<double> y(samples.size());
    if (samples.empty()) return y;
    y[0] = samples[0];
    for (std::size_t n = 1; n < samples.size(); ++n) y[n] = samples[n] - coeff * samples[n - 1];
    return y;
}

std::vector<std::size_t> frame_starts(std::size_t length, const FrameConfig& cfg, int sample_rate) {
    const std::size_t frame = cfg.frame_samples(sample_rate);
    const std::size_t hop = cfg.hop_samples(sample_rate);
    if (frame == 0 || length < frame)
        throw Error(Errc::SegmentTooShort, "segment of " + std::to_string(length) +
                                               " samples is shorter than one " +
                                               std::to_string(frame) + "-sample frame");
    std::vector<std::size_t> starts;
    for (std::size_t s = 0; s + frame <= length; s += hop) starts.push_back(s);
    return starts;
}

std::vector<std::vector<double>> frame_signal(std::span<const double> samples, const FrameConfig& cfg,
                                              int sample_rate) {
    cfg.validate();
    const std::size_t frame = cfg.frame_samples(sample_rate);
    const auto window = dsp::hamming(frame);
    std::vector<std::vector<double>> frames;
    for (std::size_t s : frame_starts(samples.size(), cfg, sample_rate)) {
        std::vector<double> f(frame);
        for (std::size_t i = 0; i < frame; ++i) f[i] = samples[s + i] * window[i];
        frames.push_back(std::move(f));
    }
    return frames;
}

std::vector<double> power_spectrum(std::span<const double> frame, std::size_t fft_size) {
    if (fft_size < frame.size())
        throw Error(Errc::InvalidConfig, "fft_size smaller than the frame length");
    dsp::RealFft fft(fft_size);
    std::vector<double> out(fft.bins());
    fft.power(frame, out);
    return out;
}

Matrix build_filterbank(const FilterbankSpec& spec, std::size_t fft_size, int sample_rate) {
    const double nyquist = sample_rate / 2.0;
    if (spec.num_filters < 2) throw Error(Errc::InvalidConfig, "filterbank needs at least 2 filters");
    if (!(spec.f_low >= 0.0) || !(spec.f_low < spec.f_high) || spec.f_high > nyquist)
        throw Error(Errc::InvalidBand, "filterbank band [" + std::to_string(spec.f_low) + ", " +
                                           std::to_string(spec.f_high) + "] Hz exceeds Nyquist " +
                                           std::to_string(nyquist));
    const std::size_t bins = fft_size / 2 + 1;
    const auto M = static_cast<std::size_t>(spec.num_filters);
    if (bins < M)
        throw Error(Errc::DegenerateBand, std::to_string(bins) + " FFT bins cannot support " +
                                              std::to_string(M) + " filters");

    std::vector<double> edges(M + 2);
    if (spec.layout == FilterbankLayout::ModifiedLinear) {
        for (std::size_t i = 0; i < M + 2; ++i)
            edges[i] = spec.f_low + (spec.f_high - spec.f_low) * static_cast<double>(i) / static_cast<double>(M + 1);
    } else {
        const double lo = hz_to_mel(spec.f_low);
        const double hi = hz_to_mel(spec.f_high);
        for (std::size_t i = 0; i < M + 2; ++i)
            edges[i] = mel_to_hz(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(M + 1));
    }

    const double bin_hz = static_cast<double>(sample_rate) / static_cast<double>(fft_size);
    Matrix fb(M, bins);
    for (std::size_t m = 0; m < M; ++m) {
        const double left = edges[m];
        const double centre = edges[m + 1];
        const double right = edges[m + 2];
        double peak = 0.0;
        double area = 0.0;
        for (std::size_t k = 0; k < bins; ++k) {
            const double f = static_cast<double>(k) * bin_hz;
            double w = 0.0;
            if (f > left && f <= centre)
                w = (f - left) / (centre - left);
            else if (f > centre && f < right)
                w = (right - f) / (right - centre);
            fb(m, k) = w;
            peak = std::max(peak, w);
            area += w;
        }
        if (peak <= 0.0)
            throw Error(Errc::DegenerateBand, "filter " + std::to_string(m) + " (" + std::to_string(left) +
                                                  "-" + std::to_string(right) +
                                                  " Hz) covers no FFT bin; increase fft_size");
        const double norm = spec.normalization == FilterNormalization::PeakUnity ? peak : area;
        for (std::size_t k = 0; k < bins; ++k) fb(m, k) /= norm;
    }
    return fb;
}

std::vector<double> dct2_orthonormal(std::span<const double> x, std::size_t num_out) {
    const std::size_t n = x.size();
    num_out = std::min(num_out, n);
    const auto scale = dct_row_scales(n);
    std::vector<double> out(num_out);
    for (std::size_t k = 0; k < num_out; ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            acc += x[i] * std::cos(std::numbers::pi / static_cast<double>(n) * (static_cast<double>(i) + 0.5) *
                                   static_cast<double>(k));
        out[k] = scale[k] * acc;
    }
    return out;
}

std::vector<double> idct2_orthonormal(std::span<const double> coeffs) {
    const std::size_t n = coeffs.size();
    const auto scale = dct_row_scales(n);
    std::vector<double> x(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t k = 0; k < n; ++k)
            acc += scale[k] * coeffs[k] *
                   std::cos(std::numbers::pi / static_cast<double>(n) * (static_cast<double>(i) + 0.5) *
                            static_cast<double>(k));
        x[i] = acc;
    }
    return x;
}

std::string feature_fingerprint(const FrameConfig& frames, const FilterbankSpec& fb, int num_coeffs) {
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "frames{len=%.17g;overlap=%.17g;preemph=%.17g;fft=%d}"
                  "fb{layout=%s;n=%d;lo=%.17g;hi=%.17g;norm=%s}coeffs=%d;rate=native",
                  frames.frame_length, frames.overlap_fraction, frames.preemphasis_coeff, frames.fft_size,
                  fb.layout == FilterbankLayout::Mel ? "mel" : "modified_linear", fb.num_filters, fb.f_low,
                  fb.f_high, fb.normalization == FilterNormalization::PeakUnity ? "peak_unity" : "unit_area",
                  num_coeffs);
    // FNV-1a, 64 bit.
    std::uint64_t h = 1469598103934665603ull;
    for (const char* p = buf; *p; ++p) {
        h ^= static_cast<unsigned char>(*p);
        h *= 1099511628211ull;
    }
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

FeatureExtractor::FeatureExtractor(const FrameConfig& frames, const FilterbankSpec& fb, int num_coeffs,
                                   int sample_rate)
    : frames_(frames),
      num_coeffs_(num_coeffs),
      sample_rate_(sample_rate),
      frame_len_(frames.frame_samples(sample_rate)),
      window_(dsp::hamming(frames.frame_samples(sample_rate))),
      fft_(std::max<std::size_t>(frames.fft_size_for(sample_rate), 1)) {
    frames_.validate();
    if (fft_.size() < frame_len_) throw Error(Errc::InvalidConfig, "fft_size smaller than the frame length");
    if (num_coeffs < 1 || num_coeffs > fb.num_filters)
        throw Error(Errc::InvalidConfig, "num_coeffs must lie in [1, num_filters]");

    const Matrix weights = build_filterbank(fb, fft_.size(), sample_rate);
    for (std::size_t m = 0; m < weights.rows(); ++m) {
        const auto row = weights.row(m);
        std::size_t lo = 0;
        while (lo < row.size() && row[lo] == 0.0) ++lo;
        std::size_t hi = row.size();
        while (hi > lo && row[hi - 1] == 0.0) --hi;
        bands_.push_back({lo, std::vector<double>(row.begin() + static_cast<std::ptrdiff_t>(lo),
                                                  row.begin() + static_cast<std::ptrdiff_t>(hi))});
    }

    const std::size_t n = bands_.size();
    const auto scale = dct_row_scales(n);
    dct_ = Matrix(static_cast<std::size_t>(num_coeffs), n);
    for (std::size_t k = 0; k < dct_.rows(); ++k)
        for (std::size_t i = 0; i < n; ++i)
            dct_(k, i) = scale[k] * std::cos(std::numbers::pi / static_cast<double>(n) *
                                             (static_cast<double>(i) + 0.5) * static_cast<double>(k));
}

FeatureMatrix FeatureExtractor::extract(std::span<const double> samples, const Segment& ref) {
    const auto starts = frame_starts(samples.size(), frames_, sample_rate_);
    FeatureMatrix fm;
    fm.segment_ref = ref;
    fm.values = Matrix(starts.size(), static_cast<std::size_t>(num_coeffs_));

    const double a = frames_.preemphasis_coeff;
    std::vector<double> frame(frame_len_);
    std::vector<double> power(fft_.bins());
    std::vector<double> log_energy(bands_.size());
    for (std::size_t t = 0; t < starts.size(); ++t) {
        const double* x = samples.data() + starts[t];
        frame[0] = x[0] * window_[0];
        for (std::size_t i = 1; i < frame_len_; ++i)
            frame[i] = (x[i] - a * x[i - 1]) * window_[i];
        fft_.power(frame, power);
        for (std::size_t m = 0; m < bands_.size(); ++m) {
            const auto& band = bands_[m];
            double e = 0.0;
            for (std::size_t j = 0; j < band.weights.size(); ++j) e += band.weights[j] * power[band.first_bin + j];
            log_energy[m] = std::log(std::max(e, kLogFloor));
        }
        auto out = fm.values.row(t);
        for (std::size_t k = 0; k < dct_.rows(); ++k) {
            const auto basis = dct_.row(k);
            double acc = 0.0;
            for (std::size_t i = 0; i < basis.size(); ++i) acc += basis[i] * log_energy[i];
            out[k] = acc;
        }
    }
    return fm;
}

FeatureMatrix FeatureExtractor::extract(const AudioClip& clip, const Segment& segment) {
    if (clip.sample_rate != sample_rate_)
        throw Error(Errc::InvalidConfig, "extractor built for " + std::to_string(sample_rate_) +
                                             " Hz applied to a " + std::to_string(clip.sample_rate) + " Hz clip");
    if (segment.start >= segment.end || segment.end > clip.size())
        throw Error(Errc::InvalidConfig, "segment lies outside the clip");
    return extract(std::span<const double>(clip.samples.data() + segment.start, segment.length()), segment);
}

FeatureMatrix extract_features(const AudioClip& clip, const Segment& segment, const FrameConfig& frames,
                               const FilterbankSpec& fb, int num_coeffs) {
    FeatureExtractor extractor(frames, fb, num_coeffs, clip.sample_rate);
    return extractor.extract(clip, segment);
}

}  // namespace frogid
