#include "frogid/dsp.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace frogid::dsp {

namespace {

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

std::vector<double> hamming(std::size_t length) {
    std::vector<double> w(length, 1.0);
    if (length < 2) return w;
    const double denom = static_cast<double>(length - 1);
    for (std::size_t i = 0; i < length; ++i)
        w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / denom);
    return w;
}

struct RealFft::Impl {
    double* in = nullptr;
    fftw_complex* spec = nullptr;
    double* out = nullptr;
    fftw_plan fwd = nullptr;
    fftw_plan inv = nullptr;

    ~Impl() {
        std::lock_guard lock(planner_mutex());
        if (fwd) fftw_destroy_plan(fwd);
        if (inv) fftw_destroy_plan(inv);
        fftw_free(in);
        fftw_free(spec);
        fftw_free(out);
    }
};

RealFft::RealFft(std::size_t size) : size_(size), impl_(std::make_unique<Impl>()) {
    if (size == 0) throw std::invalid_argument("RealFft: size must be positive");
    const int n = static_cast<int>(size);
    impl_->in = fftw_alloc_real(size);
    impl_->out = fftw_alloc_real(size);
    impl_->spec = fftw_alloc_complex(size / 2 + 1);
    std::lock_guard lock(planner_mutex());
    impl_->fwd = fftw_plan_dft_r2c_1d(n, impl_->in, impl_->spec, FFTW_ESTIMATE);
    impl_->inv = fftw_plan_dft_c2r_1d(n, impl_->spec, impl_->out, FFTW_ESTIMATE);
}

RealFft::~RealFft() = default;
RealFft::RealFft(RealFft&&) noexcept = default;
RealFft& RealFft::operator=(RealFft&&) noexcept = default;

void RealFft::forward(std::span<const double> input, std::span<std::complex<double>> out) {
    const std::size_t n = std::min(input.size(), size_);
    std::copy_n(input.begin(), n, impl_->in);
    std::fill(impl_->in + n, impl_->in + size_, 0.0);
    fftw_execute(impl_->fwd);
    for (std::size_t k = 0; k < bins() && k < out.size(); ++k)
        out[k] = {impl_->spec[k][0], impl_->spec[k][1]};
}

void RealFft::power(std::span<const double> input, std::span<double> out) {
    const std::size_t n = std::min(input.size(), size_);
    std::copy_n(input.begin(), n, impl_->in);
    std::fill(impl_->in + n, impl_->in + size_, 0.0);
    fftw_execute(impl_->fwd);
    for (std::size_t k = 0; k < bins() && k < out.size(); ++k) {
        const double re = impl_->spec[k][0];
        const double im = impl_->spec[k][1];
        out[k] = re * re + im * im;
    }
}

void RealFft::inverse(std::span<const std::complex<double>> spectrum, std::span<double> out) {
    for (std::size_t k = 0; k < bins(); ++k) {
        const auto v = k < spectrum.size() ? spectrum[k] : std::complex<double>{};
        impl_->spec[k][0] = v.real();
        impl_->spec[k][1] = v.imag();
    }
    fftw_execute(impl_->inv);
    std::copy_n(impl_->out, std::min(out.size(), size_), out.begin());
}

std::vector<double> design_bandpass(std::size_t taps, double low_hz, double high_hz,
                                    double sample_rate) {
    if (taps % 2 == 0) throw std::invalid_argument("design_bandpass: taps must be odd");
    const double fl = low_hz / sample_rate;
    const double fh = high_hz / sample_rate;
    const auto center = static_cast<double>(taps - 1) / 2.0;
    const auto window = hamming(taps);
    auto sinc_lp = [](double fc, double m) {
        if (m == 0.0) return 2.0 * fc;
        return std::sin(2.0 * std::numbers::pi * fc * m) / (std::numbers::pi * m);
    };
    std::vector<double> h(taps);
    for (std::size_t i = 0; i < taps; ++i) {
        const double m = static_cast<double>(i) - center;
        h[i] = window[i] * (sinc_lp(fh, m) - sinc_lp(fl, m));
    }
    // Unit gain at the band centre.
    const double f0 = 0.5 * (fl + fh);
    std::complex<double> gain{};
    for (std::size_t i = 0; i < taps; ++i)
        gain += h[i] * std::polar(1.0, -2.0 * std::numbers::pi * f0 * static_cast<double>(i));
    const double g = std::abs(gain);
    if (g > 0.0)
        for (auto& v : h) v /= g;
    return h;
}

std::vector<double> filter_aligned(std::span<const double> input, std::span<const double> kernel) {
    const std::size_t n = input.size();
    const std::size_t taps = kernel.size();
    std::vector<double> output(n, 0.0);
    if (n == 0 || taps == 0) return output;

    const std::size_t fft_size = next_pow2(std::max<std::size_t>(4 * taps, 1024));
    const std::size_t block = fft_size - taps + 1;
    const std::size_t delay = (taps - 1) / 2;

    RealFft fft(fft_size);
    std::vector<std::complex<double>> kernel_spec(fft.bins());
    fft.forward(kernel, kernel_spec);

    std::vector<double> buf(fft_size);
    std::vector<std::complex<double>> spec(fft.bins());
    std::vector<double> out(fft_size);
    const double scale = 1.0 / static_cast<double>(fft_size);

    // Full convolution index j maps to output index j - delay.
    for (std::size_t start = 0; start < n; start += block) {
        const std::size_t len = std::min(block, n - start);
        for (std::size_t i = 0; i < len; ++i) buf[i] = input[start + i];
        fft.forward(std::span<const double>(buf.data(), len), spec);
        for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= kernel_spec[k];
        fft.inverse(spec, out);
        const std::size_t produced = len + taps - 1;
        for (std::size_t i = 0; i < produced; ++i) {
            const std::size_t j = start + i;
            if (j < delay) continue;
            const std::size_t o = j - delay;
            if (o >= n) break;
            output[o] += out[i] * scale;
        }
    }
    return output;
}

}  // namespace frogid::dsp
