#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace frogid::dsp {

std::size_t next_pow2(std::size_t n);

// Symmetric Hamming window of the given length.
std::vector<double> hamming(std::size_t length);

// Real-to-complex FFT of a fixed size backed by an FFTW plan. Plans are
// created under a process-wide lock; execution is thread-safe per instance.
class RealFft {
public:
    explicit RealFft(std::size_t size);
    ~RealFft();
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;
    RealFft(RealFft&&) noexcept;
    RealFft& operator=(RealFft&&) noexcept;

    std::size_t size() const noexcept { return size_; }
    std::size_t bins() const noexcept { return size_ / 2 + 1; }

    // Zero-pads `input` to size() and writes |X[k]|^2 for k = 0..size()/2.
    void power(std::span<const double> input, std::span<double> out);

    // Forward transform of zero-padded input; returns bins() coefficients.
    void forward(std::span<const double> input, std::span<std::complex<double>> out);

    // Unnormalized inverse: out = size() * x for x = ifft(spectrum).
    void inverse(std::span<const std::complex<double>> spectrum, std::span<double> out);

private:
    struct Impl;
    std::size_t size_ = 0;
    std::unique_ptr<Impl> impl_;
};

// Windowed-sinc (Hamming) linear-phase band-pass design. `taps` must be odd.
std::vector<double> design_bandpass(std::size_t taps, double low_hz, double high_hz,
                                    double sample_rate);

// Filters `input` with an FIR kernel using FFT overlap-add. The output has the
// input's length and is aligned by the kernel's (taps-1)/2 group delay, so the
// edges see zero padding on both sides.
std::vector<double> filter_aligned(std::span<const double> input, std::span<const double> kernel);

}  // namespace frogid::dsp
