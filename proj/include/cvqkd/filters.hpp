#pragma once

#include <memory>
#include <span>
#include <vector>

#include "cvqkd/core.hpp"

namespace cvqkd {

/// Complex DFT of a fixed length, backed by FFTW with estimate-mode plans so
/// that repeated runs produce bit-identical output.
class Fft {
   public:
    enum class Direction { forward, inverse };

    Fft(std::size_t n, Direction dir);
    ~Fft();
    Fft(Fft&&) noexcept;
    Fft& operator=(Fft&&) noexcept;
    Fft(const Fft&) = delete;
    Fft& operator=(const Fft&) = delete;

    std::size_t size() const noexcept { return n_; }
    /// Unnormalized transform of `in` (length n) into `out` (length n).
    void execute(std::span<const cplx> in, std::span<cplx> out);

   private:
    struct Impl;
    std::size_t n_{0};
    std::unique_ptr<Impl> impl_;
};

/// Forward DFT of a real or complex sequence, zero-padded to `n` (>= size).
std::vector<cplx> dft(std::span<const cplx> x, std::size_t n = 0);
std::vector<cplx> dft(std::span<const double> x, std::size_t n = 0);

/// Kaiser-windowed sinc low-pass. Frequencies are normalized to the sample
/// rate (cycles/sample). `passband_edge` and `stopband_edge` bound the
/// transition band; the length is chosen for `stop_db` attenuation and is
/// always odd.
std::vector<double> kaiser_lowpass(double passband_edge, double stopband_edge,
                                   double stop_db = 60.0);

/// Kaiser window beta for the given attenuation, and the tap count needed for
/// a transition width `delta` (cycles/sample).
double kaiser_beta(double stop_db) noexcept;
std::size_t kaiser_length(double stop_db, double delta) noexcept;

/// Root-raised-cosine pulse sampled at `sps` samples per symbol over
/// +-span/2 symbols, normalized so the pulse energy per symbol is `sps`
/// (unit-power waveform for unit symbols).
std::vector<double> rrc_taps(std::size_t sps, double rolloff, std::size_t span);

/// Rectangular pulse of one symbol, unit amplitude.
std::vector<double> rect_taps(std::size_t sps);

/// Streaming FIR with real taps applied by overlap-save FFT convolution.
///
/// Output sample k corresponds to input sample k (group delay of the odd,
/// linear-phase taps is removed), optionally decimated: only every
/// `decimation`-th output is kept, starting at input index 0.
class FirFilter {
   public:
    FirFilter(std::vector<double> taps, std::size_t decimation = 1);

    /// Filter a whole record. Samples outside the record are treated as zero.
    std::vector<cplx> apply(std::span<const cplx> x) const;
    std::vector<cplx> apply(std::span<const double> x) const;

    const std::vector<double>& taps() const noexcept { return taps_; }
    std::size_t decimation() const noexcept { return decimation_; }

   private:
    template <typename T>
    std::vector<cplx> apply_impl(std::span<const T> x) const;

    std::vector<double> taps_;
    std::size_t decimation_;
};

/// Direct-form FIR ("same" alignment, zero boundaries). For short filters and
/// test references.
std::vector<cplx> fir_direct(std::span<const cplx> x, std::span<const double> taps);

/// First-order IIR low-pass y[n] = a*y[n-1] + (1-a)*x[n] with
/// a = exp(-2*pi*cutoff/fs). Its exact inverse is the two-tap FIR
/// x[n] = (y[n] - a*y[n-1]) / (1-a).
class OnePoleLowpass {
   public:
    OnePoleLowpass(double cutoff_hz, double sample_rate);
    double pole() const noexcept { return a_; }
    double process(double x) noexcept {
        y_ = a_ * y_ + (1.0 - a_) * x;
        return y_;
    }
    cplx process(cplx x) noexcept {
        yc_ = a_ * yc_ + (1.0 - a_) * x;
        return yc_;
    }
    void reset() noexcept { y_ = 0.0; yc_ = 0.0; }

   private:
    double a_;
    double y_{0.0};
    cplx yc_{0.0};
};

/// Undo an OnePoleLowpass response on a whole record (zero initial state).
std::vector<double> invert_one_pole(std::span<const double> y, double pole);

}  // namespace cvqkd
