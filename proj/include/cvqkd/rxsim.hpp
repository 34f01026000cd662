#pragma once

#include <filesystem>
#include <utility>

#include "cvqkd/core.hpp"
#include "cvqkd/filters.hpp"

namespace cvqkd {

struct DetectorParams {
    double eta{0.56};
    Snu v_el{0.16};
    double detector_bw{1.6e9};  // single-pole 3 dB point; <= 0 disables the filter
    double adc_rate{10e9};
    double lo_offset{2e9};      // nominal pilot IF (LO detuning set point)
    /// Rate the shot-noise normalization refers to (the symbol rate); see
    /// ChannelParams::reference_rate.
    double reference_rate{1e9};

    /// Fraction of adc_rate that the anti-alias stage passes undistorted.
    static constexpr double passband_fraction = 0.3;

    void validate() const;
    /// Raw IF variance of shot noise alone before the detector filter.
    double shot_variance() const noexcept;
    /// Variance gain of the detector's one-pole filter for white input.
    double filter_variance_gain() const noexcept;
};

struct IfRecords {
    RealWaveform h;
    RealWaveform v;
};

/// Streaming balanced-heterodyne receiver. Input envelopes (in Bob's LO
/// frame) arrive at the simulation rate, are decimated to the ADC rate, beat
/// to a real IF record with gain sqrt(eta/2), and get shot plus electronic
/// noise; both then pass the detector's one-pole response.
class HeterodyneReceiver {
   public:
    HeterodyneReceiver(const DetectorParams& d, double input_rate, std::uint64_t seed);

    /// Consume one chunk; appends finished ADC samples to `out`.
    void process(std::span<const cplx> h, std::span<const cplx> v, IfRecords& out);
    /// Flush the decimator's look-ahead with zeros.
    void finish(IfRecords& out);

    std::size_t decimation() const noexcept { return decim_; }

   private:
    void emit(IfRecords& out, std::size_t count);

    DetectorParams d_;
    double input_rate_;
    std::size_t decim_;
    std::vector<double> aa_taps_;
    std::size_t delay_;
    double gain_;
    double noise_sigma_;
    OnePoleLowpass pole_h_, pole_v_;
    bool use_pole_;
    GaussianSource noise_h_, noise_v_;
    std::vector<cplx> hist_h_, hist_v_;  // input samples not yet consumed
    std::size_t consumed_{0};             // absolute input index of hist_[0]
    std::size_t next_out_{0};             // next ADC sample index
    std::size_t total_in_{0};
};

/// Whole-record detection of a DualPolWaveform.
IfRecords heterodyne_detect(const DualPolWaveform& wave, const DetectorParams& d, std::uint64_t seed);

/// Shot-noise record (zero optical input, LO on).
RealWaveform vacuum_record(std::size_t n, const DetectorParams& d, std::uint64_t seed);

/// Electronic-noise record (LO off): variance v_el in calibrated units.
RealWaveform electronic_record(std::size_t n, const DetectorParams& d, std::uint64_t seed);

// ---------------------------------------------------------------------------
// IF record files: 32-byte header then little-endian float32 samples,
// interleaved by channel (sample 0 of every channel, then sample 1, ...).
//   bytes 0..7   magic "CVQKDIF1"
//   bytes 8..15  sample rate, IEEE-754 float64 LE
//   bytes 16..23 channel count, uint64 LE
//   bytes 24..31 samples per channel, uint64 LE
// ---------------------------------------------------------------------------
void write_if_records(const std::filesystem::path& path, std::span<const RealWaveform> channels);
std::vector<RealWaveform> read_if_records(const std::filesystem::path& path);

}  // namespace cvqkd
