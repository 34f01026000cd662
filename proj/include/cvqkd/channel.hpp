#pragma once

#include <array>
#include <limits>
#include <optional>

#include "cvqkd/core.hpp"

namespace cvqkd {

/// Spectral shape for injected excess noise: noise symbols, one every
/// `samples_per_symbol` samples, convolved with `taps` (tap `centre` sits on
/// the symbol) and shifted to `center_frequency` in Alice's frame.
struct NoiseShape {
    std::vector<double> taps;
    std::size_t samples_per_symbol{1};
    std::size_t centre{0};
    double center_frequency{0.0};
};

struct ChannelParams {
    double length_km{0.0};
    double atten_db_per_km{0.2};
    double combined_linewidth{2e3};  // Hz, sum of both laser linewidths
    /// LO frequency minus Alice's laser frequency. In Bob's LO frame the
    /// received field rotates at -freq_offset.
    double freq_offset{2e9};
    double freq_drift{0.0};          // Hz/s
    double pol_drift_rate{0.0};      // rad/s, random-walk scale
    double jones_block_duration{1e-7};  // s, Jones matrix held constant per block
    double initial_pol_angle{0.0};   // rad, static rotation about a random axis
    double initial_phase{0.0};       // rad, start of the laser phase walk
    Snu xi_inject{0.0};              // input-referred excess noise
    /// Excess noise confined to the signal mode. Empty: white over the whole
    /// simulation band, which a heterodyne receiver also collects from the
    /// image band (so it reads 2*xi).
    std::optional<NoiseShape> xi_shape{};
    /// Scattering pedestal from the pilot, dB relative to the quantum signal
    /// power; disabled when empty.
    std::optional<double> crosstalk_level_db{};
    double crosstalk_bandwidth{100e6};
    double crosstalk_center{0.0};    // envelope frequency of the pilot line
    /// Rate defining the noise normalization (the symbol rate): a noise
    /// variance of 1 SNU per quadrature is measured in a matched filter at
    /// this rate.
    double reference_rate{1e9};

    double transmittance() const;
    void validate() const;
};

/// T = 10^(-atten*length/10).
double transmittance(double length_km, double atten_db_per_km);

/// SU(2) Jones matrix [[a, -conj(b)], [b, conj(a)]] with |a|^2 + |b|^2 = 1.
struct Jones {
    cplx a{1.0};
    cplx b{0.0};

    std::array<cplx, 4> matrix() const noexcept { return {a, -std::conj(b), b, std::conj(a)}; }
    /// max |(J J^H - I)_ij|
    double unitarity_error() const noexcept;
    Jones operator*(const Jones& rhs) const noexcept;
    void renormalize() noexcept;
    /// exp(-i theta/2 n.sigma) for a unit axis n.
    static Jones rotation(double theta, double nx, double ny, double nz) noexcept;
};

using JonesTrajectory = std::vector<Jones>;

/// Streaming fiber model. Samples are processed in order; the object keeps
/// the laser phase, Jones matrix and noise-generator state between calls, so
/// splitting a record into chunks does not change the output.
class FiberChannel {
   public:
    /// `reference_power` is the mean quantum-signal power the crosstalk level
    /// is referenced to.
    FiberChannel(const ChannelParams& p, double sample_rate, std::uint64_t seed,
                 double reference_power);

    void process(std::span<cplx> h, std::span<cplx> v);

    const Jones& jones() const noexcept { return jones_; }
    std::size_t samples_processed() const noexcept { return n_; }
    void record_trajectory(bool on) noexcept { record_ = on; }
    const JonesTrajectory& trajectory() const noexcept { return trajectory_; }

   private:
    void step_jones();
    cplx shaped_xi(std::size_t n);

    ChannelParams p_;
    double fs_;
    double sqrt_t_;
    double phase_sigma_;
    double xi_sigma_;
    double xt_scale_{0.0};
    double xt_pole_{0.0};
    std::size_t jones_block_;
    double jones_sigma_;

    GaussianSource phase_rng_;
    GaussianSource xi_rng_;
    GaussianSource xt_rng_;
    GaussianSource jones_rng_;

    std::size_t n_{0};
    double phase_{0.0};
    Jones jones_{};
    std::array<cplx, 4> xt_state_{};
    std::vector<cplx> xi_symbols_;  // noise symbols [xi_first_, xi_first_ + size)
    std::size_t xi_first_{0};
    bool record_{false};
    JonesTrajectory trajectory_;
};

/// Whole-record convenience wrapper; the crosstalk reference power is the
/// mean power of the quantum branch.
DualPolWaveform apply_channel(DualPolWaveform wave, const ChannelParams& p, std::uint64_t seed);

}  // namespace cvqkd
