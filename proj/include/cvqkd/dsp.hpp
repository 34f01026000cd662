#pragma once

#include <array>
#include <optional>

#include "cvqkd/core.hpp"
#include "cvqkd/filters.hpp"

namespace cvqkd {

/// Band plan for digital demodulation. Centre frequencies are stored as the
/// transmitter-side offsets; the IF centres follow from the estimated LO
/// offset (the LO sits above Alice's laser, so the quantum band appears at
/// fo - signal_shift with inverted spectrum and the pilot at fo).
struct DemodPlan {
    double adc_rate{10e9};
    double symbol_rate{1e9};
    double nominal_lo{2e9};
    double signal_shift{1.3e9};
    double pilot_offset{0.0};
    double quantum_bandwidth{1.3e9};
    double pilot_bandwidth{10e6};
    double quantum_transition{0.1e9};  // LPF transition width beyond the band edge
    double pilot_transition{5e6};
    double stop_db{60.0};
    std::size_t samples_per_symbol{2};  // output grid
    double detector_bw{1.6e9};          // front-end response to undo, <= 0: none
    double rolloff{0.3};
    std::size_t mf_span{32};

    /// Signed envelope frequency of each band for a given LO offset.
    double quantum_center(double fo) const noexcept { return signal_shift - fo; }
    double pilot_center(double fo) const noexcept { return pilot_offset - fo; }
    std::size_t decimation() const;
    double output_rate() const noexcept { return symbol_rate * static_cast<double>(samples_per_symbol); }
    void validate() const;
};

// ---------------------------------------------------------------------------
// 1) Frequency-offset estimation
// ---------------------------------------------------------------------------
struct FoEstimate {
    double frequency{0.0};
    double bin_width{0.0};
    double peak_over_median_db{0.0};
};

/// Pilot line frequency from a Hann-windowed FFT peak inside
/// [nominal - window, nominal + window], refined by a three-point parabola on
/// the log-magnitude. Needs at least 2^14 samples; uses the longest
/// power-of-two prefix up to 2^22.
FoEstimate estimate_fo_detail(const RealWaveform& pilot_if, double nominal, double search_window);
double estimate_fo(const RealWaveform& pilot_if, double nominal, double search_window);

// ---------------------------------------------------------------------------
// 2) Demodulation and pilot phase compensation
// ---------------------------------------------------------------------------
struct Baseband {
    ComplexWaveform quantum;
    ComplexWaveform pilot;
};

/// Down-convert both bands of a real IF record to complex baseband on the
/// plan's output grid. Each band is a complex band-pass (mix by
/// 2*exp(-i 2 pi f_c t), then linear-phase Kaiser low-pass), so the signal
/// scale of the original envelope is preserved.
Baseband demodulate(const RealWaveform& if_record, const DemodPlan& plan, double fo_hat,
                    bool with_pilot = true);

/// Only the quantum band.
ComplexWaveform demodulate_quantum(const RealWaveform& if_record, const DemodPlan& plan, double fo_hat);

/// quantum(t) * exp(-i arg pilot(t - lag)).
ComplexWaveform pilot_phase_compensate(const ComplexWaveform& quantum_bb, const ComplexWaveform& pilot_bb,
                                       std::ptrdiff_t lag = 0, double min_pilot_power = 1e-20);

/// Root-raised-cosine matched filter on the plan's output grid; unit gain for
/// the transmitted symbols.
ComplexWaveform matched_filter(const ComplexWaveform& bb, const DemodPlan& plan);

// ---------------------------------------------------------------------------
// Symbol synchronization
// ---------------------------------------------------------------------------
struct SyncResult {
    std::size_t offset{0};  // sample index of the first training symbol
    double peak{0.0};
    double sidelobe_rms{0.0};
};

/// Integer-sample timing from the peak of the training cross-correlation
/// (summed in power over all supplied branches), searching offsets
/// [0, max_offset]. Earliest maximal peak wins; the peak must exceed 5x the
/// RMS sidelobe.
SyncResult symbol_sync(std::span<const ComplexWaveform* const> branches, std::span<const cplx> training,
                       std::size_t sps, std::size_t max_offset);
SyncResult symbol_sync(const ComplexWaveform& mf_output, std::span<const cplx> training, std::size_t sps,
                       std::size_t max_offset);

/// Samples at offset + k*sps, k in [0, count); missing samples are zero.
std::vector<cplx> sample_symbols(const ComplexWaveform& mf_output, std::size_t offset, std::size_t sps,
                                 std::size_t count);

// ---------------------------------------------------------------------------
// 3) Real-valued 2x4 MIMO FIR equalizer trained by LMS
// ---------------------------------------------------------------------------

/// The four real input streams: X and P of the horizontal (quantum) and
/// vertical (pilot) branches.
struct QuadStreams {
    std::vector<double> hx, hp, vx, vp;

    std::size_t size() const noexcept { return hx.size(); }
    std::array<const std::vector<double>*, 4> inputs() const noexcept { return {&hx, &hp, &vx, &vp}; }
    static QuadStreams from_complex(std::span<const cplx> h, std::span<const cplx> v);
    QuadStreams slice(std::size_t begin, std::size_t end) const;
};

struct EqualizerWeights {
    /// taps[row][input][k]; row 0 produces X, row 1 produces P; inputs are
    /// ordered (hx, hp, vx, vp). Window tap k multiplies input sample
    /// (centre + half - k).
    std::array<std::array<std::vector<double>, 4>, 2> taps;
    std::size_t n_taps{0};
    double mu{0.0};
    std::size_t training_length{0};
    double final_mse{0.0};
    double initial_mse{0.0};

    std::size_t half() const noexcept { return n_taps / 2; }
    double row_energy(int row) const noexcept;
    /// Scale each output row to unit tap energy so white input noise of any
    /// level passes with that same level.
    void normalize_noise_gain();
};

struct LmsOptions {
    std::size_t n_taps{21};
    double mu{1e-3};  // normalized to the mean input power per stream
};

/// Upper bound for the normalized step size: 2 / (4 * n_taps).
double lms_mu_max(std::size_t n_taps) noexcept;

/// One LMS pass over the training streams. Target k is paired with the input
/// window centred on sample k, for k in [half, n - half). Starts from zero
/// weights unless `initial` is given.
EqualizerWeights lms_train(const QuadStreams& train, std::span<const cplx> targets, const LmsOptions& opt,
                           const EqualizerWeights* initial = nullptr);

/// Apply the weights; output k corresponds to input sample k + half, so the
/// output has n - n_taps + 1 samples.
std::pair<std::vector<double>, std::vector<double>> equalize(const EqualizerWeights& w, const QuadStreams& s);

}  // namespace cvqkd
