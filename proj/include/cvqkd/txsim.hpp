#pragma once

#include "cvqkd/core.hpp"

namespace cvqkd {

enum class PulseKind { root_raised_cosine, rectangular };

struct PulseShape {
    PulseKind kind{PulseKind::root_raised_cosine};
    double rolloff{0.3};
    std::size_t span_symbols{32};  // RRC truncation, total support in symbols
};

/// Alice's transmitter. Rates in Hz; the pilot amplitude is in the same field
/// units as the symbols (|field|^2 averaged over a symbol equals |symbol|^2).
struct TxParams {
    double symbol_rate{1e9};
    double dac_rate{30e9};
    double signal_shift{1.3e9};
    PulseShape pulse{};
    double pilot_amplitude{0.0};
    double pilot_offset{0.0};

    std::size_t samples_per_symbol() const;
    void validate() const;
};

/// Pilot amplitude whose power sits `ratio_db` above the mean quantum power
/// 2*v_a (both quadratures).
double pilot_amplitude_for_ratio(double ratio_db, Snu v_a) noexcept;

/// Pulse taps at the DAC rate for `p`.
std::vector<double> tx_pulse(const TxParams& p);

/// Samples [begin, end) of the shaped, frequency-shifted symbol stream.
/// Symbol k is centred on sample k*sps; the full record has size()*sps
/// samples. Lets callers stream long frames in chunks.
std::vector<cplx> shape_range(const SymbolFrame& frame, const TxParams& p,
                              std::span<const double> pulse, std::size_t begin, std::size_t end);

/// Pulse-shape the frame and shift it to `signal_shift`.
ComplexWaveform shape_and_shift(const SymbolFrame& frame, const TxParams& p);

/// CW pilot tone of constant modulus at `pilot_offset`.
ComplexWaveform make_pilot(std::size_t n_samples, const TxParams& p);
std::vector<cplx> pilot_range(const TxParams& p, std::size_t begin, std::size_t end);

/// Combine the quantum signal (h) and pilot (v) on orthogonal polarizations.
DualPolWaveform mux_polarization(ComplexWaveform signal, ComplexWaveform pilot);

}  // namespace cvqkd
