#include "cvqkd/txsim.hpp"

#include <cmath>
#include <numbers>

#include "cvqkd/filters.hpp"

namespace cvqkd {

namespace {
constexpr double two_pi = 2.0 * std::numbers::pi;

cplx rotor(double cycles_per_sample, std::size_t n) {
    double c = cycles_per_sample * static_cast<double>(n);
    c -= std::floor(c);
    return std::polar(1.0, two_pi * c);
}
}  // namespace

std::size_t TxParams::samples_per_symbol() const {
    const double r = dac_rate / symbol_rate;
    const double n = std::round(r);
    if (!(n >= 1.0) || std::abs(r - n) > 1e-9 * r)
        throw ParameterError("txsim", "dac_rate must be an integer multiple of symbol_rate");
    return static_cast<std::size_t>(n);
}

void TxParams::validate() const {
    if (!(symbol_rate > 0.0) || !(dac_rate > 0.0))
        throw ParameterError("txsim", "rates must be > 0");
    if (dac_rate < 2.0 * (std::abs(signal_shift) + symbol_rate))
        throw ParameterError("txsim", "Nyquist violation: dac_rate < 2*(signal_shift + symbol_rate)");
    if (!(pilot_amplitude >= 0.0)) throw ParameterError("txsim", "pilot_amplitude must be >= 0");
    if (std::abs(pilot_offset) >= 0.5 * dac_rate)
        throw ParameterError("txsim", "pilot_offset beyond DAC Nyquist");
    if (pulse.rolloff < 0.0 || pulse.rolloff > 1.0)
        throw ParameterError("txsim", "roll-off must lie in [0, 1]");
    (void)samples_per_symbol();
}

double pilot_amplitude_for_ratio(double ratio_db, Snu v_a) noexcept {
    return std::sqrt(2.0 * v_a.value * std::pow(10.0, ratio_db / 10.0));
}

std::vector<double> tx_pulse(const TxParams& p) {
    const std::size_t sps = p.samples_per_symbol();
    if (p.pulse.kind == PulseKind::rectangular) return rect_taps(sps);
    return rrc_taps(sps, p.pulse.rolloff, p.pulse.span_symbols);
}

std::vector<cplx> shape_range(const SymbolFrame& frame, const TxParams& p,
                              std::span<const double> pulse, std::size_t begin, std::size_t end) {
    const std::size_t sps = p.samples_per_symbol();
    const std::size_t total = frame.size() * sps;
    end = std::min(end, total);
    std::vector<cplx> out(end > begin ? end - begin : 0, cplx{0.0});
    if (out.empty()) return out;

    // Rectangular pulses start at their symbol; RRC taps are centred on it.
    const std::ptrdiff_t centre =
        p.pulse.kind == PulseKind::rectangular ? 0 : static_cast<std::ptrdiff_t>(pulse.size() / 2);
    const auto m = static_cast<std::ptrdiff_t>(pulse.size());
    const auto isps = static_cast<std::ptrdiff_t>(sps);
    const auto nsym = static_cast<std::ptrdiff_t>(frame.size());
    const double shift = p.signal_shift / p.dac_rate;

    for (std::size_t n = begin; n < end; ++n) {
        const auto in = static_cast<std::ptrdiff_t>(n);
        // symbols k with 0 <= in - k*sps + centre < m
        std::ptrdiff_t k_hi = (in + centre) / isps;
        std::ptrdiff_t k_lo = in + centre - (m - 1);
        k_lo = k_lo <= 0 ? 0 : (k_lo + isps - 1) / isps;
        k_hi = std::min(k_hi, nsym - 1);
        cplx acc{0.0};
        for (std::ptrdiff_t k = k_lo; k <= k_hi; ++k)
            acc += pulse[static_cast<std::size_t>(in - k * isps + centre)] *
                   frame.symbols[static_cast<std::size_t>(k)];
        out[n - begin] = shift == 0.0 ? acc : acc * rotor(shift, n);
    }
    return out;
}

ComplexWaveform shape_and_shift(const SymbolFrame& frame, const TxParams& p) {
    p.validate();
    if (frame.size() == 0) throw ParameterError("txsim", "frame must be nonempty");
    frame.validate("txsim");
    const auto pulse = tx_pulse(p);
    ComplexWaveform w;
    w.sample_rate = p.dac_rate;
    w.samples = shape_range(frame, p, pulse, 0, frame.size() * p.samples_per_symbol());
    return w;
}

std::vector<cplx> pilot_range(const TxParams& p, std::size_t begin, std::size_t end) {
    std::vector<cplx> out(end > begin ? end - begin : 0, cplx{0.0});
    if (p.pilot_amplitude == 0.0) return out;
    const double f = p.pilot_offset / p.dac_rate;
    for (std::size_t n = begin; n < end; ++n)
        out[n - begin] = p.pilot_amplitude * (f == 0.0 ? cplx{1.0} : rotor(f, n));
    return out;
}

ComplexWaveform make_pilot(std::size_t n_samples, const TxParams& p) {
    if (!(p.pilot_amplitude >= 0.0)) throw ParameterError("txsim", "pilot_amplitude must be >= 0");
    ComplexWaveform w;
    w.sample_rate = p.dac_rate;
    w.samples = pilot_range(p, 0, n_samples);
    return w;
}

DualPolWaveform mux_polarization(ComplexWaveform signal, ComplexWaveform pilot) {
    if (signal.size() != pilot.size())
        throw ParameterError("txsim", "signal and pilot lengths differ");
    if (signal.sample_rate != pilot.sample_rate)
        throw ParameterError("txsim", "signal and pilot sample rates differ");
    return DualPolWaveform{std::move(signal), std::move(pilot)};
}

}  // namespace cvqkd
