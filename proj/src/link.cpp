#include "cvqkd/link.hpp"

#include <algorithm>
#include <cmath>

namespace cvqkd {

void LinkConfig::finalize() {
    tx.pilot_amplitude = pilot_amplitude_for_ratio(pilot_ratio_db, v_a);
    channel.reference_rate = tx.symbol_rate;
    channel.crosstalk_center = tx.pilot_offset;
    // Excess noise in the signal mode: shaped and shifted like the symbols.
    auto pulse = tx_pulse(tx);
    const std::size_t centre = tx.pulse.kind == PulseKind::rectangular ? 0 : pulse.size() / 2;
    channel.xi_shape = NoiseShape{std::move(pulse), tx.samples_per_symbol(), centre, tx.signal_shift};
    detector.reference_rate = tx.symbol_rate;
    demod.adc_rate = detector.adc_rate;
    demod.symbol_rate = tx.symbol_rate;
    demod.nominal_lo = detector.lo_offset;
    demod.signal_shift = tx.signal_shift;
    demod.pilot_offset = tx.pilot_offset;
    demod.detector_bw = detector.detector_bw;
    demod.rolloff = tx.pulse.rolloff;
    demod.mf_span = tx.pulse.span_symbols;
}

void LinkConfig::validate() const {
    require_variance(v_a, "v_a", "config");
    if (training_length == 0) throw ParameterError("config", "training_length must be >= 1");
    if (payload_length < min_estimation_block)
        throw ParameterError("config", "payload_length must be >= " + std::to_string(min_estimation_block));
    if (guard_symbols < tx.pulse.span_symbols)
        throw ParameterError("config", "guard_symbols must cover the pulse span");
    if (chunk_samples == 0) throw ParameterError("config", "chunk_samples must be >= 1");
    if (!(fo_search_window > 0.0)) throw ParameterError("config", "fo_search_window must be > 0");
    tx.validate();
    channel.validate();
    detector.validate();
    demod.validate();
    const double tx_over_adc = tx.dac_rate / detector.adc_rate;
    if (std::abs(tx_over_adc - std::round(tx_over_adc)) > 1e-9 * tx_over_adc)
        throw ParameterError("config", "dac_rate must be an integer multiple of adc_rate");
    if (guard_symbols < lms.n_taps) throw ParameterError("config", "guard_symbols must be >= lms.n_taps");
}

LinkConfig LinkConfig::scaled(double f) const {
    if (!(f > 0.0)) throw ParameterError("config", "scale factor must be > 0");
    LinkConfig c = *this;
    c.tx.symbol_rate *= f;
    c.tx.dac_rate *= f;
    c.tx.signal_shift *= f;
    c.tx.pilot_offset *= f;
    c.channel.combined_linewidth *= f;
    c.channel.freq_offset *= f;
    c.channel.freq_drift *= f * f;
    c.channel.pol_drift_rate *= f;
    c.channel.jones_block_duration /= f;
    c.channel.crosstalk_bandwidth *= f;
    c.detector.detector_bw *= f;
    c.detector.adc_rate *= f;
    c.detector.lo_offset *= f;
    c.demod.quantum_bandwidth *= f;
    c.demod.pilot_bandwidth *= f;
    c.demod.quantum_transition *= f;
    c.demod.pilot_transition *= f;
    c.fo_search_window *= f;
    c.finalize();
    return c;
}

LinkFrame make_link_frame(const LinkConfig& cfg, std::uint64_t tx_seed, std::uint64_t frame_id) {
    LinkFrame f;
    f.frame = make_frame(cfg.training_length, cfg.payload_length, cfg.v_a, tx_seed, frame_id);
    f.lead = cfg.guard_symbols;
    const auto lead = gaussian_symbols(cfg.guard_symbols, cfg.v_a, SeedPolicy::item(tx_seed, 3));
    const auto tail = gaussian_symbols(cfg.guard_symbols, cfg.v_a, SeedPolicy::item(tx_seed, 4));
    auto& s = f.stream.symbols;
    s.reserve(lead.size() + f.frame.size() + tail.size());
    s.insert(s.end(), lead.symbols.begin(), lead.symbols.end());
    s.insert(s.end(), f.frame.symbols.begin(), f.frame.symbols.end());
    s.insert(s.end(), tail.symbols.begin(), tail.symbols.end());
    f.stream.frame_id = frame_id;
    return f;
}

IfRecords simulate_if(const LinkConfig& cfg, const LinkFrame& frame, const SeedPolicy& seeds) {
    cfg.validate();
    const auto pulse = tx_pulse(cfg.tx);
    const std::size_t total = frame.stream.size() * cfg.tx.samples_per_symbol();
    FiberChannel channel(cfg.channel, cfg.tx.dac_rate, seeds.channel, 2.0 * cfg.v_a.value);
    HeterodyneReceiver rx(cfg.detector, cfg.tx.dac_rate, seeds.rx);
    IfRecords out;
    out.h.sample_rate = out.v.sample_rate = cfg.detector.adc_rate;
    out.h.samples.reserve(total / rx.decimation() + 1);
    out.v.samples.reserve(total / rx.decimation() + 1);
    for (std::size_t b = 0; b < total; b += cfg.chunk_samples) {
        const std::size_t e = std::min(total, b + cfg.chunk_samples);
        auto h = shape_range(frame.stream, cfg.tx, pulse, b, e);
        auto v = pilot_range(cfg.tx, b, e);
        channel.process(h, v);
        rx.process(h, v, out);
    }
    rx.finish(out);
    return out;
}

namespace {

ComplexWaveform compensated_mf(const ComplexWaveform& q, const ComplexWaveform& pilot, std::ptrdiff_t lag,
                               const DemodPlan& plan) {
    return matched_filter(pilot_phase_compensate(q, pilot, lag), plan);
}

ComplexWaveform head(const ComplexWaveform& w, std::size_t n) {
    ComplexWaveform h;
    h.sample_rate = w.sample_rate;
    h.samples.assign(w.samples.begin(), w.samples.begin() + static_cast<std::ptrdiff_t>(std::min(n, w.size())));
    return h;
}

}  // namespace

LinkBlock recover(const LinkConfig& cfg, const IfRecords& rec, const LinkFrame& frame, const SeedPolicy& seeds,
                  std::uint64_t block_id) {
    const DemodPlan& plan = cfg.demod;
    plan.validate();
    const std::size_t sps = plan.samples_per_symbol;
    const std::size_t K = cfg.training_length;
    const std::size_t N = cfg.payload_length;
    const std::size_t half = cfg.lms.n_taps / 2;
    const auto training = frame.frame.training();

    LinkBlock out;
    out.block_id = block_id;
    out.fo_hat = estimate_fo(rec.v, plan.nominal_lo, cfg.fo_search_window);

    ComplexWaveform qh = demodulate_quantum(rec.h, plan, out.fo_hat);
    Baseband bv = demodulate(rec.v, plan, out.fo_hat, true);

    // Lag selection on the training region only.
    const std::size_t max_offset = (2 * frame.lead + 16) * sps;
    const std::size_t window = max_offset + (K + plan.mf_span + 8) * sps;
    {
        const auto qh_w = head(qh, window), qv_w = head(bv.quantum, window), p_w = head(bv.pilot, window);
        double best_peak = -1.0;
        const auto n_lag = static_cast<std::ptrdiff_t>(cfg.pilot_lag_search);
        // Order 0, -1, 1, -2, 2, ...; a longer lag must win by a clear margin.
        for (std::ptrdiff_t i = 0; i <= 2 * n_lag; ++i) {
            const std::ptrdiff_t lag = (i % 2 == 0 ? 1 : -1) * ((i + 1) / 2);
            const auto mh = compensated_mf(qh_w, p_w, lag, plan);
            const auto mv = compensated_mf(qv_w, p_w, lag, plan);
            const ComplexWaveform* br[] = {&mh, &mv};
            try {
                const auto s = symbol_sync(br, training, sps, max_offset);
                if (s.peak > best_peak * (1.0 + 1e-3)) {
                    best_peak = s.peak;
                    out.pilot_lag = lag;
                }
            } catch (const ProcessingError&) {
            }
        }
    }

    const auto mh = compensated_mf(qh, bv.pilot, out.pilot_lag, plan);
    const auto mv = compensated_mf(bv.quantum, bv.pilot, out.pilot_lag, plan);
    qh = {};
    bv = {};
    {
        const ComplexWaveform* br[] = {&mh, &mv};
        out.sync = symbol_sync(br, training, sps, max_offset);
    }
    if (out.sync.offset < half * sps)
        throw ProcessingError("dsp", "sync failure: training starts before the equalizer window");

    const std::size_t start = out.sync.offset - half * sps;
    const std::size_t count = K + N + 2 * half;
    const auto sh = sample_symbols(mh, start, sps, count);
    const auto sv = sample_symbols(mv, start, sps, count);
    const auto streams = QuadStreams::from_complex(sh, sv);

    // Stream index j carries frame symbol j - half.
    auto targets_for = [&](std::size_t first_symbol, std::size_t n_sym) {
        std::vector<cplx> t(n_sym + 2 * half, cplx{0.0});
        for (std::size_t i = 0; i < n_sym; ++i) t[i + half] = frame.frame.symbols[first_symbol + i];
        return t;
    };

    auto raw = lms_train(streams.slice(0, K + 2 * half), targets_for(0, K), cfg.lms);
    out.weights = raw;
    out.weights.normalize_noise_gain();

    out.bob_x.reserve(N);
    out.bob_p.reserve(N);
    const std::size_t seg = cfg.retrain_interval > 0 ? cfg.retrain_interval : N;
    for (std::size_t b = 0; b < N; b += seg) {
        const std::size_t e = std::min(N, b + seg);
        const auto sl = streams.slice(K + b, K + e + 2 * half);
        auto [x, p] = equalize(out.weights, sl);
        out.bob_x.insert(out.bob_x.end(), x.begin(), x.end());
        out.bob_p.insert(out.bob_p.end(), p.begin(), p.end());
        if (cfg.retrain_interval > 0 && e < N && e - b >= 10 * cfg.lms.n_taps) {
            raw = lms_train(sl, targets_for(K + b, e - b), cfg.lms, &raw);
            out.weights = raw;
            out.weights.normalize_noise_gain();
        }
    }

    if (cfg.calibration_symbols > 0) {
        const std::size_t n_cal = cfg.calibration_symbols * plan.decimation() * sps;
        const auto vac = vacuum_record(n_cal, cfg.detector, SeedPolicy::item(seeds.rx, 31));
        const auto el = electronic_record(n_cal, cfg.detector, SeedPolicy::item(seeds.rx, 32));
        out.calibration = calibrate_snu(vac, el, plan);
        if (cfg.apply_snu_calibration) {
            const double g = 1.0 / std::sqrt(out.calibration->snu_scale);
            for (auto& x : out.bob_x) x *= g;
            for (auto& p : out.bob_p) p *= g;
        }
    }

    if (cfg.keep_raw) {
        const auto raw_bb = matched_filter(demodulate_quantum(rec.h, plan, plan.nominal_lo), plan);
        const auto pts = sample_symbols(raw_bb, out.sync.offset + K * sps, sps, N);
        out.raw_x.resize(N);
        out.raw_p.resize(N);
        for (std::size_t i = 0; i < N; ++i) {
            out.raw_x[i] = pts[i].real();
            out.raw_p[i] = pts[i].imag();
        }
    }

    const auto payload = frame.frame.payload();
    out.alice.assign(payload.begin(), payload.end());
    out.estimate = estimate_channel(out.alice, out.bob_x, out.bob_p, cfg.detector.eta, cfg.detector.v_el, block_id);
    return out;
}

LinkBlock run_block(const LinkConfig& cfg, std::uint64_t master_seed, std::uint64_t block_id) {
    const auto seeds = derive_seeds(master_seed).for_item(block_id);
    const auto frame = make_link_frame(cfg, seeds.tx, block_id);
    const auto rec = simulate_if(cfg, frame, seeds);
    return recover(cfg, rec, frame, seeds, block_id);
}

SecurityParams security_for(const SecurityParams& base, const NoiseEstimate& e) {
    SecurityParams p = base;
    p.T = std::clamp(e.T_hat, 1e-12, 1.0);
    p.xi = std::max(0.0, e.xi_hat.value);
    return p;
}

std::vector<TimeseriesRow> noise_timeseries(const LinkConfig& cfg, const SecurityParams& base, std::size_t n_blocks,
                                            std::uint64_t master_seed) {
    std::vector<TimeseriesRow> rows;
    if (n_blocks == 0) return rows;
    SecurityParams nominal = base;
    nominal.T = cfg.channel.transmittance();
    const double threshold = null_threshold(nominal);
    double sum_xi = 0.0, sum_skr = 0.0;
    for (std::size_t b = 0; b < n_blocks; ++b) {
        const auto blk = run_block(cfg, master_seed, b);
        TimeseriesRow r;
        r.block_id = b;
        r.T_hat = blk.estimate.T_hat;
        r.xi_hat = blk.estimate.xi_hat.value;
        r.skr_bps = skr(security_for(base, blk.estimate)).skr_bps;
        sum_xi += r.xi_hat;
        sum_skr += r.skr_bps;
        r.running_mean_xi = sum_xi / static_cast<double>(b + 1);
        r.running_mean_skr = sum_skr / static_cast<double>(b + 1);
        r.null_threshold = threshold;
        rows.push_back(r);
    }
    return rows;
}

}  // namespace cvqkd
