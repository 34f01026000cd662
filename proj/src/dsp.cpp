#include "cvqkd/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cvqkd {

namespace {
constexpr double two_pi = 2.0 * std::numbers::pi;

std::size_t largest_pow2_at_most(std::size_t n) {
    std::size_t p = 1;
    while (p * 2 <= n) p *= 2;
    return p;
}

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}
}  // namespace

std::size_t DemodPlan::decimation() const {
    const double r = adc_rate / output_rate();
    const double n = std::round(r);
    if (!(n >= 1.0) || std::abs(r - n) > 1e-9 * r)
        throw ParameterError("dsp", "adc_rate must be an integer multiple of symbol_rate * samples_per_symbol");
    return static_cast<std::size_t>(n);
}

void DemodPlan::validate() const {
    if (!(adc_rate > 0.0) || !(symbol_rate > 0.0)) throw ParameterError("dsp", "rates must be > 0");
    if (samples_per_symbol == 0) throw ParameterError("dsp", "samples_per_symbol must be >= 1");
    (void)decimation();
    if (!(quantum_bandwidth > 0.0) || !(pilot_bandwidth > 0.0))
        throw ParameterError("dsp", "band-pass bandwidths must be > 0");
    const double q_lo = std::abs(quantum_center(nominal_lo));
    const double p_c = std::abs(pilot_center(nominal_lo));
    const double q_edge = q_lo + 0.5 * quantum_bandwidth;
    if (q_edge > p_c - 0.5 * pilot_bandwidth && q_lo - 0.5 * quantum_bandwidth < p_c + 0.5 * pilot_bandwidth)
        throw ParameterError("dsp", "quantum and pilot bands overlap");
    const double nyq_out = 0.5 * output_rate();
    if (0.5 * quantum_bandwidth + quantum_transition >= nyq_out ||
        0.5 * pilot_bandwidth + pilot_transition >= nyq_out)
        throw ParameterError("dsp", "low-pass cutoff above the output Nyquist frequency");
    if (std::max(q_edge, p_c + 0.5 * pilot_bandwidth) >= 0.5 * adc_rate)
        throw ParameterError("dsp", "band plan exceeds the ADC Nyquist frequency");
}

FoEstimate estimate_fo_detail(const RealWaveform& pilot_if, double nominal, double search_window) {
    constexpr std::size_t min_len = std::size_t{1} << 14;
    constexpr std::size_t max_len = std::size_t{1} << 22;
    if (pilot_if.size() < min_len)
        throw ParameterError("dsp", "frequency estimation needs >= 2^14 samples");
    const std::size_t n = largest_pow2_at_most(std::min(pilot_if.size(), max_len));
    std::vector<cplx> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double w = 0.5 - 0.5 * std::cos(two_pi * static_cast<double>(i) / static_cast<double>(n));
        x[i] = w * pilot_if.samples[i];
    }
    const auto spec = dft(std::span<const cplx>(x));
    const std::size_t half = n / 2;
    std::vector<double> mag(half + 1);
    for (std::size_t k = 0; k <= half; ++k) mag[k] = std::abs(spec[k]);

    const double df = pilot_if.sample_rate / static_cast<double>(n);
    const auto lo = static_cast<std::size_t>(std::max(1.0, std::floor((nominal - search_window) / df)));
    const auto hi = static_cast<std::size_t>(
        std::min(static_cast<double>(half - 1), std::ceil((nominal + search_window) / df)));
    if (lo > hi) throw ParameterError("dsp", "frequency search window outside the spectrum");

    std::size_t peak = lo;
    for (std::size_t k = lo; k <= hi; ++k)
        if (mag[k] > mag[peak]) peak = k;

    std::vector<double> sorted(mag.begin() + 1, mag.end());
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2), sorted.end());
    const double median = sorted[sorted.size() / 2];
    const double ratio_db = 20.0 * std::log10(mag[peak] / std::max(median, 1e-300));
    if (!(ratio_db > 6.0))
        throw ProcessingError("dsp", "no pilot peak 6 dB above the median spectrum near " +
                                         std::to_string(nominal) + " Hz");

    double delta = 0.0;
    if (peak > 0 && peak < half && mag[peak - 1] > 0.0 && mag[peak + 1] > 0.0) {
        const double a = std::log(mag[peak - 1]);
        const double b = std::log(mag[peak]);
        const double c = std::log(mag[peak + 1]);
        const double den = a - 2.0 * b + c;
        if (den < 0.0) delta = std::clamp(0.5 * (a - c) / den, -0.5, 0.5);
    }
    return FoEstimate{(static_cast<double>(peak) + delta) * df, df, ratio_db};
}

double estimate_fo(const RealWaveform& pilot_if, double nominal, double search_window) {
    return estimate_fo_detail(pilot_if, nominal, search_window).frequency;
}

namespace {
std::vector<double> front_end(const RealWaveform& rec, const DemodPlan& plan) {
    if (plan.detector_bw > 0.0)
        return invert_one_pole(rec.samples, OnePoleLowpass(plan.detector_bw, rec.sample_rate).pole());
    return rec.samples;
}

ComplexWaveform band(std::span<const double> x, double fs, double centre, double bandwidth,
                     double transition, const DemodPlan& plan) {
    std::vector<cplx> mixed(x.size());
    const double f = centre / fs;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double c = -f * static_cast<double>(i);
        c -= std::floor(c);
        mixed[i] = 2.0 * x[i] * std::polar(1.0, two_pi * c);
    }
    const double pass = 0.5 * bandwidth / fs;
    const double stop = (0.5 * bandwidth + transition) / fs;
    FirFilter lpf(kaiser_lowpass(pass, stop, plan.stop_db), plan.decimation());
    ComplexWaveform out;
    out.sample_rate = plan.output_rate();
    out.samples = lpf.apply(std::span<const cplx>(mixed));
    return out;
}

void check_record(const RealWaveform& rec, const DemodPlan& plan) {
    rec.validate("dsp");
    plan.validate();
    if (std::abs(rec.sample_rate - plan.adc_rate) > 1e-9 * plan.adc_rate)
        throw ParameterError("dsp", "IF record rate differs from the plan's adc_rate");
}
}  // namespace

Baseband demodulate(const RealWaveform& if_record, const DemodPlan& plan, double fo_hat, bool with_pilot) {
    check_record(if_record, plan);
    const auto x = front_end(if_record, plan);
    Baseband bb;
    bb.quantum = band(x, if_record.sample_rate, plan.quantum_center(fo_hat), plan.quantum_bandwidth,
                      plan.quantum_transition, plan);
    if (with_pilot)
        bb.pilot = band(x, if_record.sample_rate, plan.pilot_center(fo_hat), plan.pilot_bandwidth,
                        plan.pilot_transition, plan);
    return bb;
}

ComplexWaveform demodulate_quantum(const RealWaveform& if_record, const DemodPlan& plan, double fo_hat) {
    return demodulate(if_record, plan, fo_hat, false).quantum;
}

ComplexWaveform pilot_phase_compensate(const ComplexWaveform& q, const ComplexWaveform& p, std::ptrdiff_t lag,
                                       double min_pilot_power) {
    if (q.size() != p.size()) throw ParameterError("dsp", "quantum and pilot baseband lengths differ");
    if (p.samples.empty()) throw ParameterError("dsp", "empty pilot baseband");
    const double pw = mean_power(p.samples);
    if (!(pw > min_pilot_power))
        throw ProcessingError("dsp", "pilot power " + std::to_string(pw) + " below compensation threshold");
    ComplexWaveform out;
    out.sample_rate = q.sample_rate;
    out.samples.resize(q.size());
    const auto n = static_cast<std::ptrdiff_t>(q.size());
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const std::ptrdiff_t j = std::clamp<std::ptrdiff_t>(i - lag, 0, n - 1);
        const cplx ref = p.samples[static_cast<std::size_t>(j)];
        const double m = std::abs(ref);
        out.samples[static_cast<std::size_t>(i)] = m > 0.0 ? q.samples[static_cast<std::size_t>(i)] * std::conj(ref) / m
                                                           : cplx{0.0};
    }
    return out;
}

ComplexWaveform matched_filter(const ComplexWaveform& bb, const DemodPlan& plan) {
    auto taps = rrc_taps(plan.samples_per_symbol, plan.rolloff, plan.mf_span);
    for (auto& t : taps) t /= static_cast<double>(plan.samples_per_symbol);
    ComplexWaveform out;
    out.sample_rate = bb.sample_rate;
    out.samples = FirFilter(std::move(taps)).apply(std::span<const cplx>(bb.samples));
    return out;
}

SyncResult symbol_sync(std::span<const ComplexWaveform* const> branches, std::span<const cplx> training,
                       std::size_t sps, std::size_t max_offset) {
    if (training.empty()) throw ProcessingError("dsp", "sync failure: no training sequence in frame");
    if (branches.empty() || sps == 0) throw ParameterError("dsp", "sync needs a branch and sps >= 1");
    const std::size_t len = branches[0]->size();
    const std::size_t k_train = training.size();
    if (len < k_train * sps) throw ProcessingError("dsp", "sync failure: record shorter than training");
    max_offset = std::min(max_offset, len - (k_train - 1) * sps - 1);

    const std::size_t n_off = max_offset + 1;
    std::vector<double> metric(n_off, 0.0);
    const std::size_t taps_per_phase = max_offset / sps + 1;
    const std::size_t nfft = next_pow2(taps_per_phase + k_train);
    Fft fwd(nfft, Fft::Direction::forward);
    Fft inv(nfft, Fft::Direction::inverse);
    std::vector<cplx> tbuf(nfft, cplx{0.0}), tspec(nfft);
    std::copy(training.begin(), training.end(), tbuf.begin());
    fwd.execute(tbuf, tspec);

    std::vector<cplx> ybuf(nfft), yspec(nfft), corr(nfft);
    for (std::size_t ph = 0; ph < sps; ++ph) {
        for (const auto* br : branches) {
            std::fill(ybuf.begin(), ybuf.end(), cplx{0.0});
            for (std::size_t j = 0; j < nfft; ++j) {
                const std::size_t idx = ph + j * sps;
                if (idx >= br->size()) break;
                ybuf[j] = br->samples[idx];
            }
            fwd.execute(ybuf, yspec);
            for (std::size_t i = 0; i < nfft; ++i) yspec[i] *= std::conj(tspec[i]);
            inv.execute(yspec, corr);
            for (std::size_t j = 0; j < taps_per_phase; ++j) {
                const std::size_t off = ph + j * sps;
                if (off >= n_off) break;
                metric[off] += std::norm(corr[j]);
            }
        }
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i < n_off; ++i)
        if (metric[i] > metric[best]) best = i;
    double side = 0.0;
    std::size_t n_side = 0;
    const std::size_t guard = 2 * sps;
    for (std::size_t i = 0; i < n_off; ++i) {
        if (i + guard >= best && i <= best + guard) continue;
        side += metric[i];
        ++n_side;
    }
    SyncResult r;
    r.offset = best;
    r.peak = std::sqrt(metric[best]) / static_cast<double>(nfft);
    r.sidelobe_rms = n_side ? std::sqrt(side / static_cast<double>(n_side)) / static_cast<double>(nfft) : 0.0;
    if (n_side > 0 && !(r.peak > 5.0 * r.sidelobe_rms))
        throw ProcessingError("dsp", "sync failure: ambiguous correlation peak (peak/sidelobe = " +
                                         std::to_string(r.peak / r.sidelobe_rms) + ")");
    return r;
}

SyncResult symbol_sync(const ComplexWaveform& mf_output, std::span<const cplx> training, std::size_t sps,
                       std::size_t max_offset) {
    const ComplexWaveform* br[] = {&mf_output};
    return symbol_sync(br, training, sps, max_offset);
}

std::vector<cplx> sample_symbols(const ComplexWaveform& mf, std::size_t offset, std::size_t sps, std::size_t count) {
    std::vector<cplx> out(count, cplx{0.0});
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t idx = offset + k * sps;
        if (idx >= mf.size()) break;
        out[k] = mf.samples[idx];
    }
    return out;
}

QuadStreams QuadStreams::from_complex(std::span<const cplx> h, std::span<const cplx> v) {
    if (h.size() != v.size()) throw ParameterError("dsp", "branch symbol counts differ");
    QuadStreams s;
    s.hx.resize(h.size());
    s.hp.resize(h.size());
    s.vx.resize(h.size());
    s.vp.resize(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
        s.hx[i] = h[i].real();
        s.hp[i] = h[i].imag();
        s.vx[i] = v[i].real();
        s.vp[i] = v[i].imag();
    }
    return s;
}

QuadStreams QuadStreams::slice(std::size_t begin, std::size_t end) const {
    end = std::min(end, size());
    begin = std::min(begin, end);
    auto cut = [&](const std::vector<double>& x) {
        return std::vector<double>(x.begin() + static_cast<std::ptrdiff_t>(begin),
                                   x.begin() + static_cast<std::ptrdiff_t>(end));
    };
    return QuadStreams{cut(hx), cut(hp), cut(vx), cut(vp)};
}

double EqualizerWeights::row_energy(int row) const noexcept {
    double e = 0.0;
    for (const auto& in : taps[static_cast<std::size_t>(row)])
        for (double w : in) e += w * w;
    return e;
}

void EqualizerWeights::normalize_noise_gain() {
    for (int row = 0; row < 2; ++row) {
        const double e = row_energy(row);
        if (!(e > 0.0)) continue;
        const double g = 1.0 / std::sqrt(e);
        for (auto& in : taps[static_cast<std::size_t>(row)])
            for (auto& w : in) w *= g;
    }
}

double lms_mu_max(std::size_t n_taps) noexcept { return 2.0 / (4.0 * static_cast<double>(n_taps)); }

EqualizerWeights lms_train(const QuadStreams& train, std::span<const cplx> targets, const LmsOptions& opt,
                           const EqualizerWeights* initial) {
    const std::size_t n = train.size();
    const std::size_t m = opt.n_taps;
    if (m == 0 || m % 2 == 0) throw ParameterError("dsp", "n_taps must be odd");
    if (targets.size() != n) throw ParameterError("dsp", "training targets and streams differ in length");
    if (n < 10 * m) throw ParameterError("dsp", "training length must be >= 10 * n_taps");
    if (!(opt.mu > 0.0 && opt.mu < lms_mu_max(m)))
        throw ParameterError("dsp", "mu must lie in (0, " + std::to_string(lms_mu_max(m)) + ")");

    const auto in = train.inputs();
    double power = 0.0;
    for (const auto* s : in)
        for (double v : *s) power += v * v;
    power /= 4.0 * static_cast<double>(n);
    if (!(power > 0.0)) throw ProcessingError("dsp", "training failure: zero input power");
    const double mu_eff = opt.mu / power;

    EqualizerWeights w;
    if (initial) {
        if (initial->n_taps != m) throw ParameterError("dsp", "initial weights have a different tap count");
        w = *initial;
    } else {
        w.n_taps = m;
        for (auto& row : w.taps)
            for (auto& t : row) t.assign(m, 0.0);
    }
    w.mu = opt.mu;
    w.training_length = n;

    const std::size_t half = m / 2;
    const std::size_t steps = n - 2 * half;
    std::vector<double> err2(steps);
    for (std::size_t c = half; c < n - half; ++c) {
        double yx = 0.0, yp = 0.0;
        for (std::size_t i = 0; i < 4; ++i) {
            const double* s = in[i]->data() + c + half;  // s[-k] = input(c + half - k)
            const double* wx = w.taps[0][i].data();
            const double* wp = w.taps[1][i].data();
            for (std::size_t k = 0; k < m; ++k) {
                yx += wx[k] * s[-static_cast<std::ptrdiff_t>(k)];
                yp += wp[k] * s[-static_cast<std::ptrdiff_t>(k)];
            }
        }
        const double ex = targets[c].real() - yx;
        const double ep = targets[c].imag() - yp;
        err2[c - half] = 0.5 * (ex * ex + ep * ep);
        const double gx = mu_eff * ex, gp = mu_eff * ep;
        for (std::size_t i = 0; i < 4; ++i) {
            const double* s = in[i]->data() + c + half;
            double* wx = w.taps[0][i].data();
            double* wp = w.taps[1][i].data();
            for (std::size_t k = 0; k < m; ++k) {
                const double sv = s[-static_cast<std::ptrdiff_t>(k)];
                wx[k] += gx * sv;
                wp[k] += gp * sv;
            }
        }
    }

    auto mean_range = [&](std::size_t b, std::size_t e) {
        double acc = 0.0;
        for (std::size_t i = b; i < e; ++i) acc += err2[i];
        return e > b ? acc / static_cast<double>(e - b) : 0.0;
    };
    const std::size_t tenth = std::max<std::size_t>(1, steps / 10);
    const std::size_t twentieth = std::max<std::size_t>(1, steps / 20);
    w.initial_mse = mean_range(0, tenth);
    w.final_mse = mean_range(steps - tenth, steps);
    const double prev = mean_range(steps - 2 * twentieth, steps - twentieth);
    const double last = mean_range(steps - twentieth, steps);
    const bool finite = std::isfinite(w.final_mse) && std::isfinite(last);
    if (!finite || (last > 1.5 * prev && last > w.initial_mse))
        throw ProcessingError("dsp", "training failure: LMS diverged (initial MSE " + std::to_string(w.initial_mse) +
                                         ", last-5% MSE " + std::to_string(last) + ", previous-5% MSE " +
                                         std::to_string(prev) + ")");
    return w;
}

std::pair<std::vector<double>, std::vector<double>> equalize(const EqualizerWeights& w, const QuadStreams& s) {
    const std::size_t n = s.size();
    const std::size_t m = w.n_taps;
    if (m == 0) throw ParameterError("dsp", "untrained equalizer");
    if (n < m) return {};
    const auto in = s.inputs();
    const std::size_t out_n = n - m + 1;
    std::vector<double> x(out_n, 0.0), p(out_n, 0.0);
    for (std::size_t o = 0; o < out_n; ++o) {
        double yx = 0.0, yp = 0.0;
        for (std::size_t i = 0; i < 4; ++i) {
            const double* sv = in[i]->data() + o + m - 1;
            const double* wx = w.taps[0][i].data();
            const double* wp = w.taps[1][i].data();
            for (std::size_t k = 0; k < m; ++k) {
                yx += wx[k] * sv[-static_cast<std::ptrdiff_t>(k)];
                yp += wp[k] * sv[-static_cast<std::ptrdiff_t>(k)];
            }
        }
        x[o] = yx;
        p[o] = yp;
    }
    return {std::move(x), std::move(p)};
}

}  // namespace cvqkd
