#include "doctest.h"
#include "cvqkd/dsp.hpp"
#include "cvqkd/txsim.hpp"
#include "oracles/scenarios.hpp"

using namespace cvqkd;

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

DemodPlan ideal_plan() {
    DemodPlan p;
    p.detector_bw = 0.0;
    return p;
}

RealWaveform if_tone(std::size_t n, double fs, double f, double amp = 1.0, double phase = 0.0) {
    RealWaveform w;
    w.sample_rate = fs;
    w.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) w.samples[i] = amp * std::cos(two_pi * f / fs * double(i) + phase);
    return w;
}

/// Real IF record of a shaped frame with no channel and no noise:
/// Re{z(t) exp(-i 2 pi fo t)} sampled at the ADC rate.
RealWaveform loopback_if(const SymbolFrame& f, const TxParams& tx, double adc, double fo) {
    const auto z = shape_and_shift(f, tx);
    const auto step = static_cast<std::size_t>(tx.dac_rate / adc);
    RealWaveform r;
    r.sample_rate = adc;
    r.samples.resize(z.size() / step);
    for (std::size_t m = 0; m < r.size(); ++m) {
        double c = fo / adc * double(m);
        c -= std::floor(c);
        r.samples[m] = (z.samples[m * step] * std::polar(1.0, -two_pi * c)).real();
    }
    return r;
}

ComplexWaveform shaped_baseband(std::span<const cplx> symbols, std::size_t sps, std::size_t lead) {
    const auto p = rrc_taps(sps, 0.3, 32);
    std::vector<cplx> up((symbols.size() + 2 * lead) * sps, cplx{0.0});
    for (std::size_t k = 0; k < symbols.size(); ++k) up[(k + lead) * sps] = symbols[k];
    ComplexWaveform w;
    w.sample_rate = 2e9;
    w.samples = fir_direct(up, p);
    return w;
}

}  // namespace

TEST_CASE("estimate_fo: on-bin tone is exact") {
    const std::size_t n = 1 << 14;
    const double fs = 10e9, bin = fs / n;
    const double f = 3277 * bin;
    const double est = estimate_fo(if_tone(n, fs, f), 2e9, 100e6);
    CHECK(std::abs(est - f) < 1e-6 * bin);
}

TEST_CASE("estimate_fo: fractional offsets within bin/10 at 20 dB SNR") {
    const auto r = scenario::fo_trials(100, 20.0, 2024);
    CHECK(r.worst_error_bins < 0.1);
    CHECK(r.worst_vs_dense_bins < 0.1);
}

TEST_CASE("estimate_fo: failure paths") {
    CHECK_THROWS_AS(estimate_fo(if_tone(1000, 10e9, 2e9), 2e9, 1e8), ParameterError);
    // No pilot at all: nothing rises 6 dB above the median spectrum.
    RealWaveform dark;
    dark.sample_rate = 10e9;
    dark.samples.assign(1 << 15, 0.0);
    CHECK_THROWS_AS(estimate_fo(dark, 2e9, 1e8), ProcessingError);
}

TEST_CASE("demodulate: tone at the quantum band centre becomes DC") {
    const auto plan = ideal_plan();
    const double fo = 2e9;
    const std::size_t n = 200'000;
    const auto w = if_tone(n, plan.adc_rate, fo - plan.signal_shift, 1.0, 0.3);
    const auto bb = demodulate_quantum(w, plan, fo);
    REQUIRE(bb.sample_rate == 2e9);
    REQUIRE(bb.size() == n / 5);
    // Spectral inversion: cos(w t + 0.3) lands at exp(-0.3 i).
    for (std::size_t i = 2000; i + 2000 < bb.size(); i += 97)
        CHECK(std::abs(bb.samples[i] - std::polar(1.0, -0.3)) < 2e-3);
}

TEST_CASE("demodulate: linearity") {
    const auto plan = ideal_plan();
    const std::size_t n = 100'000;
    const auto a = if_tone(n, plan.adc_rate, 0.9e9, 1.0);
    const auto b = if_tone(n, plan.adc_rate, 2.001e9, 7.0, 1.0);
    RealWaveform ab = a;
    for (std::size_t i = 0; i < n; ++i) ab.samples[i] += b.samples[i];
    const auto da = demodulate(a, plan, 2e9), db = demodulate(b, plan, 2e9), dab = demodulate(ab, plan, 2e9);
    for (std::size_t i = 0; i < dab.quantum.size(); ++i) {
        CHECK(std::abs(dab.quantum.samples[i] - da.quantum.samples[i] - db.quantum.samples[i]) < 1e-9);
        CHECK(std::abs(dab.pilot.samples[i] - da.pilot.samples[i] - db.pilot.samples[i]) < 1e-9);
    }
}

TEST_CASE("demodulate: loopback recovers the symbols") {
    TxParams tx;
    const auto f = gaussian_symbols(6000, Snu{3.9}, 21);
    const double fo = 2e9;
    const auto r = loopback_if(f, tx, 10e9, fo);
    const auto plan = ideal_plan();
    const auto mf = matched_filter(demodulate_quantum(r, plan, fo), plan);
    const auto got = sample_symbols(mf, 0, 2, f.size());
    double err = 0, ref = 0;
    for (std::size_t k = 100; k + 100 < f.size(); ++k) {
        err += std::norm(got[k] - f.symbols[k]);
        ref += std::norm(f.symbols[k]);
    }
    CHECK(err / ref < 1e-4);
}

TEST_CASE("demodulate: infeasible plans are rejected") {
    DemodPlan p = ideal_plan();
    p.quantum_transition = 0.5e9;  // stop edge beyond output Nyquist
    CHECK_THROWS_AS(p.validate(), ParameterError);
    p = ideal_plan();
    p.adc_rate = 9e9;  // not an integer multiple of 2 GS/s
    CHECK_THROWS_AS(p.validate(), ParameterError);
    p = ideal_plan();
    p.signal_shift = 0.1e9;  // quantum band on top of the pilot
    CHECK_THROWS_AS(p.validate(), ParameterError);
}

TEST_CASE("pilot phase compensation: trivial cases") {
    ComplexWaveform q, p;
    q.sample_rate = p.sample_rate = 2e9;
    for (int i = 0; i < 100; ++i) {
        q.samples.push_back(cplx{1.0 + i, -0.5 * i});
        p.samples.push_back(std::polar(4.0, 0.7));
    }
    const auto out = pilot_phase_compensate(q, p);
    for (int i = 0; i < 100; ++i) CHECK(std::abs(out.samples[i] - q.samples[i] * std::polar(1.0, -0.7)) < 1e-12);
    ComplexWaveform z = q;
    for (auto& v : z.samples) v = 0.0;
    for (const auto& v : pilot_phase_compensate(z, p).samples) CHECK(v == cplx{0.0});
    ComplexWaveform dead = p;
    for (auto& v : dead.samples) v = 0.0;
    CHECK_THROWS_AS(pilot_phase_compensate(q, dead), ProcessingError);
}

TEST_CASE("pilot phase compensation removes common laser phase noise") {
    const auto r = scenario::pilot_compensation(2e3, 2e9, 2'000'000, 30.0, 99);
    INFO("before " << r.before << " after " << r.after);
    CHECK(r.reduction_db >= 20.0);
}

TEST_CASE("symbol_sync: known offset") {
    const auto train = training_symbols(2000, Snu{3.9}, 3);
    for (std::size_t lead : {40u, 57u, 100u}) {
        const auto mf = matched_filter(shaped_baseband(train, 2, lead), ideal_plan());
        const auto s = symbol_sync(mf, train, 2, 400);
        CHECK(s.offset == 2 * lead);
        CHECK(s.peak > 5.0 * s.sidelobe_rms);
    }
}

TEST_CASE("symbol_sync: 0 dB SNR with 1e4 training symbols") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g;
    std::uniform_int_distribution<std::size_t> lead_d(40, 140);
    int ok = 0;
    const int trials = 100;
    for (int t = 0; t < trials; ++t) {
        const auto train = training_symbols(10'000, Snu{1.0}, rng());
        const std::size_t lead = lead_d(rng);
        auto bb = shaped_baseband(train, 2, lead);
        // Per-quadrature symbol variance 1; white noise at matched-filter
        // output variance 1 per quadrature.
        for (auto& v : bb.samples) v += cplx{g(rng), g(rng)};
        const auto mf = matched_filter(bb, ideal_plan());
        try {
            ok += symbol_sync(mf, train, 2, 400).offset == 2 * lead;
        } catch (const ProcessingError&) {
        }
    }
    CHECK(ok >= 99);
}

TEST_CASE("symbol_sync: failure paths") {
    ComplexWaveform mf;
    mf.sample_rate = 2e9;
    mf.samples.assign(5000, cplx{0.0});
    CHECK_THROWS_AS(symbol_sync(mf, std::span<const cplx>{}, 2, 100), ProcessingError);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    for (auto& v : mf.samples) v = {g(rng), g(rng)};
    const auto train = training_symbols(200, Snu{1.0}, 2);
    CHECK_THROWS_AS(symbol_sync(mf, train, 2, 4000), ProcessingError);
}

TEST_CASE("LMS: identity scenario converges to a centre-tap impulse") {
    const std::size_t n = 20'000;
    const auto f = gaussian_symbols(n, Snu{3.9}, 4);
    std::vector<cplx> zeros(n, cplx{0.0});
    const auto s = QuadStreams::from_complex(f.symbols, zeros);
    const auto w = lms_train(s, f.symbols, LmsOptions{});
    CHECK(w.final_mse < 1e-3);
    CHECK(w.initial_mse > w.final_mse);
    const std::size_t c = w.half();
    CHECK(w.taps[0][0][c] == doctest::Approx(1.0).epsilon(0.01));
    CHECK(w.taps[1][1][c] == doctest::Approx(1.0).epsilon(0.01));
    double off = 0.0;
    for (int row = 0; row < 2; ++row)
        for (int in = 0; in < 4; ++in)
            for (std::size_t k = 0; k < w.n_taps; ++k) {
                if (k == c && in == row) continue;
                off = std::max(off, std::abs(w.taps[row][in][k]));
            }
    CHECK(off < 0.01);
}

TEST_CASE("LMS: rotation plus imbalance within 1 dB of least squares") {
    for (auto [theta, phi] : {std::pair{0.4, 0.1}, std::pair{1.1, -0.2}, std::pair{2.0, 0.3}}) {
        const auto r = scenario::lms_vs_least_squares(theta, phi, 17);
        INFO("theta " << theta << " phi " << phi << " lms " << r.lms_mse << " ls " << r.ls_mse);
        CHECK(r.gap_db < 1.0);
        CHECK(r.gap_db > -0.05);
    }
}

TEST_CASE("LMS: residual phase ramp is tracked") {
    const std::size_t n = 100'000;
    const auto f = gaussian_symbols(n, Snu{3.9}, 5);
    std::vector<cplx> h(n), zeros(n, cplx{0.0});
    const double w = two_pi / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) h[k] = f.symbols[k] * std::polar(1.0, w * double(k));
    const auto s = QuadStreams::from_complex(h, zeros);
    const auto eq = lms_train(s, f.symbols, LmsOptions{});
    double raw = 0.0;
    for (std::size_t k = n - n / 10; k < n; ++k) raw += 0.5 * std::norm(f.symbols[k] - h[k]);
    raw /= static_cast<double>(n / 10);
    CHECK(10.0 * std::log10(raw / eq.final_mse) >= 10.0);
}

TEST_CASE("equalize: zero input, linearity, output length") {
    const auto sc = scenario::rotation_imbalance(5000, 0.3, 0.1, 1.0, 0.1, 3);
    const auto w = lms_train(sc.streams, sc.targets, LmsOptions{});
    QuadStreams zero = sc.streams;
    for (auto* v : {&zero.hx, &zero.hp, &zero.vx, &zero.vp}) std::fill(v->begin(), v->end(), 0.0);
    const auto [zx, zp] = equalize(w, zero);
    CHECK(zx.size() == sc.streams.size() - w.n_taps + 1);
    for (double v : zx) CHECK(v == 0.0);
    QuadStreams scaled = sc.streams;
    for (auto* v : {&scaled.hx, &scaled.hp, &scaled.vx, &scaled.vp})
        for (auto& x : *v) x *= -2.5;
    const auto [x1, p1] = equalize(w, sc.streams);
    const auto [x2, p2] = equalize(w, scaled);
    for (std::size_t i = 0; i < x1.size(); ++i) {
        CHECK(x2[i] == doctest::Approx(-2.5 * x1[i]));
        CHECK(p2[i] == doctest::Approx(-2.5 * p1[i]));
    }
}

TEST_CASE("equalizer is invariant to a global polarization rotation when retrained") {
    const auto sc = scenario::rotation_imbalance(60'000, 0.5, 0.0, 0.9, 0.1, 6);
    const auto base = lms_train(sc.streams, sc.targets, LmsOptions{});
    // Rotate (h, v) jointly by a further 0.8 rad.
    std::vector<cplx> h(sc.streams.size()), v(sc.streams.size());
    const double c = std::cos(0.8), s = std::sin(0.8);
    for (std::size_t i = 0; i < h.size(); ++i) {
        const cplx hh{sc.streams.hx[i], sc.streams.hp[i]}, vv{sc.streams.vx[i], sc.streams.vp[i]};
        h[i] = c * hh - s * vv;
        v[i] = s * hh + c * vv;
    }
    const auto rot = lms_train(QuadStreams::from_complex(h, v), sc.targets, LmsOptions{});
    CHECK(rot.final_mse == doctest::Approx(base.final_mse).epsilon(0.05));
}

TEST_CASE("noise-gain normalization keeps unit tap energy per row") {
    const auto sc = scenario::rotation_imbalance(20'000, 0.5, 0.1, 0.5, 1.0, 7);
    auto w = lms_train(sc.streams, sc.targets, LmsOptions{});
    w.normalize_noise_gain();
    CHECK(w.row_energy(0) == doctest::Approx(1.0));
    CHECK(w.row_energy(1) == doctest::Approx(1.0));
}

TEST_CASE("LMS: parameter and divergence errors") {
    const auto sc = scenario::rotation_imbalance(5000, 0.3, 0.1, 1.0, 0.1, 3);
    LmsOptions o;
    o.mu = lms_mu_max(o.n_taps);
    CHECK_THROWS_AS(lms_train(sc.streams, sc.targets, o), ParameterError);
    o.mu = 0.0;
    CHECK_THROWS_AS(lms_train(sc.streams, sc.targets, o), ParameterError);
    o = LmsOptions{};
    o.n_taps = 20;
    CHECK_THROWS_AS(lms_train(sc.streams, sc.targets, o), ParameterError);
    o = LmsOptions{};
    const auto short_s = sc.streams.slice(0, 200);
    CHECK_THROWS_AS(lms_train(short_s, std::vector<cplx>(sc.targets.begin(), sc.targets.begin() + 200), o),
                    ParameterError);
    // Input power jumps 40 dB near the end: the power-normalized step becomes
    // unstable there.
    auto blow = sc.streams;
    for (auto* v : {&blow.hx, &blow.hp, &blow.vx, &blow.vp})
        for (std::size_t i = blow.size() * 85 / 100; i < blow.size(); ++i) (*v)[i] *= 100.0;
    o.mu = 0.9 * lms_mu_max(o.n_taps);
    CHECK_THROWS_AS(lms_train(blow, sc.targets, o), ProcessingError);
}
