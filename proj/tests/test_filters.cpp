#include <random>

#include "doctest.h"
#include "cvqkd/filters.hpp"
#include "oracles/dense.hpp"

using namespace cvqkd;

namespace {
std::vector<cplx> noise(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 r(seed);
    std::normal_distribution<double> g;
    std::vector<cplx> x(n);
    for (auto& v : x) v = {g(r), g(r)};
    return x;
}
}  // namespace

TEST_CASE("FFT against a dense DFT") {
    for (std::size_t n : {1u, 7u, 64u, 243u, 1000u}) {
        const auto x = noise(n, n);
        const auto f = dft(std::span<const cplx>(x));
        const auto ref = oracle::naive_dft(x);
        double err = 0, mag = 0;
        for (std::size_t k = 0; k < n; ++k) {
            err = std::max(err, std::abs(f[k] - ref[k]));
            mag = std::max(mag, std::abs(ref[k]));
        }
        CHECK(err < 1e-10 * std::max(1.0, mag));
    }
    std::vector<double> r = {1.0, 2.0, 3.0};
    const auto f = dft(std::span<const double>(r), 4);
    CHECK(f.size() == 4);
    CHECK(std::abs(f[0] - cplx{6.0}) < 1e-12);
    CHECK(std::abs(f[2] - cplx{2.0}) < 1e-12);
}

TEST_CASE("Kaiser low-pass meets its mask") {
    for (double stop_db : {60.0, 70.0}) {
        const double pass = 0.1, stop = 0.15;
        const auto h = kaiser_lowpass(pass, stop, stop_db);
        CHECK(h.size() % 2 == 1);
        CHECK(oracle::response(h, 0.0) == doctest::Approx(1.0).epsilon(1e-12));
        for (std::size_t i = 0; i < h.size(); ++i) CHECK(h[i] == doctest::Approx(h[h.size() - 1 - i]));
        const double ripple = std::pow(10.0, -stop_db / 20.0);
        double worst_pass = 0.0, worst_stop = 0.0;
        for (double f = 0.0; f <= pass; f += 0.001) worst_pass = std::max(worst_pass, std::abs(oracle::response(h, f) - 1.0));
        for (double f = stop; f <= 0.5; f += 0.0005) worst_stop = std::max(worst_stop, oracle::response(h, f));
        CHECK(worst_pass < 2.0 * ripple);
        CHECK(worst_stop < 2.0 * ripple);
    }
    CHECK_THROWS_AS(kaiser_lowpass(0.2, 0.1), ParameterError);
    CHECK_THROWS_AS(kaiser_lowpass(0.2, 0.6), ParameterError);
}

TEST_CASE("FIR filter agrees with direct convolution") {
    for (std::size_t m : {5u, 63u, 65u, 301u}) {
        std::vector<double> taps(m);
        for (std::size_t i = 0; i < m; ++i) taps[i] = std::cos(0.3 * static_cast<double>(i)) / (1.0 + double(i));
        const auto x = noise(50'000, m);
        const auto ref = fir_direct(x, taps);
        for (std::size_t dec : {1u, 3u}) {
            const auto y = FirFilter(taps, dec).apply(std::span<const cplx>(x));
            REQUIRE(y.size() == (x.size() + dec - 1) / dec);
            double err = 0.0;
            for (std::size_t i = 0; i < y.size(); ++i) err = std::max(err, std::abs(y[i] - ref[i * dec]));
            CHECK(err < 1e-10);
        }
    }
}

TEST_CASE("real and complex FIR inputs agree") {
    const auto taps = kaiser_lowpass(0.05, 0.1);
    std::vector<double> r(1000);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = std::sin(0.01 * double(i * i));
    std::vector<cplx> c(r.begin(), r.end());
    const FirFilter f(taps, 2);
    const auto a = f.apply(std::span<const double>(r));
    const auto b = f.apply(std::span<const cplx>(c));
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-12);
}

TEST_CASE("RRC pulse: energy and zero ISI after matching") {
    for (std::size_t sps : {2u, 4u, 30u}) {
        const auto h = rrc_taps(sps, 0.3, 32);
        CHECK(h.size() % 2 == 1);
        double e = 0.0;
        for (double v : h) e += v * v;
        CHECK(e == doctest::Approx(static_cast<double>(sps)).epsilon(1e-12));
        // Full-raised-cosine samples at symbol spacing.
        const auto mid = static_cast<std::ptrdiff_t>(h.size() / 2);
        for (int k = 1; k <= 8; ++k) {
            double acc = 0.0;
            const std::ptrdiff_t lag = k * static_cast<std::ptrdiff_t>(sps);
            for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(h.size()); ++i) {
                const std::ptrdiff_t j = i + lag;
                if (j < static_cast<std::ptrdiff_t>(h.size())) acc += h[i] * h[j];
            }
            CHECK(std::abs(acc / e) < 5e-3);
        }
        (void)mid;
    }
    const auto r = rect_taps(4);
    CHECK(r.size() == 4);
    for (double v : r) CHECK(v == 1.0);
}

TEST_CASE("one-pole filter and its inverse") {
    OnePoleLowpass lp(1.6e9, 10e9);
    CHECK(lp.pole() == doctest::Approx(std::exp(-2.0 * std::numbers::pi * 0.16)));
    std::vector<double> x(2000), y(2000);
    std::mt19937_64 r(3);
    std::normal_distribution<double> g;
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = g(r);
        y[i] = lp.process(x[i]);
    }
    const auto back = invert_one_pole(y, lp.pole());
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(back[i] == doctest::Approx(x[i]).epsilon(1e-9));
    // Step response settles at unit DC gain.
    lp.reset();
    double v = 0.0;
    for (int i = 0; i < 200; ++i) v = lp.process(1.0);
    CHECK(v == doctest::Approx(1.0));
}
