#include <random>

#include "doctest.h"
#include "cvqkd/security.hpp"
#include "oracles/symplectic.hpp"

using namespace cvqkd;

namespace {

SecurityParams reference_point(double T, double xi) {
    SecurityParams p;
    p.V_A = 3.9;
    p.T = T;
    p.xi = xi;
    p.eta = 0.56;
    p.v_el = 0.16;
    p.beta = 0.95;
    p.R_s = 1e9;
    return p;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST_CASE("g_func values") {
    CHECK(g_func(0.0) == 0.0);
    CHECK(g_func(1.0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(g_func(-1e-12) == 0.0);
    // 40-digit reference: 1.5*log2(1.5) - 0.5*log2(0.5)
    CHECK(g_func(0.5) == doctest::Approx(1.377443751081734272).epsilon(1e-14));
    CHECK_THROWS_AS(g_func(-1e-6), NumericalDomainError);
}

TEST_CASE("identity channel leaks nothing") {
    SecurityParams p;
    p.V_A = 3.9;
    p.T = 1.0;
    p.xi = 0.0;
    p.eta = 1.0;
    p.v_el = 0.0;
    const auto h = holevo_bound(p);
    CHECK(std::abs(h.chi_EB) < 1e-9);
}

TEST_CASE("mutual information") {
    auto p = reference_point(0.1, 0.039);
    // 40-digit evaluation of log2((V + chi_tot)/(1 + chi_tot)).
    CHECK(mutual_information(p) == doctest::Approx(0.1296778753696827).epsilon(1e-13));
    p.detection = Detection::homodyne;
    const double hom = mutual_information(p);
    const auto n = noise_terms(p);
    CHECK(hom == doctest::Approx(0.5 * std::log2((n.V + n.chi_tot) / (1.0 + n.chi_tot))));

    p = reference_point(0.1, 0.039);
    p.V_A = 0.0;
    CHECK(mutual_information(p) == 0.0);

    double prev = 1e9;
    for (double T = 1.0; T > 1e-4; T *= 0.7) {
        const double i = mutual_information(reference_point(T, 0.04));
        CHECK(i < prev);
        prev = i;
    }
}

TEST_CASE("reference operating points") {
    // Values anchored to the reported rates within the reproduction band.
    const struct {
        double T, xi, mbps;
    } pts[] = {{0.1, 0.039, 10.36}, {std::pow(10.0, -1.5), 0.040, 2.59}, {0.01, 0.040, 0.69}};
    for (const auto& pt : pts) {
        const auto r = skr(reference_point(pt.T, pt.xi));
        CHECK(r.skr_bps / 1e6 == doctest::Approx(pt.mbps).epsilon(0.20));
        CHECK(r.skr_bps == doctest::Approx(1e9 * r.skr_per_symbol));
    }
}

TEST_CASE("negative key rates are reported, not clamped") {
    auto p = reference_point(0.01, 0.2);
    CHECK(skr(p).skr_per_symbol < 0.0);
    p = reference_point(0.1, 0.039);
    p.beta = 0.0;
    CHECK(skr(p).skr_bps < 0.0);
}

TEST_CASE("closed form matches covariance-matrix oracle") {
    std::mt19937_64 rng(7);
    for (Detection d : {Detection::heterodyne, Detection::homodyne}) {
        for (int i = 0; i < 500; ++i) {
            const auto p = oracle::random_params(rng, d);
            const auto h = holevo_bound(p);
            const auto o = oracle::build(p);
            INFO("V_A=" << p.V_A << " T=" << p.T << " xi=" << p.xi << " eta=" << p.eta);
            CHECK(rel(h.lambda[0], o.ab[0]) < 1e-8);
            CHECK(rel(h.lambda[1], o.ab[1]) < 1e-8);
            REQUIRE(o.cond.size() == 3);
            CHECK(rel(h.lambda[2], o.cond[0]) < 1e-8);
            CHECK(rel(h.lambda[3], o.cond[1]) < 1e-8);
            // The detector-noise purification contributes a vacuum-like mode.
            CHECK(std::abs(o.cond[2] - 1.0) < 1e-8);
        }
    }
}

TEST_CASE("symplectic validity and positivity over a grid") {
    for (Detection d : {Detection::heterodyne, Detection::homodyne})
        for (double va : {0.5, 3.9, 20.0})
            for (double T : {1.0, 0.3, 0.1, 0.01, 0.001})
                for (double xi : {0.0, 0.02, 0.1})
                    for (double eta : {0.3, 0.56, 0.9, 1.0}) {
                        SecurityParams p = reference_point(T, xi);
                        p.V_A = va;
                        p.eta = eta;
                        p.detection = d;
                        const auto h = holevo_bound(p);
                        for (double l : h.lambda) CHECK(l >= 1.0 - 1e-9);
                        CHECK(h.chi_EB >= -1e-12);
                    }
}

TEST_CASE("key rate monotonicity") {
    for (double T : {0.3, 0.1, 0.0316, 0.01}) {
        double prev = 1e300;
        for (double xi = 0.0; xi <= 0.1; xi += 0.01) {
            const double r = skr(reference_point(T, xi)).skr_per_symbol;
            CHECK(r < prev);
            prev = r;
        }
    }
    double prev = 1e300;
    for (double km = 0.0; km <= 120.0; km += 5.0) {
        const double r = skr(reference_point(std::pow(10.0, -0.02 * km), 0.04)).skr_per_symbol;
        CHECK(r < prev);
        prev = r;
    }
    prev = -1e300;
    for (double beta = 0.80; beta <= 1.0; beta += 0.02) {
        auto p = reference_point(0.1, 0.04);
        p.beta = beta;
        const double r = skr(p).skr_per_symbol;
        CHECK(r > prev);
        prev = r;
    }
    prev = -1e300;
    for (double eta = 0.3; eta <= 1.0; eta += 0.05) {
        auto p = reference_point(0.1, 0.04);
        p.eta = eta;
        const double r = skr(p).skr_per_symbol;
        CHECK(r > prev);
        prev = r;
    }
}

TEST_CASE("null threshold") {
    SecurityParams ideal;
    ideal.V_A = 3.9;
    ideal.T = 1.0;
    ideal.eta = 1.0;
    ideal.v_el = 0.0;
    ideal.beta = 1.0;
    CHECK(null_threshold(ideal) > 0.0);

    const double t50 = null_threshold(reference_point(0.1, 0.0));
    const double t75 = null_threshold(reference_point(std::pow(10.0, -1.5), 0.0));
    const double t100 = null_threshold(reference_point(0.01, 0.0));
    CHECK(t100 < t75);
    CHECK(t75 < t50);
    CHECK(t50 > 0.039);
    CHECK(t100 > 0.040);

    auto at = [](double T, double xi) { return skr(reference_point(T, xi)).skr_per_symbol; };
    CHECK(at(0.01, t100 - 1e-4) > 0.0);
    CHECK(at(0.01, t100 + 1e-4) < 0.0);
    CHECK(std::abs(at(0.01, t100)) < 1e-6);

    auto p = reference_point(0.01, 0.0);
    p.beta = 0.0;
    CHECK_THROWS_AS(null_threshold(p), ProcessingError);
}

TEST_CASE("parameter validation") {
    auto p = reference_point(0.1, 0.04);
    p.T = 0.0;
    CHECK_THROWS_AS(skr(p), ParameterError);
    p = reference_point(0.1, -0.01);
    CHECK_THROWS_AS(skr(p), ParameterError);
    p = reference_point(0.1, 0.04);
    p.eta = 1.5;
    CHECK_THROWS_AS(skr(p), ParameterError);
}
