#pragma once

#include <array>

#include "cvqkd/core.hpp"

namespace cvqkd {

enum class Detection { homodyne, heterodyne };

/// Inputs of the asymptotic collective-attack key rate with a trusted,
/// calibrated detector. V_A and xi are per-quadrature SNU; xi is referred to
/// the channel input.
struct SecurityParams {
    double V_A{3.9};
    double T{1.0};
    double xi{0.0};
    double eta{0.56};
    double v_el{0.16};
    double beta{0.95};
    double R_s{1e9};
    Detection detection{Detection::heterodyne};

    void validate() const;
};

struct KeyRateReport {
    double I_AB{0.0};
    double chi_EB{0.0};
    double skr_per_symbol{0.0};  // beta*I_AB - chi_EB, signed
    double skr_bps{0.0};
    std::array<double, 4> lambda{};  // lambda_1,2 of AB; lambda_3,4 of the conditional B-side state
};

/// Entropy of a thermal mode with mean photon number x, in bits.
double g_func(double x);

struct HolevoResult {
    double chi_EB{0.0};
    std::array<double, 4> lambda{};
};

HolevoResult holevo_bound(const SecurityParams& p);
double mutual_information(const SecurityParams& p);
KeyRateReport skr(const SecurityParams& p);

/// Excess noise in [0, 1] at which the key rate crosses zero (bisection to
/// |skr| < 1e-6 bits/symbol). p.xi is ignored.
double null_threshold(SecurityParams p);

/// Quantities shared with test oracles.
struct NoiseTerms {
    double V, chi_line, chi_det, chi_tot;
};
NoiseTerms noise_terms(const SecurityParams& p);

}  // namespace cvqkd
