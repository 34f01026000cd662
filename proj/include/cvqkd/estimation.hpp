#pragma once

#include "cvqkd/core.hpp"
#include "cvqkd/dsp.hpp"

namespace cvqkd {

struct CalibrationResult {
    double snu_scale{1.0};  // received variance units per SNU
    Snu v_el_hat{0.0};
    double vacuum_variance{0.0};
    double electronic_variance{0.0};
};

/// Per-quadrature variance of a noise-only IF record after the quantum-band
/// demodulation and matched filter of `plan`, sampled once per symbol and
/// pooled over X and P. Filter edges are excluded.
double demodulated_variance(const RealWaveform& record, const DemodPlan& plan);

/// Two-point calibration: scale = Var(vacuum) - Var(electronic),
/// v_el = Var(electronic) / scale.
CalibrationResult calibrate_snu(const RealWaveform& vacuum, const RealWaveform& electronic, const DemodPlan& plan);
CalibrationResult calibrate_from_variances(double vacuum_variance, double electronic_variance);

struct NoiseEstimate {
    std::uint64_t block_id{0};
    std::size_t block_size{0};
    double T_hat{0.0};
    Snu xi_hat{0.0};  // input-referred, per quadrature; may be slightly negative
    double T_stderr{0.0};
    double xi_stderr{0.0};
    double t_x{0.0};  // amplitude gains fitted per quadrature
    double t_p{0.0};
    /// (t_x - t_p) / t, the X/P imbalance left after equalization.
    double xp_asymmetry{0.0};
    double residual_variance{0.0};
};

/// Smallest block accepted by estimate_channel.
inline constexpr std::size_t min_estimation_block = 10'000;

/// Fits Bob = t * Alice + noise on both quadratures jointly:
///   t = (C_xx + C_pp) / (V_x + V_p)         (sample covariances)
///   T_hat = 2 t^2 / eta
///   xi_hat = (sigma_r^2 - 1 - v_el) / t^2   (sigma_r^2: pooled residual variance)
/// which inverts Var(Bob) = (eta T / 2)(V_A + xi) + 1 + v_el. Alice's
/// variance is taken from the block itself.
NoiseEstimate estimate_channel(std::span<const cplx> alice, std::span<const double> bob_x,
                               std::span<const double> bob_p, double eta, Snu v_el, std::uint64_t block_id = 0);

/// Sample Pearson correlation.
double pearson(std::span<const double> a, std::span<const double> b);

}  // namespace cvqkd
