#include "cvqkd/estimation.hpp"

#include <cmath>

namespace cvqkd {

double demodulated_variance(const RealWaveform& record, const DemodPlan& plan) {
    const auto bb = demodulate_quantum(record, plan, plan.nominal_lo);
    const auto mf = matched_filter(bb, plan);
    const std::size_t sps = plan.samples_per_symbol;
    const std::size_t edge = (plan.mf_span + 8) * sps;
    if (mf.size() < 2 * edge + 100 * sps)
        throw ParameterError("estimation", "calibration record too short");
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t i = edge; i + edge < mf.size(); i += sps) {
        acc += std::norm(mf.samples[i]);
        ++n;
    }
    return acc / (2.0 * static_cast<double>(n));
}

CalibrationResult calibrate_from_variances(double vac, double el) {
    const double scale = vac - el;
    if (!(scale > 0.0))
        throw ProcessingError("estimation", "calibration failure: non-positive shot-noise scale " +
                                                std::to_string(scale));
    CalibrationResult r;
    r.snu_scale = scale;
    r.v_el_hat = Snu{el / scale};
    r.vacuum_variance = vac;
    r.electronic_variance = el;
    return r;
}

CalibrationResult calibrate_snu(const RealWaveform& vacuum, const RealWaveform& electronic, const DemodPlan& plan) {
    return calibrate_from_variances(demodulated_variance(vacuum, plan), demodulated_variance(electronic, plan));
}

NoiseEstimate estimate_channel(std::span<const cplx> alice, std::span<const double> bob_x,
                               std::span<const double> bob_p, double eta, Snu v_el, std::uint64_t block_id) {
    const std::size_t n = alice.size();
    if (bob_x.size() != n || bob_p.size() != n)
        throw ParameterError("estimation", "Alice and Bob blocks differ in length");
    if (n < min_estimation_block)
        throw ParameterError("estimation", "block size " + std::to_string(n) + " below " +
                                               std::to_string(min_estimation_block));
    if (!(eta > 0.0 && eta <= 1.0)) throw ParameterError("estimation", "eta must lie in (0, 1]");
    require_variance(v_el, "v_el", "estimation");

    const double nd = static_cast<double>(n);
    double max = 0, map = 0, mbx = 0, mbp = 0;
    for (std::size_t i = 0; i < n; ++i) {
        max += alice[i].real();
        map += alice[i].imag();
        mbx += bob_x[i];
        mbp += bob_p[i];
    }
    max /= nd;
    map /= nd;
    mbx /= nd;
    mbp /= nd;
    double vx = 0, vp = 0, cx = 0, cp = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ax = alice[i].real() - max, ap = alice[i].imag() - map;
        vx += ax * ax;
        vp += ap * ap;
        cx += ax * (bob_x[i] - mbx);
        cp += ap * (bob_p[i] - mbp);
    }
    if (!(vx > 0.0 && vp > 0.0)) throw ProcessingError("estimation", "estimation failure: Alice block has no variance");
    const double t = (cx + cp) / (vx + vp);
    if (!(t > 0.0))
        throw ProcessingError("estimation", "estimation failure: non-positive transmittance estimate (t = " +
                                                std::to_string(t) + ")");
    double r2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ex = (bob_x[i] - mbx) - t * (alice[i].real() - max);
        const double ep = (bob_p[i] - mbp) - t * (alice[i].imag() - map);
        r2 += ex * ex + ep * ep;
    }
    const double sigma2 = r2 / (2.0 * nd - 2.0);

    NoiseEstimate e;
    e.block_id = block_id;
    e.block_size = n;
    e.t_x = cx / vx;
    e.t_p = cp / vp;
    e.xp_asymmetry = (e.t_x - e.t_p) / t;
    e.residual_variance = sigma2;
    e.T_hat = 2.0 * t * t / eta;
    e.xi_hat = Snu{(sigma2 - 1.0 - v_el.value) / (t * t)};
    // Delta-method standard errors, Gaussian residuals.
    const double se_t = std::sqrt(sigma2 / (vx + vp));
    e.T_stderr = 4.0 * t * se_t / eta;
    const double se_s2 = sigma2 * std::sqrt(1.0 / nd);
    const double d_xi_dt = -2.0 * (sigma2 - 1.0 - v_el.value) / (t * t * t);
    e.xi_stderr = std::sqrt(std::pow(se_s2 / (t * t), 2) + std::pow(d_xi_dt * se_t, 2));
    return e;
}

double pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) throw ParameterError("estimation", "pearson needs equal sizes >= 2");
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double saa = 0, sbb = 0, sab = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
        sab += (a[i] - ma) * (b[i] - mb);
    }
    if (!(saa > 0.0 && sbb > 0.0)) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

}  // namespace cvqkd
