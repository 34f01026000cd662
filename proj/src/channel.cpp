#include "cvqkd/channel.hpp"

#include <cmath>
#include <numbers>

namespace cvqkd {

namespace {
constexpr double two_pi = 2.0 * std::numbers::pi;
constexpr int crosstalk_order = 4;
}  // namespace

double transmittance(double length_km, double atten_db_per_km) {
    if (!(length_km >= 0.0)) throw ParameterError("channel", "length must be >= 0");
    if (!(atten_db_per_km >= 0.0)) throw ParameterError("channel", "attenuation must be >= 0");
    return std::pow(10.0, -atten_db_per_km * length_km / 10.0);
}

double ChannelParams::transmittance() const { return cvqkd::transmittance(length_km, atten_db_per_km); }

void ChannelParams::validate() const {
    (void)transmittance();
    require_variance(xi_inject, "xi_inject", "channel");
    if (xi_shape && (xi_shape->taps.empty() || xi_shape->samples_per_symbol == 0 ||
                     xi_shape->centre >= xi_shape->taps.size()))
        throw ParameterError("channel", "xi_shape needs taps, samples_per_symbol >= 1 and centre inside the taps");
    if (!(combined_linewidth >= 0.0)) throw ParameterError("channel", "linewidth must be >= 0");
    if (!(pol_drift_rate >= 0.0)) throw ParameterError("channel", "pol_drift_rate must be >= 0");
    if (!(jones_block_duration > 0.0))
        throw ParameterError("channel", "jones_block_duration must be > 0");
    if (!(reference_rate > 0.0)) throw ParameterError("channel", "reference_rate must be > 0");
    if (crosstalk_level_db && !(crosstalk_bandwidth > 0.0))
        throw ParameterError("channel", "crosstalk_bandwidth must be > 0");
}

double Jones::unitarity_error() const noexcept {
    const auto m = matrix();
    double err = 0.0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            cplx s = m[2 * i] * std::conj(m[2 * j]) + m[2 * i + 1] * std::conj(m[2 * j + 1]);
            if (i == j) s -= 1.0;
            err = std::max(err, std::abs(s));
        }
    return err;
}

Jones Jones::operator*(const Jones& r) const noexcept {
    // [[a,-b*],[b,a*]] * [[c,-d*],[d,c*]]
    return Jones{a * r.a - std::conj(b) * r.b, b * r.a + std::conj(a) * r.b};
}

void Jones::renormalize() noexcept {
    const double n = std::sqrt(std::norm(a) + std::norm(b));
    a /= n;
    b /= n;
}

Jones Jones::rotation(double theta, double nx, double ny, double nz) noexcept {
    // cos(t/2) I - i sin(t/2) (nx X + ny Y + nz Z)
    const double c = std::cos(0.5 * theta);
    const double s = std::sin(0.5 * theta);
    // first column: (c - i s nz, -i s nx + s ny)
    Jones j{cplx(c, -s * nz), cplx(s * ny, -s * nx)};
    j.renormalize();
    return j;
}

FiberChannel::FiberChannel(const ChannelParams& p, double sample_rate, std::uint64_t seed,
                           double reference_power)
    : p_(p),
      fs_(sample_rate),
      phase_rng_(SeedPolicy::item(seed, 11)),
      xi_rng_(SeedPolicy::item(seed, 12)),
      xt_rng_(SeedPolicy::item(seed, 13)),
      jones_rng_(SeedPolicy::item(seed, 14)) {
    p_.validate();
    if (!(fs_ > 0.0)) throw ParameterError("channel", "sample rate must be > 0");
    const double t = p_.transmittance();
    sqrt_t_ = std::sqrt(t);
    phase_sigma_ = std::sqrt(two_pi * p_.combined_linewidth / fs_);
    if (p_.xi_shape) {
        // Shaped noise rides on the signal through the common factor, which
        // already carries sqrt(T).
        xi_sigma_ = std::sqrt(p_.xi_inject.value);
    } else {
        // Per-component sample variance T*xi*L gives T*xi per quadrature
        // after a matched filter at the reference rate (L samples per symbol).
        xi_sigma_ = std::sqrt(t * p_.xi_inject.value * fs_ / p_.reference_rate);
    }
    jones_block_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(p_.jones_block_duration * fs_)));
    jones_sigma_ = p_.pol_drift_rate * static_cast<double>(jones_block_) / fs_;

    if (p_.crosstalk_level_db) {
        // Cascade of identical one-pole sections; the -3 dB point of the
        // cascade sits at half the pedestal bandwidth.
        const double shrink = std::sqrt(std::pow(2.0, 1.0 / crosstalk_order) - 1.0);
        const double fc = 0.5 * p_.crosstalk_bandwidth / shrink;
        xt_pole_ = std::exp(-two_pi * fc / fs_);
        // output variance of the cascade for unit-variance white input
        std::array<double, crosstalk_order> st{};
        double gain = 0.0;
        for (int k = 0; k < 1 << 22; ++k) {
            double x = k == 0 ? 1.0 : 0.0;
            for (auto& s : st) x = s = xt_pole_ * s + (1.0 - xt_pole_) * x;
            gain += x * x;
            if (k > 64 && x * x < 1e-18 * gain) break;
        }
        const double power = std::pow(10.0, *p_.crosstalk_level_db / 10.0) * reference_power;
        xt_scale_ = std::sqrt(power / (2.0 * gain));
    }

    if (p_.initial_pol_angle != 0.0) {
        const double z = 2.0 * jones_rng_.uniform() - 1.0;
        const double phi = two_pi * jones_rng_.uniform();
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        jones_ = Jones::rotation(p_.initial_pol_angle, r * std::cos(phi), r * std::sin(phi), z);
    }
    phase_ = p_.initial_phase;
}

void FiberChannel::step_jones() {
    if (jones_sigma_ > 0.0) {
        const double theta = jones_sigma_ * jones_rng_();
        double nx = jones_rng_(), ny = jones_rng_(), nz = jones_rng_();
        const double norm = std::sqrt(nx * nx + ny * ny + nz * nz);
        if (norm > 0.0) {
            jones_ = Jones::rotation(theta, nx / norm, ny / norm, nz / norm) * jones_;
            jones_.renormalize();
        }
    }
    if (record_) trajectory_.push_back(jones_);
}

cplx FiberChannel::shaped_xi(std::size_t n) {
    const auto& sh = *p_.xi_shape;
    const std::size_t sps = sh.samples_per_symbol, m = sh.taps.size();
    // symbols k with 0 <= n - k*sps + centre < m
    const std::size_t top = n + sh.centre;
    const std::size_t k_hi = top / sps;
    const std::size_t k_lo = top + 1 > m ? (top + 1 - m + sps - 1) / sps : 0;
    if (k_lo > xi_first_) {
        const std::size_t drop = std::min(k_lo - xi_first_, xi_symbols_.size());
        xi_symbols_.erase(xi_symbols_.begin(), xi_symbols_.begin() + static_cast<std::ptrdiff_t>(drop));
        xi_first_ += drop;
        if (xi_symbols_.empty()) xi_first_ = k_lo;
    }
    while (xi_first_ + xi_symbols_.size() <= k_hi)
        xi_symbols_.push_back({xi_sigma_ * xi_rng_(), xi_sigma_ * xi_rng_()});
    cplx acc{0.0};
    for (std::size_t k = std::max(k_lo, xi_first_); k <= k_hi; ++k)
        acc += sh.taps[top - k * sps] * xi_symbols_[k - xi_first_];
    if (sh.center_frequency == 0.0) return acc;
    double c = sh.center_frequency / fs_ * static_cast<double>(n);
    c -= std::floor(c);
    return acc * std::polar(1.0, two_pi * c);
}

void FiberChannel::process(std::span<cplx> h, std::span<cplx> v) {
    if (h.size() != v.size()) throw ParameterError("channel", "branch lengths differ");
    const double f0 = p_.freq_offset / fs_;
    const double drift = 0.5 * p_.freq_drift / (fs_ * fs_);
    const bool crosstalk = xt_scale_ > 0.0;

    for (std::size_t i = 0; i < h.size(); ++i, ++n_) {
        if (n_ % jones_block_ == 0) step_jones();
        const double nn = static_cast<double>(n_);
        double cycles = f0 * nn + drift * nn * nn;
        cycles -= std::floor(cycles);
        const cplx common = sqrt_t_ * std::polar(1.0, phase_ - two_pi * cycles);

        cplx hq = h[i];
        if (crosstalk) {
            cplx x{xt_scale_ * xt_rng_(), xt_scale_ * xt_rng_()};
            for (auto& s : xt_state_) x = s = xt_pole_ * s + (1.0 - xt_pole_) * x;
            if (p_.crosstalk_center != 0.0) {
                double c = p_.crosstalk_center / fs_ * nn;
                c -= std::floor(c);
                x *= std::polar(1.0, two_pi * c);
            }
            hq += x;
        }
        const bool shaped = p_.xi_shape.has_value();
        if (shaped && xi_sigma_ > 0.0) hq += shaped_xi(n_);
        hq *= common;
        if (!shaped && xi_sigma_ > 0.0) hq += cplx{xi_sigma_ * xi_rng_(), xi_sigma_ * xi_rng_()};
        const cplx vq = v[i] * common;

        // Excess noise is added before the rotation so it follows the quantum
        // mode into whichever output polarization the fiber maps it to.
        h[i] = jones_.a * hq - std::conj(jones_.b) * vq;
        v[i] = jones_.b * hq + std::conj(jones_.a) * vq;

        if (phase_sigma_ > 0.0) phase_ += phase_sigma_ * phase_rng_();
    }
}

DualPolWaveform apply_channel(DualPolWaveform wave, const ChannelParams& p, std::uint64_t seed) {
    wave.validate("channel");
    FiberChannel ch(p, wave.sample_rate(), seed, mean_power(wave.h.samples));
    ch.process(wave.h.samples, wave.v.samples);
    return wave;
}

}  // namespace cvqkd
