#include "cvqkd/filters.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cvqkd {

namespace {
constexpr double pi = std::numbers::pi;

double bessel_i0(double x) {
    double sum = 1.0;
    double term = 1.0;
    const double q = x * x / 4.0;
    for (int k = 1; k < 200; ++k) {
        term *= q / (static_cast<double>(k) * k);
        sum += term;
        if (term < sum * 1e-17) break;
    }
    return sum;
}

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}
}  // namespace

struct Fft::Impl {
    fftw_complex* in{nullptr};
    fftw_complex* out{nullptr};
    fftw_plan plan{nullptr};
};

Fft::Fft(std::size_t n, Direction dir) : n_(n), impl_(std::make_unique<Impl>()) {
    if (n == 0) throw ParameterError("fft", "transform length must be >= 1");
    impl_->in = fftw_alloc_complex(n);
    impl_->out = fftw_alloc_complex(n);
    impl_->plan = fftw_plan_dft_1d(static_cast<int>(n), impl_->in, impl_->out,
                                   dir == Direction::forward ? FFTW_FORWARD : FFTW_BACKWARD,
                                   FFTW_ESTIMATE);
}

Fft::~Fft() {
    if (!impl_) return;
    if (impl_->plan) fftw_destroy_plan(impl_->plan);
    fftw_free(impl_->in);
    fftw_free(impl_->out);
}

Fft::Fft(Fft&&) noexcept = default;
Fft& Fft::operator=(Fft&& other) noexcept {
    if (this != &other) {
        this->~Fft();
        n_ = other.n_;
        impl_ = std::move(other.impl_);
    }
    return *this;
}

void Fft::execute(std::span<const cplx> in, std::span<cplx> out) {
    std::copy(in.begin(), in.end(), reinterpret_cast<cplx*>(impl_->in));
    fftw_execute(impl_->plan);
    std::copy_n(reinterpret_cast<const cplx*>(impl_->out), n_, out.begin());
}

std::vector<cplx> dft(std::span<const cplx> x, std::size_t n) {
    if (n == 0) n = x.size();
    std::vector<cplx> in(n, cplx{0.0});
    std::copy_n(x.begin(), std::min(n, x.size()), in.begin());
    std::vector<cplx> out(n);
    Fft(n, Fft::Direction::forward).execute(in, out);
    return out;
}

std::vector<cplx> dft(std::span<const double> x, std::size_t n) {
    std::vector<cplx> c(x.begin(), x.end());
    return dft(std::span<const cplx>(c), n);
}

double kaiser_beta(double a) noexcept {
    if (a > 50.0) return 0.1102 * (a - 8.7);
    if (a >= 21.0) return 0.5842 * std::pow(a - 21.0, 0.4) + 0.07886 * (a - 21.0);
    return 0.0;
}

std::size_t kaiser_length(double a, double delta) noexcept {
    const double m = (a - 7.95) / (2.285 * 2.0 * pi * delta);
    auto n = static_cast<std::size_t>(std::ceil(m)) + 1;
    if (n % 2 == 0) ++n;
    return n;
}

std::vector<double> kaiser_lowpass(double passband_edge, double stopband_edge, double stop_db) {
    if (!(passband_edge > 0.0) || !(stopband_edge > passband_edge) || stopband_edge >= 0.5)
        throw ParameterError("filter", "infeasible low-pass design: edges " +
                                           std::to_string(passband_edge) + ", " +
                                           std::to_string(stopband_edge));
    const std::size_t n = kaiser_length(stop_db, stopband_edge - passband_edge);
    const double fc = 0.5 * (passband_edge + stopband_edge);
    const double beta = kaiser_beta(stop_db);
    const double i0b = bessel_i0(beta);
    const double mid = 0.5 * static_cast<double>(n - 1);
    std::vector<double> h(n);
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) - mid;
        const double sinc = t == 0.0 ? 2.0 * fc : std::sin(2.0 * pi * fc * t) / (pi * t);
        const double r = t / mid;
        const double w = bessel_i0(beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0b;
        h[k] = sinc * w;
        sum += h[k];
    }
    for (auto& v : h) v /= sum;  // unit DC gain
    return h;
}

std::vector<double> rrc_taps(std::size_t sps, double beta, std::size_t span) {
    if (sps == 0) throw ParameterError("filter", "samples per symbol must be >= 1");
    if (beta < 0.0 || beta > 1.0) throw ParameterError("filter", "roll-off must lie in [0, 1]");
    std::size_t n = span * sps + 1;
    if (n % 2 == 0) ++n;
    const double mid = 0.5 * static_cast<double>(n - 1);
    std::vector<double> h(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double t = (static_cast<double>(k) - mid) / static_cast<double>(sps);
        double v;
        if (t == 0.0) {
            v = 1.0 - beta + 4.0 * beta / pi;
        } else if (beta > 0.0 && std::abs(std::abs(4.0 * beta * t) - 1.0) < 1e-12) {
            v = beta / std::sqrt(2.0) *
                ((1.0 + 2.0 / pi) * std::sin(pi / (4.0 * beta)) +
                 (1.0 - 2.0 / pi) * std::cos(pi / (4.0 * beta)));
        } else {
            v = (std::sin(pi * t * (1.0 - beta)) + 4.0 * beta * t * std::cos(pi * t * (1.0 + beta))) /
                (pi * t * (1.0 - 16.0 * beta * beta * t * t));
        }
        h[k] = v;
    }
    double e = 0.0;
    for (double v : h) e += v * v;
    const double g = std::sqrt(static_cast<double>(sps) / e);
    for (auto& v : h) v *= g;
    return h;
}

std::vector<double> rect_taps(std::size_t sps) {
    if (sps == 0) throw ParameterError("filter", "samples per symbol must be >= 1");
    return std::vector<double>(sps, 1.0);
}

FirFilter::FirFilter(std::vector<double> taps, std::size_t decimation)
    : taps_(std::move(taps)), decimation_(decimation) {
    if (taps_.empty()) throw ParameterError("filter", "FIR needs at least one tap");
    if (decimation_ == 0) throw ParameterError("filter", "decimation must be >= 1");
}

std::vector<cplx> FirFilter::apply(std::span<const cplx> x) const { return apply_impl(x); }
std::vector<cplx> FirFilter::apply(std::span<const double> x) const { return apply_impl(x); }

template <typename T>
std::vector<cplx> FirFilter::apply_impl(std::span<const T> x) const {
    const std::size_t m = taps_.size();
    const std::size_t delay = (m - 1) / 2;
    const std::size_t n_out = (x.size() + decimation_ - 1) / decimation_;
    std::vector<cplx> out(n_out);
    if (x.empty()) return out;

    // Short filters: direct evaluation at the kept output positions only.
    if (m <= 64) {
        for (std::size_t j = 0; j < n_out; ++j) {
            const std::ptrdiff_t center = static_cast<std::ptrdiff_t>(j * decimation_ + delay);
            cplx acc{0.0};
            for (std::size_t k = 0; k < m; ++k) {
                const std::ptrdiff_t idx = center - static_cast<std::ptrdiff_t>(k);
                if (idx >= 0 && idx < static_cast<std::ptrdiff_t>(x.size()))
                    acc += taps_[k] * cplx(x[static_cast<std::size_t>(idx)]);
            }
            out[j] = acc;
        }
        return out;
    }

    // Overlap-save: full convolution y[i] = sum_k h[k] x[i-k]; output j maps
    // to y[j*dec + delay].
    const std::size_t nfft = std::max<std::size_t>(next_pow2(4 * m), 1 << 14);
    const std::size_t step = nfft - (m - 1);
    Fft fwd(nfft, Fft::Direction::forward);
    Fft inv(nfft, Fft::Direction::inverse);
    std::vector<cplx> hbuf(nfft, cplx{0.0});
    std::copy(taps_.begin(), taps_.end(), hbuf.begin());
    std::vector<cplx> hf(nfft);
    fwd.execute(hbuf, hf);
    const double scale = 1.0 / static_cast<double>(nfft);

    std::vector<cplx> buf(nfft), spec(nfft), y(nfft);
    const std::size_t total = x.size() + delay;  // y indices [0, total)
    for (std::size_t start = 0; start < total; start += step) {
        // block input covers x[start - (m-1)] .. x[start + step - 1]
        for (std::size_t i = 0; i < nfft; ++i) {
            const std::ptrdiff_t idx =
                static_cast<std::ptrdiff_t>(start + i) - static_cast<std::ptrdiff_t>(m - 1);
            buf[i] = (idx >= 0 && idx < static_cast<std::ptrdiff_t>(x.size()))
                         ? cplx(x[static_cast<std::size_t>(idx)])
                         : cplx{0.0};
        }
        fwd.execute(buf, spec);
        for (std::size_t i = 0; i < nfft; ++i) spec[i] *= hf[i] * scale;
        inv.execute(spec, y);
        // valid outputs: y_full[start + i] = y[i + m - 1], i in [0, step)
        const std::size_t first = start;
        const std::size_t last = std::min(start + step, total);
        // smallest j with j*dec + delay >= first
        std::size_t j = first <= delay ? 0 : (first - delay + decimation_ - 1) / decimation_;
        for (; j < n_out; ++j) {
            const std::size_t yi = j * decimation_ + delay;
            if (yi >= last) break;
            out[j] = y[yi - start + m - 1];
        }
    }
    return out;
}

template std::vector<cplx> FirFilter::apply_impl<cplx>(std::span<const cplx>) const;
template std::vector<cplx> FirFilter::apply_impl<double>(std::span<const double>) const;

std::vector<cplx> fir_direct(std::span<const cplx> x, std::span<const double> taps) {
    const std::size_t m = taps.size();
    const std::ptrdiff_t delay = static_cast<std::ptrdiff_t>((m - 1) / 2);
    std::vector<cplx> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        cplx acc{0.0};
        for (std::size_t k = 0; k < m; ++k) {
            const std::ptrdiff_t idx = static_cast<std::ptrdiff_t>(i) + delay - static_cast<std::ptrdiff_t>(k);
            if (idx >= 0 && idx < static_cast<std::ptrdiff_t>(x.size())) acc += taps[k] * x[static_cast<std::size_t>(idx)];
        }
        out[i] = acc;
    }
    return out;
}

OnePoleLowpass::OnePoleLowpass(double cutoff_hz, double sample_rate) {
    if (!(cutoff_hz > 0.0) || !(sample_rate > 0.0))
        throw ParameterError("filter", "one-pole cutoff and sample rate must be > 0");
    a_ = std::exp(-2.0 * pi * cutoff_hz / sample_rate);
}

std::vector<double> invert_one_pole(std::span<const double> y, double pole) {
    std::vector<double> x(y.size());
    double prev = 0.0;
    const double g = 1.0 / (1.0 - pole);
    for (std::size_t i = 0; i < y.size(); ++i) {
        x[i] = (y[i] - pole * prev) * g;
        prev = y[i];
    }
    return x;
}

}  // namespace cvqkd
