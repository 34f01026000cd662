#include "cvqkd/core.hpp"

#include <cmath>
#include <numeric>

namespace cvqkd {

void require_variance(Snu v, const char* name, const char* stage) {
    if (!std::isfinite(v.value) || v.value < 0.0)
        throw ParameterError(stage, std::string(name) + " must be finite and >= 0, got " +
                                        std::to_string(v.value));
}

void DualPolWaveform::validate(const char* stage) const {
    h.validate(stage);
    v.validate(stage);
    if (h.size() != v.size()) throw ParameterError(stage, "polarization branches differ in length");
    if (h.sample_rate != v.sample_rate)
        throw ParameterError(stage, "polarization branches differ in sample rate");
}

double energy(std::span<const cplx> x) noexcept {
    double e = 0.0;
    for (const auto& s : x) e += std::norm(s);
    return e;
}

double energy(std::span<const double> x) noexcept {
    double e = 0.0;
    for (double s : x) e += s * s;
    return e;
}

double mean_power(std::span<const cplx> x) noexcept {
    return x.empty() ? 0.0 : energy(x) / static_cast<double>(x.size());
}

void SymbolFrame::validate(const char* stage) const {
    if (training_length > symbols.size())
        throw ParameterError(stage, "training region longer than frame");
    for (const auto& s : symbols)
        if (!std::isfinite(s.real()) || !std::isfinite(s.imag()))
            throw ParameterError(stage, "frame contains non-finite symbols");
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t SeedPolicy::item(std::uint64_t stage_seed, std::uint64_t index) noexcept {
    return splitmix64(stage_seed ^ splitmix64(index + 0x1000));
}

SeedPolicy SeedPolicy::for_item(std::uint64_t index) const noexcept {
    return derive_seeds(item(master, index));
}

SeedPolicy derive_seeds(std::uint64_t master) noexcept {
    return SeedPolicy{master, splitmix64(master ^ 0x7478000000000000ULL),
                      splitmix64(master ^ 0x6368616e00000000ULL),
                      splitmix64(master ^ 0x7278000000000000ULL)};
}

SymbolFrame gaussian_symbols(std::size_t n, Snu v_a, std::uint64_t seed) {
    require_variance(v_a, "V_A", "core");
    if (n == 0) throw ParameterError("core", "symbol count must be >= 1");
    SymbolFrame frame;
    frame.symbols.resize(n);
    if (v_a.value == 0.0) return frame;
    GaussianSource g(seed);
    const double sd = std::sqrt(v_a.value);
    for (auto& s : frame.symbols) {
        const double x = g();
        const double p = g();
        s = {sd * x, sd * p};
    }
    return frame;
}

std::vector<cplx> training_symbols(std::size_t n, Snu v_a, std::uint64_t seed) {
    require_variance(v_a, "V_A", "core");
    std::vector<cplx> out(n);
    Rng rng(seed);
    const double a = std::sqrt(v_a.value);
    for (std::size_t i = 0; i < n; i += 32) {
        std::uint64_t bits = rng();
        for (std::size_t k = i; k < std::min(n, i + 32); ++k, bits >>= 2)
            out[k] = {(bits & 1U) ? a : -a, (bits & 2U) ? a : -a};
    }
    return out;
}

SymbolFrame make_frame(std::size_t training_length, std::size_t payload_length, Snu v_a,
                       std::uint64_t seed, std::uint64_t frame_id) {
    SymbolFrame frame = gaussian_symbols(payload_length + training_length, v_a,
                                         SeedPolicy::item(seed, 1));
    const auto train = training_symbols(training_length, v_a, SeedPolicy::item(seed, 2));
    std::copy(train.begin(), train.end(), frame.symbols.begin());
    frame.training_length = training_length;
    frame.frame_id = frame_id;
    return frame;
}

}  // namespace cvqkd
