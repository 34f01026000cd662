#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cvqkd {

using cplx = std::complex<double>;

// ---------------------------------------------------------------------------
// Errors. Every failure carries the pipeline stage that raised it so the CLI
// can name it in diagnostics.
// ---------------------------------------------------------------------------
class Error : public std::runtime_error {
   public:
    Error(std::string stage, const std::string& what)
        : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

   private:
    std::string stage_;
};

/// Invalid or inconsistent configuration value.
class ParameterError : public Error {
   public:
    using Error::Error;
};

/// A signal-processing or estimation step could not produce a result
/// (no pilot peak, ambiguous sync, diverging LMS, ...).
class ProcessingError : public Error {
   public:
    using Error::Error;
};

/// Numerical domain violation in the security analysis.
class NumericalDomainError : public Error {
   public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Units
// ---------------------------------------------------------------------------

/// Shot-noise units: vacuum quadrature variance is exactly 1.
struct Snu {
    double value{0.0};

    constexpr Snu() = default;
    constexpr explicit Snu(double v) : value(v) {}
    constexpr auto operator<=>(const Snu&) const = default;
};

void require_variance(Snu v, const char* name, const char* stage);

// ---------------------------------------------------------------------------
// Waveforms
// ---------------------------------------------------------------------------
template <typename T>
struct Waveform {
    std::vector<T> samples;
    double sample_rate{0.0};

    std::size_t size() const noexcept { return samples.size(); }
    double duration() const noexcept { return static_cast<double>(samples.size()) / sample_rate; }
    void validate(const char* stage) const {
        if (!(sample_rate > 0.0)) throw ParameterError(stage, "sample_rate must be > 0");
        if (samples.empty()) throw ParameterError(stage, "waveform must be nonempty");
    }
};

using RealWaveform = Waveform<double>;
using ComplexWaveform = Waveform<cplx>;

/// Two polarization envelopes sharing one sample grid: h carries the quantum
/// signal, v the pilot tone.
struct DualPolWaveform {
    ComplexWaveform h;
    ComplexWaveform v;

    double sample_rate() const noexcept { return h.sample_rate; }
    std::size_t size() const noexcept { return h.size(); }
    void validate(const char* stage) const;
};

double energy(std::span<const cplx> x) noexcept;
double energy(std::span<const double> x) noexcept;
double mean_power(std::span<const cplx> x) noexcept;

// ---------------------------------------------------------------------------
// Symbols
// ---------------------------------------------------------------------------
enum class FrameRole { payload, training };

/// Alice's quadrature symbols in SNU (real = X, imag = P). The first
/// `training_length` symbols form the known training region.
struct SymbolFrame {
    std::vector<cplx> symbols;
    std::size_t training_length{0};
    std::uint64_t frame_id{0};

    std::size_t size() const noexcept { return symbols.size(); }
    FrameRole role(std::size_t i) const noexcept {
        return i < training_length ? FrameRole::training : FrameRole::payload;
    }
    std::span<const cplx> training() const noexcept { return {symbols.data(), training_length}; }
    std::span<const cplx> payload() const noexcept {
        return std::span<const cplx>(symbols).subspan(training_length);
    }
    void validate(const char* stage) const;
};

// ---------------------------------------------------------------------------
// Seeds and random generation
// ---------------------------------------------------------------------------

/// 64-bit finalizer of the SplitMix64 generator.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Per-stage seeds derived from one master seed:
///   tx      = splitmix64(master ^ 0x7478000000000000)   ("tx")
///   channel = splitmix64(master ^ 0x6368616e00000000)   ("chan")
///   rx      = splitmix64(master ^ 0x7278000000000000)   ("rx")
/// The mapping is part of the output contract: changing it changes every
/// simulated record.
struct SeedPolicy {
    std::uint64_t master{0};
    std::uint64_t tx{0};
    std::uint64_t channel{0};
    std::uint64_t rx{0};

    /// Seed for the i-th independent item (block, frame, sweep point) of a
    /// stage seed.
    static std::uint64_t item(std::uint64_t stage_seed, std::uint64_t index) noexcept;
    /// Seed policy for the i-th block of a run.
    SeedPolicy for_item(std::uint64_t index) const noexcept;

    bool operator==(const SeedPolicy&) const = default;
};

SeedPolicy derive_seeds(std::uint64_t master) noexcept;

using Rng = std::mt19937_64;

/// Standard normal stream with a fixed engine; one instance per noise source
/// keeps outputs independent of processing chunk sizes.
class GaussianSource {
   public:
    explicit GaussianSource(std::uint64_t seed) : engine_(seed) {}
    double operator()() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }
    Rng& engine() noexcept { return engine_; }

   private:
    Rng engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// I.i.d. Gaussian symbols with Var(X) = Var(P) = v_a (per-quadrature
/// modulation variance; Alice's state variance is V = v_a + 1).
SymbolFrame gaussian_symbols(std::size_t n, Snu v_a, std::uint64_t seed);

/// QPSK training symbols (+-sqrt(v_a) +- i sqrt(v_a)): constant modulus,
/// same per-quadrature variance as the Gaussian payload.
std::vector<cplx> training_symbols(std::size_t n, Snu v_a, std::uint64_t seed);

/// Frame = training prefix followed by a Gaussian payload.
SymbolFrame make_frame(std::size_t training_length, std::size_t payload_length, Snu v_a,
                       std::uint64_t seed, std::uint64_t frame_id = 0);

}  // namespace cvqkd
