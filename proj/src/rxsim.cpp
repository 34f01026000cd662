#include "cvqkd/rxsim.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace cvqkd {

namespace {
std::size_t integer_ratio(double num, double den, const char* what) {
    const double r = num / den;
    const double n = std::round(r);
    if (!(n >= 1.0) || std::abs(r - n) > 1e-9 * r)
        throw ParameterError("rxsim", std::string(what) + " must be an integer ratio");
    return static_cast<std::size_t>(n);
}
}  // namespace

void DetectorParams::validate() const {
    if (!(eta > 0.0 && eta <= 1.0)) throw ParameterError("rxsim", "eta must lie in (0, 1]");
    require_variance(v_el, "v_el", "rxsim");
    if (!(adc_rate > 0.0)) throw ParameterError("rxsim", "adc_rate must be > 0");
    if (!(reference_rate > 0.0)) throw ParameterError("rxsim", "reference_rate must be > 0");
    if (!(std::abs(lo_offset) < passband_fraction * adc_rate))
        throw ParameterError("rxsim", "aliasing: pilot IF " + std::to_string(lo_offset) +
                                          " Hz exceeds the ADC passband");
}

double DetectorParams::shot_variance() const noexcept { return 0.5 * adc_rate / reference_rate; }

double DetectorParams::filter_variance_gain() const noexcept {
    if (!(detector_bw > 0.0)) return 1.0;
    const double a = OnePoleLowpass(detector_bw, adc_rate).pole();
    return (1.0 - a) / (1.0 + a);
}

HeterodyneReceiver::HeterodyneReceiver(const DetectorParams& d, double input_rate, std::uint64_t seed)
    : d_(d),
      input_rate_(input_rate),
      decim_(integer_ratio(input_rate, d.adc_rate, "input_rate / adc_rate")),
      pole_h_(d.detector_bw > 0.0 ? d.detector_bw : 1.0, d.adc_rate),
      pole_v_(d.detector_bw > 0.0 ? d.detector_bw : 1.0, d.adc_rate),
      use_pole_(d.detector_bw > 0.0),
      noise_h_(SeedPolicy::item(seed, 21)),
      noise_v_(SeedPolicy::item(seed, 22)) {
    d_.validate();
    if (decim_ > 1) {
        const double pass = DetectorParams::passband_fraction * d.adc_rate / input_rate;
        const double stop = (1.0 - DetectorParams::passband_fraction) * d.adc_rate / input_rate;
        aa_taps_ = kaiser_lowpass(pass, std::min(stop, 0.499), 70.0);
    } else {
        aa_taps_ = {1.0};
    }
    delay_ = (aa_taps_.size() - 1) / 2;
    gain_ = std::sqrt(0.5 * d.eta);
    noise_sigma_ = std::sqrt((1.0 + d.v_el.value) * d.shot_variance());
}

void HeterodyneReceiver::process(std::span<const cplx> h, std::span<const cplx> v, IfRecords& out) {
    if (h.size() != v.size()) throw ParameterError("rxsim", "branch lengths differ");
    hist_h_.insert(hist_h_.end(), h.begin(), h.end());
    hist_v_.insert(hist_v_.end(), v.begin(), v.end());
    total_in_ += h.size();
    // output j needs inputs up to j*decim + delay
    std::size_t ready = 0;
    while ((next_out_ + ready) * decim_ + delay_ < total_in_) ++ready;
    emit(out, ready);
}

void HeterodyneReceiver::finish(IfRecords& out) {
    const std::size_t n_out = (total_in_ + decim_ - 1) / decim_;
    const std::size_t pad = delay_ + decim_;
    hist_h_.insert(hist_h_.end(), pad, cplx{0.0});
    hist_v_.insert(hist_v_.end(), pad, cplx{0.0});
    emit(out, n_out - next_out_);
}

void HeterodyneReceiver::emit(IfRecords& out, std::size_t count) {
    out.h.sample_rate = out.v.sample_rate = d_.adc_rate;
    const std::size_t m = aa_taps_.size();
    for (std::size_t c = 0; c < count; ++c, ++next_out_) {
        const std::ptrdiff_t centre = static_cast<std::ptrdiff_t>(next_out_ * decim_ + delay_);
        cplx zh{0.0}, zv{0.0};
        for (std::size_t k = 0; k < m; ++k) {
            const std::ptrdiff_t idx = centre - static_cast<std::ptrdiff_t>(k) -
                                       static_cast<std::ptrdiff_t>(consumed_);
            if (idx < 0) continue;
            zh += aa_taps_[k] * hist_h_[static_cast<std::size_t>(idx)];
            zv += aa_taps_[k] * hist_v_[static_cast<std::size_t>(idx)];
        }
        double rh = gain_ * zh.real() + noise_sigma_ * noise_h_();
        double rv = gain_ * zv.real() + noise_sigma_ * noise_v_();
        if (use_pole_) {
            rh = pole_h_.process(rh);
            rv = pole_v_.process(rv);
        }
        out.h.samples.push_back(rh);
        out.v.samples.push_back(rv);
    }
    // drop history no longer needed by future outputs
    const std::size_t keep_from = next_out_ * decim_ + delay_ >= m - 1
                                      ? next_out_ * decim_ + delay_ - (m - 1)
                                      : 0;
    if (keep_from > consumed_) {
        const std::size_t drop = std::min(keep_from - consumed_, hist_h_.size());
        hist_h_.erase(hist_h_.begin(), hist_h_.begin() + static_cast<std::ptrdiff_t>(drop));
        hist_v_.erase(hist_v_.begin(), hist_v_.begin() + static_cast<std::ptrdiff_t>(drop));
        consumed_ += drop;
    }
}

IfRecords heterodyne_detect(const DualPolWaveform& wave, const DetectorParams& d, std::uint64_t seed) {
    wave.validate("rxsim");
    HeterodyneReceiver rx(d, wave.sample_rate(), seed);
    IfRecords out;
    const std::size_t n_out = (wave.size() + rx.decimation() - 1) / rx.decimation();
    out.h.samples.reserve(n_out);
    out.v.samples.reserve(n_out);
    rx.process(wave.h.samples, wave.v.samples, out);
    rx.finish(out);
    return out;
}

namespace {
RealWaveform noise_record(std::size_t n, const DetectorParams& d, std::uint64_t seed, double variance) {
    d.validate();
    RealWaveform w;
    w.sample_rate = d.adc_rate;
    w.samples.resize(n);
    GaussianSource g(SeedPolicy::item(seed, 23));
    const double sigma = std::sqrt(variance);
    if (d.detector_bw > 0.0) {
        OnePoleLowpass pole(d.detector_bw, d.adc_rate);
        for (auto& s : w.samples) s = pole.process(sigma * g());
    } else {
        for (auto& s : w.samples) s = sigma * g();
    }
    return w;
}
}  // namespace

RealWaveform vacuum_record(std::size_t n, const DetectorParams& d, std::uint64_t seed) {
    return noise_record(n, d, seed, (1.0 + d.v_el.value) * d.shot_variance());
}

RealWaveform electronic_record(std::size_t n, const DetectorParams& d, std::uint64_t seed) {
    return noise_record(n, d, seed, d.v_el.value * d.shot_variance());
}

namespace {
static_assert(std::endian::native == std::endian::little, "IF record I/O assumes a little-endian host");
constexpr char if_magic[8] = {'C', 'V', 'Q', 'K', 'D', 'I', 'F', '1'};
}  // namespace

void write_if_records(const std::filesystem::path& path, std::span<const RealWaveform> channels) {
    if (channels.empty()) throw ParameterError("rxsim", "no channels to write");
    const std::uint64_t len = channels[0].size();
    const double rate = channels[0].sample_rate;
    for (const auto& c : channels)
        if (c.size() != len || c.sample_rate != rate)
            throw ParameterError("rxsim", "IF channels must share length and rate");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ProcessingError("rxsim", "cannot open " + path.string());
    const std::uint64_t nch = channels.size();
    f.write(if_magic, 8);
    f.write(reinterpret_cast<const char*>(&rate), 8);
    f.write(reinterpret_cast<const char*>(&nch), 8);
    f.write(reinterpret_cast<const char*>(&len), 8);
    std::vector<float> row(nch);
    for (std::uint64_t i = 0; i < len; ++i) {
        for (std::uint64_t c = 0; c < nch; ++c) row[c] = static_cast<float>(channels[c].samples[i]);
        f.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(4 * nch));
    }
    if (!f) throw ProcessingError("rxsim", "write failed: " + path.string());
}

std::vector<RealWaveform> read_if_records(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ProcessingError("rxsim", "cannot open " + path.string());
    char magic[8];
    double rate = 0.0;
    std::uint64_t nch = 0, len = 0;
    f.read(magic, 8);
    f.read(reinterpret_cast<char*>(&rate), 8);
    f.read(reinterpret_cast<char*>(&nch), 8);
    f.read(reinterpret_cast<char*>(&len), 8);
    if (!f || std::memcmp(magic, if_magic, 8) != 0)
        throw ProcessingError("rxsim", "not a CVQKDIF1 record: " + path.string());
    if (!(rate > 0.0) || nch == 0 || nch > 64)
        throw ProcessingError("rxsim", "corrupt IF record header: " + path.string());
    std::vector<RealWaveform> out(nch);
    for (auto& c : out) {
        c.sample_rate = rate;
        c.samples.resize(len);
    }
    std::vector<float> row(nch);
    for (std::uint64_t i = 0; i < len; ++i) {
        f.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(4 * nch));
        if (!f) throw ProcessingError("rxsim", "truncated IF record: " + path.string());
        for (std::uint64_t c = 0; c < nch; ++c) out[c].samples[i] = row[c];
    }
    return out;
}

}  // namespace cvqkd
