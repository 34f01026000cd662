#pragma once

#include <optional>

#include "cvqkd/channel.hpp"
#include "cvqkd/dsp.hpp"
#include "cvqkd/estimation.hpp"
#include "cvqkd/rxsim.hpp"
#include "cvqkd/security.hpp"
#include "cvqkd/txsim.hpp"

namespace cvqkd {

/// Everything needed to run one transmitted block through the simulated link
/// and the recovery chain.
struct LinkConfig {
    Snu v_a{3.9};
    std::size_t training_length{10'000};
    std::size_t payload_length{1'000'000};
    std::size_t guard_symbols{64};  // random symbols before and after the frame
    /// Pilot power over mean quantum power. At 20 dB the pilot phase noise
    /// alone adds about 0.02 SNU of excess noise at 100 km; 30 dB keeps it
    /// near 0.002.
    double pilot_ratio_db{30.0};

    TxParams tx{};
    ChannelParams channel{};
    DetectorParams detector{};
    DemodPlan demod{};
    LmsOptions lms{};
    /// Payload symbols between data-assisted retraining passes; 0 trains once
    /// on the training prefix only.
    std::size_t retrain_interval{0};

    double fo_search_window{100e6};
    std::size_t pilot_lag_search{2};  // lags tried: [-n, n] samples
    /// Vacuum/electronic calibration record length in symbols; 0 skips it.
    std::size_t calibration_symbols{0};
    /// Divide Bob's data by the measured shot-noise scale. Off by default:
    /// the receiver is a trusted, pre-calibrated device.
    bool apply_snu_calibration{false};
    /// Also produce the raw (nominal-frequency, uncompensated) quadratures.
    bool keep_raw{false};
    std::size_t chunk_samples{1 << 16};

    /// Copy the fields shared between stages (rates, pulse, pilot level)
    /// into the tx, detector and demod sections.
    void finalize();
    void validate() const;
    /// All rates and frequencies multiplied by `factor` (time constants
    /// divided), so every frequency ratio is unchanged.
    LinkConfig scaled(double factor) const;
};

/// Symbols as transmitted: lead guard, training, payload, tail guard.
struct LinkFrame {
    SymbolFrame frame;             // training + payload
    SymbolFrame stream;            // with guards
    std::size_t lead{0};
};

LinkFrame make_link_frame(const LinkConfig& cfg, std::uint64_t tx_seed, std::uint64_t frame_id = 0);

/// Streams tx -> channel -> receiver in chunks of cfg.chunk_samples.
IfRecords simulate_if(const LinkConfig& cfg, const LinkFrame& frame, const SeedPolicy& seeds);

struct LinkBlock {
    std::uint64_t block_id{0};
    std::vector<cplx> alice;          // payload symbols
    std::vector<double> bob_x, bob_p; // equalized payload, SNU
    std::vector<double> raw_x, raw_p; // keep_raw only
    double fo_hat{0.0};
    SyncResult sync{};
    std::ptrdiff_t pilot_lag{0};
    EqualizerWeights weights{};
    std::optional<CalibrationResult> calibration;
    NoiseEstimate estimate{};
};

/// The recovery chain on a pair of IF records.
LinkBlock recover(const LinkConfig& cfg, const IfRecords& rec, const LinkFrame& frame, const SeedPolicy& seeds,
                  std::uint64_t block_id = 0);

/// simulate_if followed by recover, with seeds derived for `block_id`.
LinkBlock run_block(const LinkConfig& cfg, std::uint64_t master_seed, std::uint64_t block_id = 0);

/// Security inputs for an estimate: T and xi from the estimate (xi floored at
/// 0, T capped at 1), everything else from `base`.
SecurityParams security_for(const SecurityParams& base, const NoiseEstimate& e);

struct TimeseriesRow {
    std::uint64_t block_id{0};
    double T_hat{0.0};
    double xi_hat{0.0};
    double skr_bps{0.0};
    double running_mean_xi{0.0};
    double running_mean_skr{0.0};
    double null_threshold{0.0};
};

/// Independent blocks with per-block seeds; the threshold uses the nominal
/// channel transmittance.
std::vector<TimeseriesRow> noise_timeseries(const LinkConfig& cfg, const SecurityParams& base,
                                            std::size_t n_blocks, std::uint64_t master_seed);

}  // namespace cvqkd
