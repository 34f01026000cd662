// cvqkd command-line runner: skr | sweep | simulate | noise-timeseries | config
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "cvqkd/config.hpp"
#include "cvqkd/report.hpp"

using namespace cvqkd;
namespace fs = std::filesystem;

namespace {

constexpr int exit_config = 2;
constexpr int exit_runtime = 3;

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    bool fast{false};
};

struct Overrides {
    std::vector<double> distances;
    std::optional<double> xi;
    std::optional<double> beta;
    std::optional<std::size_t> blocks;
    std::string save_if;
    std::string replay;
};

RunConfig resolve(const Common& c, const Overrides& o, bool writes_files = true) {
    RunConfig cfg = c.config_path.empty() ? default_config() : load_config(c.config_path);
    if (c.seed) cfg.seed = *c.seed;
    if (!c.out.empty()) cfg.out_dir = c.out;
    if (c.fast) cfg.fast = true;
    if (o.beta) cfg.security.beta = *o.beta;
    if (o.blocks) cfg.blocks = *o.blocks;
    if (o.xi) cfg.link.channel.xi_inject = Snu{*o.xi};
    if (!o.distances.empty()) cfg.link.channel.length_km = o.distances.front();
    if (writes_files) fs::create_directories(cfg.out_dir);
    return cfg;
}

const std::vector<std::string> skr_header{"distance_km", "T", "xi", "I_AB", "chi_EB", "skr_bps"};

void skr_rows(const RunConfig& cfg, const std::vector<SkrPoint>& pts, const fs::path& csv, const std::string& title) {
    const auto base = cfg.effective_security();
    CsvWriter w(csv, skr_header);
    PlotSeries line{"SKR", {}, {}, false, false};
    for (const auto& p : pts) {
        SecurityParams s = base;
        s.T = transmittance(p.distance_km, cfg.link.channel.atten_db_per_km);
        s.xi = p.xi;
        const auto r = skr(s);
        w.row({p.distance_km, s.T, s.xi, r.I_AB, r.chi_EB, r.skr_bps});
        std::printf("%7.2f km  T=%.6g  xi=%.4f  I_AB=%.6f  chi_EB=%.6f  SKR=%.6g bps (%.4f Mbps)\n", p.distance_km,
                    s.T, s.xi, r.I_AB, r.chi_EB, r.skr_bps, r.skr_bps / 1e6);
        line.x.push_back(p.distance_km);
        line.y.push_back(r.skr_bps);
    }
    if (cfg.svg) {
        auto svg = csv;
        write_svg(svg.replace_extension(".svg"), Plot{title, "distance (km)", "SKR (bps)", true, {line}});
    }
}

int cmd_skr(const Common& c, const Overrides& o) {
    const auto cfg = resolve(c, o);
    std::vector<SkrPoint> pts = cfg.skr_points;
    if (!o.distances.empty()) {
        pts.clear();
        for (double d : o.distances) pts.push_back({d, o.xi.value_or(cfg.sweep.xi)});
    } else if (o.xi) {
        for (auto& p : pts) p.xi = *o.xi;
    }
    skr_rows(cfg, pts, fs::path(cfg.out_dir) / "skr.csv", "Secret key rate");
    return 0;
}

int cmd_sweep(const Common& c, const Overrides& o) {
    const auto cfg = resolve(c, o);
    std::vector<SkrPoint> pts;
    const double xi = o.xi.value_or(cfg.sweep.xi);
    const auto n = static_cast<std::size_t>(std::floor((cfg.sweep.stop_km - cfg.sweep.start_km) / cfg.sweep.step_km + 1e-9));
    for (std::size_t i = 0; i <= n; ++i) pts.push_back({cfg.sweep.start_km + static_cast<double>(i) * cfg.sweep.step_km, xi});
    skr_rows(cfg, pts, fs::path(cfg.out_dir) / "sweep.csv", "SKR versus distance");
    return 0;
}

void write_symbols(const fs::path& path, const std::vector<cplx>& a, const std::vector<double>& x,
                   const std::vector<double>& p, std::size_t rows, const char* bx, const char* bp) {
    CsvWriter w(path, {"index", "alice_x", "alice_p", bx, bp});
    const std::size_t n = std::min(rows, a.size());
    for (std::size_t i = 0; i < n; ++i) w.row({static_cast<double>(i), a[i].real(), a[i].imag(), x[i], p[i]});
}

void scatter_svg(const fs::path& path, const std::string& title, const std::vector<cplx>& a,
                 const std::vector<double>& x, std::size_t rows) {
    PlotSeries s{"X", {}, {}, true, false};
    const std::size_t n = std::min(rows, a.size());
    for (std::size_t i = 0; i < n; ++i) {
        s.x.push_back(a[i].real());
        s.y.push_back(x[i]);
    }
    write_svg(path, Plot{title, "Alice X (SNU)", "Bob X (SNU)", false, {s}});
}

int cmd_simulate(const Common& c, const Overrides& o) {
    const auto cfg = resolve(c, o);
    auto link = cfg.effective_link();
    if (cfg.blocks == 0) throw ParameterError("config", "blocks must be >= 1");
    const fs::path out(cfg.out_dir);
    const auto sec = cfg.effective_security();

    CsvWriter est(out / "estimates.csv", {"block_id", "T_hat", "xi_hat", "skr_bps"});
    for (std::size_t b = 0; b < cfg.blocks; ++b) {
        const auto seeds = derive_seeds(cfg.seed).for_item(b);
        const auto frame = make_link_frame(link, seeds.tx, b);
        IfRecords rec;
        if (!o.replay.empty() && b == 0) {
            auto ch = read_if_records(o.replay);
            if (ch.size() != 2) throw ParameterError("config", "replay file must hold two channels");
            rec.h = std::move(ch[0]);
            rec.v = std::move(ch[1]);
        } else {
            rec = simulate_if(link, frame, seeds);
        }
        if (!o.save_if.empty() && b == 0) {
            const RealWaveform chans[] = {rec.h, rec.v};
            write_if_records(o.save_if, chans);
        }
        const auto blk = recover(link, rec, frame, seeds, b);
        const auto r = skr(security_for(sec, blk.estimate));
        est.row({static_cast<double>(b), blk.estimate.T_hat, blk.estimate.xi_hat.value, r.skr_bps});
        std::printf("block %zu: fo_hat=%.6g Hz sync=%zu T_hat=%.6g (+-%.2g) xi_hat=%.5f (+-%.3g) X/P asym=%.4f "
                    "SKR=%.6g bps\n",
                    b, blk.fo_hat, blk.sync.offset, blk.estimate.T_hat, blk.estimate.T_stderr,
                    blk.estimate.xi_hat.value, blk.estimate.xi_stderr, blk.estimate.xp_asymmetry, r.skr_bps);
        if (blk.calibration)
            std::printf("  calibration: snu_scale=%.6f v_el_hat=%.5f\n", blk.calibration->snu_scale,
                        blk.calibration->v_el_hat.value);
        if (b == 0) {
            write_symbols(out / "symbols.csv", blk.alice, blk.bob_x, blk.bob_p, cfg.symbol_rows, "bob_x", "bob_p");
            if (cfg.svg) scatter_svg(out / "symbols_after_dsp.svg", "After DSP", blk.alice, blk.bob_x, cfg.symbol_rows);
            if (link.keep_raw) {
                write_symbols(out / "symbols_raw.csv", blk.alice, blk.raw_x, blk.raw_p, cfg.symbol_rows, "raw_x",
                              "raw_p");
                if (cfg.svg)
                    scatter_svg(out / "symbols_before_dsp.svg", "Before DSP", blk.alice, blk.raw_x, cfg.symbol_rows);
            }
        }
    }
    return 0;
}

int cmd_timeseries(const Common& c, const Overrides& o) {
    const auto cfg = resolve(c, o);
    const auto link = cfg.effective_link();
    const auto rows = noise_timeseries(link, cfg.effective_security(), cfg.blocks, cfg.seed);
    const fs::path out(cfg.out_dir);
    CsvWriter w(out / "timeseries.csv",
                {"block_id", "xi_hat", "skr_bps", "running_mean_xi", "running_mean_skr", "null_threshold"});
    PlotSeries xi{"xi_hat", {}, {}, true, false}, mean{"running mean", {}, {}, false, true},
        thr{"null threshold", {}, {}, false, false};
    for (const auto& r : rows) {
        w.row({static_cast<double>(r.block_id), r.xi_hat, r.skr_bps, r.running_mean_xi, r.running_mean_skr,
               r.null_threshold});
        std::printf("block %llu: xi_hat=%.5f skr=%.6g bps mean_xi=%.5f mean_skr=%.6g threshold=%.5f\n",
                    static_cast<unsigned long long>(r.block_id), r.xi_hat, r.skr_bps, r.running_mean_xi,
                    r.running_mean_skr, r.null_threshold);
        const auto id = static_cast<double>(r.block_id);
        xi.x.push_back(id);
        xi.y.push_back(r.xi_hat);
        mean.x.push_back(id);
        mean.y.push_back(r.running_mean_xi);
        thr.x.push_back(id);
        thr.y.push_back(r.null_threshold);
    }
    if (cfg.svg && !rows.empty())
        write_svg(out / "timeseries.svg", Plot{"Excess noise per block", "block", "SNU", false, {xi, mean, thr}});
    return 0;
}

int cmd_config(const Common& c, const Overrides& o) {
    const auto cfg = resolve(c, o, false);
    std::cout << dump_config(cfg);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Desk-scale LLO CV-QKD link simulator and key-rate calculator"};
    app.require_subcommand(1);
    Common common;
    Overrides ov;
    auto add_common = [&](CLI::App* s) {
        s->add_option("--config", common.config_path, "JSON configuration file");
        s->add_option("--seed", common.seed, "master seed");
        s->add_option("--out", common.out, "output directory");
        s->add_flag("--fast", common.fast, "scale every rate by 1/100");
    };
    auto* skr_cmd = app.add_subcommand("skr", "key rate at the configured distances");
    add_common(skr_cmd);
    skr_cmd->add_option("--distance", ov.distances, "distance in km (repeatable)");
    skr_cmd->add_option("--xi", ov.xi, "excess noise in SNU");
    skr_cmd->add_option("--beta", ov.beta, "reconciliation efficiency");

    auto* sweep_cmd = app.add_subcommand("sweep", "key rate over a distance range");
    add_common(sweep_cmd);
    sweep_cmd->add_option("--xi", ov.xi, "excess noise in SNU");
    sweep_cmd->add_option("--beta", ov.beta, "reconciliation efficiency");

    auto* sim_cmd = app.add_subcommand("simulate", "end-to-end link simulation");
    add_common(sim_cmd);
    sim_cmd->add_option("--distance", ov.distances, "fiber length in km")->expected(1);
    sim_cmd->add_option("--xi", ov.xi, "injected excess noise in SNU");
    sim_cmd->add_option("--beta", ov.beta, "reconciliation efficiency");
    sim_cmd->add_option("--blocks", ov.blocks, "number of blocks");
    sim_cmd->add_option("--save-if", ov.save_if, "write block 0's IF records to this file");
    sim_cmd->add_option("--replay", ov.replay, "recover block 0 from a saved IF record file");

    auto* ts_cmd = app.add_subcommand("noise-timeseries", "per-block excess noise and key rate");
    add_common(ts_cmd);
    ts_cmd->add_option("--distance", ov.distances, "fiber length in km")->expected(1);
    ts_cmd->add_option("--xi", ov.xi, "injected excess noise in SNU");
    ts_cmd->add_option("--beta", ov.beta, "reconciliation efficiency");
    ts_cmd->add_option("--blocks", ov.blocks, "number of blocks");

    auto* cfg_cmd = app.add_subcommand("config", "print the effective configuration as JSON");
    add_common(cfg_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_config;
    }

    try {
        if (*skr_cmd) return cmd_skr(common, ov);
        if (*sweep_cmd) return cmd_sweep(common, ov);
        if (*sim_cmd) return cmd_simulate(common, ov);
        if (*ts_cmd) return cmd_timeseries(common, ov);
        if (*cfg_cmd) return cmd_config(common, ov);
    } catch (const ParameterError& e) {
        std::cerr << "error [" << e.stage() << "]: " << e.what() << "\n";
        return exit_config;
    } catch (const Error& e) {
        std::cerr << "error [" << e.stage() << "]: " << e.what() << "\n";
        return exit_runtime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_runtime;
    }
    return 0;
}
