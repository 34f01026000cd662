#include "cvqkd/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace cvqkd {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ParameterError("config", path + ": " + what);
}

/// Reads keys of one JSON object, remembering which were consumed so the
/// leftovers can be reported.
class Section {
   public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail(path_, "expected an object");
    }
    ~Section() = default;

    template <typename T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) return;
        try {
            if constexpr (std::is_same_v<T, bool>) {
                if (!it->is_boolean()) fail(where(key), "expected a boolean");
            } else if constexpr (std::is_arithmetic_v<T>) {
                if (!it->is_number()) fail(where(key), "expected a number");
                if constexpr (std::is_unsigned_v<T>) {
                    if (!it->is_number_unsigned()) fail(where(key), "expected a non-negative integer");
                } else if constexpr (std::is_integral_v<T>) {
                    if (!it->is_number_integer()) fail(where(key), "expected an integer");
                }
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!it->is_string()) fail(where(key), "expected a string");
            }
            out = it->get<T>();
        } catch (const json::exception& e) {
            fail(where(key), e.what());
        }
    }

    void get(const char* key, Snu& out) {
        double v = out.value;
        get(key, v);
        out = Snu{v};
    }

    const json* child(const char* key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) fail(where(it.key()), "unknown key");
    }

   private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

void read_link(const json& j, LinkConfig& c) {
    Section s(j, "link");
    s.get("v_a", c.v_a);
    s.get("training_length", c.training_length);
    s.get("payload_length", c.payload_length);
    s.get("guard_symbols", c.guard_symbols);
    s.get("pilot_ratio_db", c.pilot_ratio_db);
    s.get("retrain_interval", c.retrain_interval);
    s.get("fo_search_window", c.fo_search_window);
    s.get("pilot_lag_search", c.pilot_lag_search);
    s.get("calibration_symbols", c.calibration_symbols);
    s.get("apply_snu_calibration", c.apply_snu_calibration);
    s.get("keep_raw", c.keep_raw);
    s.get("chunk_samples", c.chunk_samples);
    s.finish();
}

void read_tx(const json& j, TxParams& t) {
    Section s(j, "tx");
    s.get("symbol_rate", t.symbol_rate);
    s.get("dac_rate", t.dac_rate);
    s.get("signal_shift", t.signal_shift);
    s.get("pilot_offset", t.pilot_offset);
    std::string pulse = t.pulse.kind == PulseKind::rectangular ? "rect" : "rrc";
    s.get("pulse", pulse);
    if (pulse == "rrc")
        t.pulse.kind = PulseKind::root_raised_cosine;
    else if (pulse == "rect")
        t.pulse.kind = PulseKind::rectangular;
    else
        fail("tx.pulse", "expected \"rrc\" or \"rect\"");
    s.get("rolloff", t.pulse.rolloff);
    s.get("span_symbols", t.pulse.span_symbols);
    s.finish();
}

void read_channel(const json& j, ChannelParams& c) {
    Section s(j, "channel");
    s.get("length_km", c.length_km);
    s.get("atten_db_per_km", c.atten_db_per_km);
    s.get("combined_linewidth", c.combined_linewidth);
    s.get("freq_offset", c.freq_offset);
    s.get("freq_drift", c.freq_drift);
    s.get("pol_drift_rate", c.pol_drift_rate);
    s.get("jones_block_duration", c.jones_block_duration);
    s.get("initial_pol_angle", c.initial_pol_angle);
    s.get("initial_phase", c.initial_phase);
    s.get("xi_inject", c.xi_inject);
    if (const json* x = s.child("crosstalk_level_db")) {
        if (x->is_null())
            c.crosstalk_level_db.reset();
        else if (x->is_number())
            c.crosstalk_level_db = x->get<double>();
        else
            fail("channel.crosstalk_level_db", "expected a number or null");
    }
    s.get("crosstalk_bandwidth", c.crosstalk_bandwidth);
    s.finish();
}

void read_detector(const json& j, DetectorParams& d) {
    Section s(j, "detector");
    s.get("eta", d.eta);
    s.get("v_el", d.v_el);
    s.get("detector_bw", d.detector_bw);
    s.get("adc_rate", d.adc_rate);
    s.get("lo_offset", d.lo_offset);
    s.finish();
}

void read_demod(const json& j, DemodPlan& p) {
    Section s(j, "demod");
    s.get("quantum_bandwidth", p.quantum_bandwidth);
    s.get("pilot_bandwidth", p.pilot_bandwidth);
    s.get("quantum_transition", p.quantum_transition);
    s.get("pilot_transition", p.pilot_transition);
    s.get("stop_db", p.stop_db);
    s.get("samples_per_symbol", p.samples_per_symbol);
    s.finish();
}

void read_equalizer(const json& j, LmsOptions& o) {
    Section s(j, "equalizer");
    s.get("n_taps", o.n_taps);
    s.get("mu", o.mu);
    s.finish();
}

void read_security(const json& j, SecurityParams& p) {
    Section s(j, "security");
    s.get("beta", p.beta);
    s.get("R_s", p.R_s);
    std::string det = p.detection == Detection::heterodyne ? "heterodyne" : "homodyne";
    s.get("detection", det);
    if (det == "heterodyne")
        p.detection = Detection::heterodyne;
    else if (det == "homodyne")
        p.detection = Detection::homodyne;
    else
        fail("security.detection", "expected \"heterodyne\" or \"homodyne\"");
    s.finish();
}

void read_points(const json& j, std::vector<SkrPoint>& pts) {
    if (!j.is_array()) fail("skr_points", "expected an array");
    pts.clear();
    for (std::size_t i = 0; i < j.size(); ++i) {
        Section s(j[i], "skr_points[" + std::to_string(i) + "]");
        SkrPoint p;
        s.get("distance_km", p.distance_km);
        s.get("xi", p.xi);
        s.finish();
        pts.push_back(p);
    }
}

void read_sweep(const json& j, SweepRange& r) {
    Section s(j, "sweep");
    s.get("start_km", r.start_km);
    s.get("stop_km", r.stop_km);
    s.get("step_km", r.step_km);
    s.get("xi", r.xi);
    s.finish();
    if (!(r.step_km > 0.0) || r.stop_km < r.start_km) fail("sweep", "need step_km > 0 and stop_km >= start_km");
}

}  // namespace

RunConfig default_config() {
    RunConfig c;
    c.link.finalize();
    return c;
}

LinkConfig RunConfig::effective_link() const {
    LinkConfig l = link;
    l.finalize();
    return fast ? l.scaled(0.01) : l;
}

SecurityParams RunConfig::effective_security() const {
    SecurityParams p = security;
    p.V_A = link.v_a.value;
    p.eta = link.detector.eta;
    p.v_el = link.detector.v_el.value;
    return p;
}

RunConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParameterError("config", std::string("malformed JSON: ") + e.what());
    }
    RunConfig c = default_config();
    Section s(j, "");
    s.get("seed", c.seed);
    s.get("fast", c.fast);
    s.get("blocks", c.blocks);
    s.get("out_dir", c.out_dir);
    s.get("symbol_rows", c.symbol_rows);
    s.get("svg", c.svg);
    if (const json* x = s.child("link")) read_link(*x, c.link);
    if (const json* x = s.child("tx")) read_tx(*x, c.link.tx);
    if (const json* x = s.child("channel")) read_channel(*x, c.link.channel);
    if (const json* x = s.child("detector")) read_detector(*x, c.link.detector);
    if (const json* x = s.child("demod")) read_demod(*x, c.link.demod);
    if (const json* x = s.child("equalizer")) read_equalizer(*x, c.link.lms);
    if (const json* x = s.child("security")) read_security(*x, c.security);
    if (const json* x = s.child("skr_points")) read_points(*x, c.skr_points);
    if (const json* x = s.child("sweep")) read_sweep(*x, c.sweep);
    s.finish();
    c.link.finalize();
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParameterError("config", "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string dump_config(const RunConfig& c) {
    const auto& l = c.link;
    json j;
    j["seed"] = c.seed;
    j["fast"] = c.fast;
    j["blocks"] = c.blocks;
    j["out_dir"] = c.out_dir;
    j["symbol_rows"] = c.symbol_rows;
    j["svg"] = c.svg;
    j["link"] = {{"v_a", l.v_a.value},
                 {"training_length", l.training_length},
                 {"payload_length", l.payload_length},
                 {"guard_symbols", l.guard_symbols},
                 {"pilot_ratio_db", l.pilot_ratio_db},
                 {"retrain_interval", l.retrain_interval},
                 {"fo_search_window", l.fo_search_window},
                 {"pilot_lag_search", l.pilot_lag_search},
                 {"calibration_symbols", l.calibration_symbols},
                 {"apply_snu_calibration", l.apply_snu_calibration},
                 {"keep_raw", l.keep_raw},
                 {"chunk_samples", l.chunk_samples}};
    j["tx"] = {{"symbol_rate", l.tx.symbol_rate},
               {"dac_rate", l.tx.dac_rate},
               {"signal_shift", l.tx.signal_shift},
               {"pilot_offset", l.tx.pilot_offset},
               {"pulse", l.tx.pulse.kind == PulseKind::rectangular ? "rect" : "rrc"},
               {"rolloff", l.tx.pulse.rolloff},
               {"span_symbols", l.tx.pulse.span_symbols}};
    j["channel"] = {{"length_km", l.channel.length_km},
                    {"atten_db_per_km", l.channel.atten_db_per_km},
                    {"combined_linewidth", l.channel.combined_linewidth},
                    {"freq_offset", l.channel.freq_offset},
                    {"freq_drift", l.channel.freq_drift},
                    {"pol_drift_rate", l.channel.pol_drift_rate},
                    {"jones_block_duration", l.channel.jones_block_duration},
                    {"initial_pol_angle", l.channel.initial_pol_angle},
                    {"initial_phase", l.channel.initial_phase},
                    {"xi_inject", l.channel.xi_inject.value},
                    {"crosstalk_level_db", l.channel.crosstalk_level_db ? json(*l.channel.crosstalk_level_db)
                                                                        : json(nullptr)},
                    {"crosstalk_bandwidth", l.channel.crosstalk_bandwidth}};
    j["detector"] = {{"eta", l.detector.eta},
                     {"v_el", l.detector.v_el.value},
                     {"detector_bw", l.detector.detector_bw},
                     {"adc_rate", l.detector.adc_rate},
                     {"lo_offset", l.detector.lo_offset}};
    j["demod"] = {{"quantum_bandwidth", l.demod.quantum_bandwidth},
                  {"pilot_bandwidth", l.demod.pilot_bandwidth},
                  {"quantum_transition", l.demod.quantum_transition},
                  {"pilot_transition", l.demod.pilot_transition},
                  {"stop_db", l.demod.stop_db},
                  {"samples_per_symbol", l.demod.samples_per_symbol}};
    j["equalizer"] = {{"n_taps", l.lms.n_taps}, {"mu", l.lms.mu}};
    j["security"] = {{"beta", c.security.beta},
                     {"R_s", c.security.R_s},
                     {"detection", c.security.detection == Detection::heterodyne ? "heterodyne" : "homodyne"}};
    j["skr_points"] = json::array();
    for (const auto& p : c.skr_points) j["skr_points"].push_back({{"distance_km", p.distance_km}, {"xi", p.xi}});
    j["sweep"] = {{"start_km", c.sweep.start_km},
                  {"stop_km", c.sweep.stop_km},
                  {"step_km", c.sweep.step_km},
                  {"xi", c.sweep.xi}};
    return j.dump(2) + "\n";
}

}  // namespace cvqkd
