#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cvqkd/link.hpp"
#include "cvqkd/security.hpp"

namespace cvqkd {

struct SkrPoint {
    double distance_km{0.0};
    double xi{0.0};
};

struct SweepRange {
    double start_km{0.0};
    double stop_km{100.0};
    double step_km{5.0};
    double xi{0.04};
};

/// Top-level run configuration. The JSON form mirrors these sections; every
/// key is optional and unknown keys are rejected.
struct RunConfig {
    std::uint64_t seed{1};
    bool fast{false};
    std::size_t blocks{1};
    std::string out_dir{"out"};
    std::size_t symbol_rows{10'000};  // rows written to symbols.csv
    bool svg{true};

    LinkConfig link{};
    /// beta, R_s and detection; V_A, eta and v_el follow the link.
    SecurityParams security{};
    std::vector<SkrPoint> skr_points{{50.0, 0.039}, {75.0, 0.040}, {100.0, 0.040}};
    SweepRange sweep{};

    /// Link configuration with --fast scaling applied and finalized.
    LinkConfig effective_link() const;
    /// Security parameters with the link's V_A and detector values.
    SecurityParams effective_security() const;
};

/// Defaults for every field (hardware-scale rates).
RunConfig default_config();

/// Parse JSON text; throws ParameterError (stage "config") naming the
/// offending key on unknown keys, wrong types or invalid values.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);

/// The configuration as JSON, every field explicit.
std::string dump_config(const RunConfig& cfg);

}  // namespace cvqkd
