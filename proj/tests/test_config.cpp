#include "doctest.h"
#include "cvqkd/config.hpp"

#include <string>

using namespace cvqkd;

namespace {

std::string error_of(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ParameterError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("defaults") {
    const auto c = default_config();
    CHECK(c.seed == 1u);
    CHECK_FALSE(c.fast);
    CHECK(c.link.v_a.value == 3.9);
    CHECK(c.link.detector.eta == 0.56);
    CHECK(c.security.beta == 0.95);
    REQUIRE(c.skr_points.size() == 3u);
    CHECK(c.skr_points[0].xi == 0.039);
    CHECK_NOTHROW(c.link.validate());
    CHECK(parse_config("{}").link.channel.freq_offset == c.link.channel.freq_offset);
}

TEST_CASE("unknown keys are rejected by full path") {
    CHECK(error_of(R"({"bogus": 1})").find("bogus: unknown key") != std::string::npos);
    CHECK(error_of(R"({"channel": {"lenght_km": 5}})").find("channel.lenght_km: unknown key") != std::string::npos);
    CHECK(error_of(R"({"skr_points": [{"distance_km": 5, "zeta": 1}]})").find("skr_points[0].zeta") !=
          std::string::npos);
}

TEST_CASE("type and value errors name the key") {
    CHECK(error_of(R"({"channel": {"length_km": "far"}})").find("channel.length_km") != std::string::npos);
    CHECK(error_of(R"({"tx": {"pulse": "sinc"}})").find("tx.pulse") != std::string::npos);
    CHECK(error_of(R"({"security": {"detection": "direct"}})").find("security.detection") != std::string::npos);
    CHECK(error_of(R"({"sweep": {"step_km": 0}})").find("sweep") != std::string::npos);
    CHECK(error_of(R"({"seed": -3})").find("seed") != std::string::npos);
    CHECK_FALSE(error_of("{not json").empty());
}

TEST_CASE("values are read into the right fields") {
    const auto c = parse_config(R"({
        "seed": 42, "fast": true, "blocks": 3,
        "link": {"training_length": 5000, "pilot_ratio_db": 25},
        "channel": {"length_km": 75, "xi_inject": 0.04, "crosstalk_level_db": -30},
        "detector": {"eta": 0.6},
        "equalizer": {"n_taps": 5, "mu": 1e-4},
        "security": {"beta": 0.9, "detection": "homodyne"},
        "skr_points": [{"distance_km": 20, "xi": 0.01}]
    })");
    CHECK(c.seed == 42u);
    CHECK(c.fast);
    CHECK(c.blocks == 3u);
    CHECK(c.link.training_length == 5000u);
    CHECK(c.link.channel.length_km == 75.0);
    CHECK(c.link.channel.xi_inject.value == 0.04);
    REQUIRE(c.link.channel.crosstalk_level_db);
    CHECK(*c.link.channel.crosstalk_level_db == -30.0);
    CHECK(c.link.lms.n_taps == 5u);
    CHECK(c.security.detection == Detection::homodyne);
    CHECK(c.effective_security().eta == 0.6);
    CHECK(c.effective_security().beta == 0.9);
    REQUIRE(c.skr_points.size() == 1u);
    CHECK(c.link.tx.pilot_amplitude == doctest::Approx(pilot_amplitude_for_ratio(25.0, Snu{3.9})));
}

TEST_CASE("dump and parse round trip") {
    auto c = parse_config(R"({"channel": {"length_km": 12.5, "crosstalk_level_db": -40}, "fast": true})");
    const std::string once = dump_config(c);
    const std::string twice = dump_config(parse_config(once));
    CHECK(once == twice);
    CHECK(dump_config(default_config()) == dump_config(parse_config(dump_config(default_config()))));
}

TEST_CASE("fast mode scales the link only") {
    auto c = default_config();
    c.fast = true;
    const auto l = c.effective_link();
    CHECK(l.tx.symbol_rate == doctest::Approx(1e7));
    CHECK(l.detector.adc_rate == doctest::Approx(1e8));
    CHECK(l.channel.freq_offset == doctest::Approx(2e7));
    CHECK(c.effective_security().R_s == 1e9);
    CHECK_NOTHROW(l.validate());
}
