#include <gtest/gtest.h>

#include <sstream>

#include "drumcoach/config.hpp"
#include "support.hpp"

using namespace drumcoach;

namespace {
EngineConfig parse(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

std::size_t error_line(const std::string& text) {
    try {
        parse(text);
    } catch (const LineError& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Config);
        return e.line();
    }
    return 0;
}
} // namespace

TEST(Config, EmptyTextGivesDefaults) { EXPECT_EQ(parse(""), EngineConfig{}); }

TEST(Config, EmittedConfigRoundTrips) {
    EngineConfig cfg;
    cfg.scoring.e_max = 0.4;
    cfg.scoring.bone_weights[3] = 0.75;
    cfg.session.guide_steps = {"hello", "bye"};
    cfg.session.participant_id = "p#1";  // '#' inside a string is not a comment
    cfg.audio.audience = {{"solo", {1.0, 2.0, -3.5}}};
    cfg.listen = "0.0.0.0:9000";
    cfg.tick_ms = 5;
    EXPECT_EQ(parse(emit_config(cfg)), cfg);
}

TEST(Config, ShippedConfigLoads) {
    const auto cfg = load_config(testing_support::data_dir() / "drumcoach.toml");
    EXPECT_EQ(cfg.scoring, ScoringConfig{});
    EXPECT_EQ(cfg.audio.audience.size(), 3u);
}

TEST(Config, UnknownKeysAndSectionsNameTheLine) {
    EXPECT_EQ(error_line("[scoring]\ne_max = 0.3\nemax = 0.3\n"), 3u);
    EXPECT_EQ(error_line("\n[nowhere]\n"), 2u);
    EXPECT_EQ(error_line("[session]\ncountdown_ms = \"soon\"\n"), 2u);
    EXPECT_EQ(error_line("[session\n"), 1u);
    EXPECT_EQ(error_line("just words\n"), 1u);
}

TEST(Config, CrossFieldValidation) {
    EXPECT_THROW(parse("[scoring]\npose_weight = 0.5\n"), Error);
    EXPECT_THROW(parse("[audio]\nlistener_facing = [0, 1, 0]\n"), Error);
    EXPECT_THROW(parse("[audio]\nd_ref = 5\nd_max = 2\n"), Error);
    EXPECT_THROW(parse("[gateway]\ntick_ms = 0\n"), Error);
    EXPECT_NO_THROW(parse("[scoring]\npose_weight = 0.5\ntiming_weight = 0.5\n"));
}

TEST(Config, MissingFileIsAnIoError) {
    try {
        load_config("/nonexistent/drumcoach.toml");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Io);
    }
}
