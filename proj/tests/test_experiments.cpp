#include "mflab/experiments.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace mflab;
namespace ex = mflab::experiments;

namespace {

std::size_t error_line(const std::string& text) {
    try {
        ex::parse_config(text, "t.ini");
    } catch (const ex::ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("t.ini:"), std::string::npos) << e.what();
        return e.line();
    }
    ADD_FAILURE() << "no ConfigError for:\n" << text;
    return 0;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST(Catalogue, EightExperimentsWithDefaults) {
    const auto& cat = ex::catalogue();
    ASSERT_EQ(cat.size(), 8u);
    for (const auto& e : cat) {
        const auto cfg = ex::default_config(e.name);
        EXPECT_EQ(cfg.experiment, e.name);
        for (const auto& k : e.knobs) {
            EXPECT_GE(k.fallback, k.lo) << e.name << "." << k.key;
            EXPECT_LE(k.fallback, k.hi) << e.name << "." << k.key;
        }
    }
    std::ostringstream s;
    ex::print_catalogue(s);
    EXPECT_NE(s.str().find("section5"), std::string::npos);
    EXPECT_THROW(ex::default_config("nope"), ex::ConfigError);
}

TEST(ParseConfig, ValidFile) {
    const auto cfg = ex::parse_config(
        "[experiment]\nname = sde-moments\noutput_dir = somewhere\n[knobs]\nN = 500\nseed = 3\n[model]\na1 = 0.2\n");
    EXPECT_EQ(cfg.experiment, "sde-moments");
    EXPECT_EQ(cfg.output_dir, std::filesystem::path("somewhere"));
    EXPECT_EQ(cfg.count("N"), 500u);
    EXPECT_EQ(cfg.seed(), 3u);
    EXPECT_DOUBLE_EQ(cfg.knob("a1"), 0.2);
    EXPECT_DOUBLE_EQ(cfg.knob("s1"), ex::default_config("sde-moments").knob("s1"));
}

TEST(ParseConfig, Lambdas) {
    const auto cfg = ex::parse_config("[experiment]\nname = gateaux\n[knobs]\nlambdas = 0.2, 0.1\n");
    ASSERT_EQ(cfg.lambdas.size(), 2u);
    EXPECT_DOUBLE_EQ(cfg.lambdas[1], 0.1);
    EXPECT_EQ(error_line("[experiment]\nname = gateaux\n[knobs]\nlambdas = 0.2, x\n"), 4u);
}

TEST(ParseConfig, ErrorsCarryLineNumbers) {
    EXPECT_EQ(error_line("[experiment]\nname = sde-moments\n[knobs]\nN = -5\n"), 4u);
    EXPECT_EQ(error_line("[experiment]\nname = sde-moments\n[knobs]\nN = 2.5\n"), 4u);
    EXPECT_EQ(error_line("[experiment]\nname = sde-moments\n[knobs]\nM = 100\nbogus = 1\n"), 5u);
    EXPECT_EQ(error_line("[experiment]\nname = norms\n\n[extra]\nx = 1\n"), 4u);
    EXPECT_EQ(error_line("[experiment]\nname = does-not-exist\n"), 2u);
    EXPECT_EQ(error_line("[experiment]\nname = norms\n[knobs]\nquadrature_n = abc\n"), 4u);
}

TEST(ParseConfig, MissingName) {
    EXPECT_THROW(ex::parse_config("[knobs]\nN = 5\n"), ex::ConfigError);
    EXPECT_THROW(ex::load_config("/nonexistent/config.ini"), ex::ConfigError);
}

TEST(Run, NormsWritesCsvWithOracleRow) {
    auto cfg = ex::default_config("norms");
    cfg.output_dir = std::filesystem::temp_directory_path() / "mflab_test_norms";
    std::filesystem::remove_all(cfg.output_dir);
    const auto r = ex::run(cfg);
    EXPECT_TRUE(r.pass());
    ASSERT_NE(r.find("dirac(0)_m2_norm_error"), nullptr);
    EXPECT_EQ(r.find("missing"), nullptr);
    const auto text = slurp(cfg.output_dir / "norms.csv");
    EXPECT_NE(text.find("1.7724538509055"), std::string::npos);
    EXPECT_NE(text.find("# seed="), std::string::npos);
    std::ostringstream s;
    ex::print_summary(s, r);
    EXPECT_EQ(s.str().rfind("PASS", 0), 0u);
}

TEST(Run, SmallSdeMomentsIsReproducible) {
    auto cfg = ex::parse_config("[experiment]\nname = sde-moments\n[knobs]\nN = 2000\nM = 20\n");
    const auto base = std::filesystem::temp_directory_path() / "mflab_test_sde";
    cfg.output_dir = base / "a";
    ex::run(cfg);
    cfg.output_dir = base / "b";
    cfg.knobs["threads"] = 3;
    ex::run(cfg);
    EXPECT_EQ(slurp(base / "a" / "sde_moments.csv"), slurp(base / "b" / "sde_moments.csv"));
    std::filesystem::remove_all(base);
}
