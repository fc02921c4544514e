#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "aplab/config.hpp"

using namespace aplab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path &p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

fs::path scratch(const std::string &name) {
    fs::path d = fs::temp_directory_path() / ("aplab_cli_test_" + std::to_string(::getpid())) / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

struct CliRun {
    int code = -1;
    std::string err;
    std::string out;
};

CliRun cli(const std::string &args, const fs::path &dir) {
    const fs::path so = dir / "stdout.txt", se = dir / "stderr.txt";
    const std::string cmd = std::string(APLAB_CLI_PATH) + " " + args + " >" + so.string() + " 2>" + se.string();
    const int status = std::system(cmd.c_str());
    CliRun r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(so);
    r.err = slurp(se);
    return r;
}

int error_line(const std::string &text) {
    try {
        parse_config(text, "t.ini");
    } catch (const ConfigError &e) {
        return e.line();
    }
    return -1;
}

} // namespace

TEST(Config, RoundTrip) {
    RunConfig c;
    c.profile_kind = "bryant-like";
    c.tail_c = 0.125;
    c.three_circles_d = {0.5, 1.05, 2.0};
    c.torus_lengths = {1.0, 2.5};
    c.seed = 987654321012345ull;
    c.out = "elsewhere";
    c.tol_cauchy = 3.3e-7;
    c.coupling_enabled = false;
    EXPECT_EQ(parse_config(to_ini(c)), c);
    EXPECT_EQ(parse_config(to_ini(RunConfig{})), RunConfig{});
}

TEST(Config, ShippedDefaultsMatchBuiltIn) {
    EXPECT_EQ(slurp(fs::path(APLAB_SOURCE_DIR) / "configs" / "default.ini"), to_ini(RunConfig{}));
    RunConfig s = load_config((fs::path(APLAB_SOURCE_DIR) / "configs" / "sine_tail.ini").string());
    EXPECT_EQ(s.profile_kind, "sine-tail");
}

TEST(Config, PartialFileKeepsDefaults) {
    RunConfig c = parse_config("[run]\nseed = 5\n");
    RunConfig d;
    d.seed = 5;
    EXPECT_EQ(c, d);
}

TEST(Config, ErrorsCarryLineNumbers) {
    EXPECT_EQ(error_line("[profile]\nn = 3\nscale = abc\n"), 3);
    EXPECT_EQ(error_line("[profile]\nn = 3\n[run\nseed = 1\n"), 3);
    EXPECT_EQ(error_line("[profile]\nn = 3\nbogus = 1\n"), 3);
    EXPECT_EQ(error_line("[run]\nseed = 1\n\n[tolerances]\nfit_r2 = -0.5\n"), 5);
    EXPECT_EQ(error_line("[profile]\nkind = wobbly\n"), 2);
    EXPECT_EQ(error_line("[profile]\nkind = bryant-like\nn = 4\nscale = 2\n"), 4);
    EXPECT_THROW(parse_config("[nosuch]\nx = 1\n"), ConfigError);
    EXPECT_THROW(parse_config("[tolerances]\ncauchy = 0\n"), ConfigError);
    EXPECT_THROW(load_config("/nonexistent/aplab.ini"), ConfigError);
}

TEST(Config, ValidateRejectsBadRanges) {
    RunConfig c;
    c.n = 2;
    EXPECT_THROW(validate(c), ConfigError);
    c = RunConfig{};
    c.r_asym = 0.4;
    EXPECT_THROW(validate(c), ConfigError);
    c = RunConfig{};
    c.tol_growth = -1.0;
    EXPECT_THROW(validate(c), ConfigError);
    EXPECT_NO_THROW(validate(RunConfig{}));
}

TEST(Cli, CertifyExitCodes) {
    fs::path d = scratch("certify");
    const fs::path cfgdir = fs::path(APLAB_SOURCE_DIR) / "configs";
    CliRun ok = cli("--out " + (d / "ok").string() + " certify", d);
    EXPECT_EQ(ok.code, 0) << ok.err;
    EXPECT_TRUE(fs::exists(d / "ok" / "manifest.txt"));
    CliRun bad = cli("--config " + (cfgdir / "sine_tail.ini").string() + " --out " + (d / "bad").string() + " certify", d);
    EXPECT_EQ(bad.code, 1);
    EXPECT_NE(bad.err.find("potential line 2"), std::string::npos) << bad.err;
}

TEST(Cli, ConfigErrorsExitTwo) {
    fs::path d = scratch("errors");
    {
        std::ofstream f(d / "broken.ini");
        f << "[profile]\nn = 3\nscale = nope\n";
    }
    CliRun r = cli("--config " + (d / "broken.ini").string() + " certify", d);
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("broken.ini:3"), std::string::npos) << r.err;
    EXPECT_EQ(cli("", d).code, 2);
    EXPECT_EQ(cli("frobnicate", d).code, 2);
}

TEST(Cli, RadialOutputsAreDeterministic) {
    fs::path d = scratch("radial");
    CliRun a = cli("--out " + (d / "a").string() + " radial", d);
    CliRun b = cli("--out " + (d / "b").string() + " --workers 3 radial", d);
    ASSERT_EQ(a.code, 0) << a.err;
    ASSERT_EQ(b.code, 0) << b.err;
    int files = 0;
    for (const auto &e : fs::directory_iterator(d / "a")) {
        const auto name = e.path().filename();
        if (name == "manifest.txt")
            continue;
        ++files;
        EXPECT_EQ(slurp(e.path()), slurp(d / "b" / name)) << name;
    }
    EXPECT_EQ(files, 4);
    for (const char *lam : {"0", "1", "3"})
        EXPECT_TRUE(fs::exists(d / "a" / ("radial_lambda_" + std::string(lam) + ".csv"))) << lam;
    // Growth exponents in the summary: 0, then about 1 and 3.
    std::istringstream sum(slurp(d / "a" / "radial_summary.csv"));
    std::string line;
    std::getline(sum, line);
    const double want[] = {0.0, 1.0, 3.0};
    for (double w : want) {
        ASSERT_TRUE(std::getline(sum, line));
        const auto c1 = line.find(','), c2 = line.find(',', c1 + 1);
        EXPECT_NEAR(std::stod(line.substr(c1 + 1, c2 - c1 - 1)), w, 5e-3) << line;
    }
}
