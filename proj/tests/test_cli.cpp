#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <string>
#include <sys/wait.h>

#include "rrk/io.hpp"

namespace {

struct CliRun {
    int status = -1;
    std::string output;  // stdout and stderr
};

CliRun run(const std::string& args) {
    const std::string cmd = std::string(RRK_CLI_PATH) + ' ' + args + " 2>&1";
    CliRun r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    std::array<char, 4096> buf{};
    while (std::fgets(buf.data(), buf.size(), pipe)) r.output += buf.data();
    const int raw = pclose(pipe);
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    return r;
}

std::string temp(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("rrk_cli_" + name)).string();
}

}  // namespace

TEST(Cli, ConvergeWritesOneRowPerLevel) {
    const std::string out = temp("conv.csv");
    const CliRun r = run("converge --problem jump --method rand-rk2 --n-min 3 --n-max 10 --samples 100 --out " + out);
    ASSERT_EQ(r.status, 0) << r.output;
    EXPECT_NE(r.output.find("fitted slope"), std::string::npos);
    const auto rows = rrk::parse_csv(rrk::read_text(out));
    EXPECT_EQ(rows.size(), 8u);
    std::filesystem::remove(out);
}

TEST(Cli, ConvergeIsIndependentOfThreadCount) {
    const std::string a = temp("t1.csv"), b = temp("t4.csv");
    const std::string base = "converge --problem singular --gamma 3 --method rand-euler --n-min 3 --n-max 7 --samples 64 ";
    ASSERT_EQ(run(base + "--threads 1 --out " + a).status, 0);
    ASSERT_EQ(run(base + "--threads 4 --out " + b).status, 0);
    EXPECT_EQ(rrk::read_text(a), rrk::read_text(b));
    std::filesystem::remove(a);
    std::filesystem::remove(b);
}

TEST(Cli, AdversarialDemo) {
    const CliRun r = run("adversarial --h 0.0625 --seed 1 --samples 100");
    ASSERT_EQ(r.status, 0) << r.output;
    EXPECT_NE(r.output.find("classical error 1\n"), std::string::npos) << r.output;
    EXPECT_NE(r.output.find("randomized error 0 "), std::string::npos) << r.output;
}

TEST(Cli, InvalidGammaExitsWithUsageError) {
    const CliRun r = run("converge --problem singular --gamma 0.5");
    EXPECT_EQ(r.status, 2);
    EXPECT_NE(r.output.find("gamma must exceed 1"), std::string::npos) << r.output;
}

TEST(Cli, UnknownFlagAndMissingSubcommand) {
    EXPECT_EQ(run("converge --bogus 3").status, 2);
    EXPECT_EQ(run("").status, 2);
    EXPECT_EQ(run("converge --method rk4").status, 2);
    EXPECT_EQ(run("--help").status, 0);
}

TEST(Cli, PlotRejectsSingleRow) {
    const std::string csv = temp("one.csv"), svg = temp("one.svg");
    rrk::write_text(csv, std::string(rrk::kCsvHeader) + "\njump,rand-euler,2,0.5,10,0.1,0.01,1\n");
    EXPECT_EQ(run("plot --in " + csv + " --out " + svg).status, 2);
    std::filesystem::remove(csv);
}

TEST(Cli, PlotFromConvergeOutput) {
    const std::string csv = temp("p.csv"), svg = temp("p.svg");
    ASSERT_EQ(run("converge --method rand-euler rand-rk2 --n-min 3 --n-max 6 --samples 50 --out " + csv).status, 0);
    ASSERT_EQ(run("plot --in " + csv + " --out " + svg).status, 0);
    const std::string text = rrk::read_text(svg);
    EXPECT_NE(text.find("<polyline"), std::string::npos);
    EXPECT_NE(text.find("slope="), std::string::npos);
    std::filesystem::remove(csv);
    std::filesystem::remove(svg);
}

TEST(Cli, UnwritableOutputIsIoFailure) {
    EXPECT_EQ(run("converge --n-min 3 --n-max 5 --samples 10 --out /nonexistent-dir/x.csv").status, 3);
}

TEST(Cli, SolveAndConstants) {
    const CliRun s = run("solve --problem jump --method rand-rk2 --h 0.125 --seed 3");
    ASSERT_EQ(s.status, 0) << s.output;
    EXPECT_NE(s.output.find("path error"), std::string::npos);
    const CliRun c = run("constants --problem manufactured --gamma 0.5 --lambda 1");
    ASSERT_EQ(c.status, 0) << c.output;
    EXPECT_NE(c.output.find("C_U = "), std::string::npos);
    EXPECT_EQ(run("constants --problem singular --gamma 2").status, 2);
}
