#include "srl/cli.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace srl;
namespace fs = std::filesystem;

namespace {

struct MockBackend : cli::Backend {
    bool pass = true;
    bool fail_numerically = false;
    std::vector<std::string> calls;
    experiments::SweepConfig last;

    experiments::SweepResult canned(const experiments::SweepConfig& cfg, const std::string& call)
    {
        calls.push_back(call);
        last = cfg;
        if (fail_numerically)
            throw NumericalFailure("eigensolver did not converge");
        experiments::SweepResult r;
        r.family = cfg.family;
        r.check = cfg.check;
        experiments::SweepRow row;
        row.hbar = 0.1;
        row.set("q", 1.0);
        r.rows = {row};
        r.verdicts.push_back({"mock", "mock statement", pass ? "pass" : "fail", true, pass, 1.0, "detail"});
        return r;
    }
    experiments::SweepResult harmonic(const experiments::SweepConfig& cfg) override { return canned(cfg, "harmonic"); }
    experiments::SweepResult schrodinger(const experiments::SweepConfig& cfg) override
    {
        return canned(cfg, "schrodinger");
    }
    experiments::SweepResult regularity(const experiments::SweepConfig& cfg) override
    {
        return canned(cfg, "regularity");
    }
    experiments::AuditReport audit(const experiments::AuditConfig&) override
    {
        calls.push_back("audit");
        experiments::AuditReport rep;
        rep.subject = "harmonic";
        rep.items.push_back(experiments::make_item("mock", "lhs <= rhs", 1.0, pass ? 2.0 : 0.5));
        return rep;
    }
    phasespace::PhaseField transform(const grid::GridOperator& op, cli::TransformKind kind) override
    {
        calls.push_back(kind == cli::TransformKind::wigner ? "wigner" : "husimi");
        return phasespace::PhaseField::zeros(op.grid(), op.hbar());
    }
};

struct Outcome {
    int code;
    std::string out, err;
};

Outcome run(cli::Backend& b, std::vector<std::string> args)
{
    args.insert(args.begin(), "srl");
    std::vector<const char*> argv;
    for (const auto& a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(int(argv.size()), argv.data(), b, out, err);
    return {code, out.str(), err.str()};
}

std::string shipped(const std::string& name) { return std::string(SRL_CONFIG_DIR) + "/" + name; }

class CliTest : public ::testing::Test {
protected:
    void SetUp() override
    {
        dir = fs::temp_directory_path() / ("srl_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }

    long files_with(const std::string& ext) const
    {
        long n = 0;
        for (const auto& e : fs::recursive_directory_iterator(dir))
            n += e.path().extension() == ext;
        return n;
    }

    fs::path dir;
    MockBackend mock;
};

} // namespace

TEST_F(CliTest, UsageErrorsExitTwo)
{
    EXPECT_EQ(run(mock, {}).code, cli::exit_usage);
    EXPECT_EQ(run(mock, {"frobnicate"}).code, cli::exit_usage);
    EXPECT_EQ(run(mock, {"harmonic"}).code, cli::exit_usage);
    EXPECT_EQ(run(mock, {"--help"}).code, cli::exit_ok);
    const Outcome r = run(mock, {"harmonic", "-c", (dir / "absent.toml").string()});
    EXPECT_EQ(r.code, cli::exit_usage);
    EXPECT_NE(r.err.find("--config"), std::string::npos);
    EXPECT_TRUE(mock.calls.empty());
}

TEST_F(CliTest, PassingSweepExitsZeroAndWritesFiles)
{
    const Outcome r = run(mock, {"-o", dir.string(), "harmonic", "-c", shipped("harmonic_default.toml")});
    EXPECT_EQ(r.code, cli::exit_ok) << r.err;
    EXPECT_NE(r.out.find("[PASS] mock"), std::string::npos);
    EXPECT_EQ(mock.calls, std::vector<std::string>{"harmonic"});
    EXPECT_EQ(files_with(".csv"), 1);
    EXPECT_EQ(files_with(".json"), 1);
}

TEST_F(CliTest, FailedCheckExitsOne)
{
    mock.pass = false;
    const Outcome r = run(mock, {"-o", dir.string(), "harmonic", "-c", shipped("harmonic_default.toml")});
    EXPECT_EQ(r.code, cli::exit_check_failed);
    EXPECT_NE(r.out.find("[FAIL] mock"), std::string::npos);
    EXPECT_EQ(run(mock, {"-o", dir.string(), "audit", "-c", shipped("audit_harmonic.toml")}).code,
              cli::exit_check_failed);
}

TEST_F(CliTest, NumericalFailureExitsOne)
{
    mock.fail_numerically = true;
    const Outcome r = run(mock, {"-o", dir.string(), "harmonic", "-c", shipped("harmonic_default.toml")});
    EXPECT_EQ(r.code, cli::exit_check_failed);
    EXPECT_NE(r.err.find("converge"), std::string::npos);
}

TEST_F(CliTest, FamilyMismatchExitsTwo)
{
    const Outcome r = run(mock, {"-o", dir.string(), "schrodinger", "-c", shipped("harmonic_default.toml")});
    EXPECT_EQ(r.code, cli::exit_usage);
    EXPECT_NE(r.err.find("family"), std::string::npos);
    EXPECT_EQ(run(mock, {"-o", dir.string(), "harmonic", "-c", shipped("schrodinger_weyl.toml")}).code,
              cli::exit_usage);
    EXPECT_TRUE(mock.calls.empty());
}

TEST_F(CliTest, SweepRoutesByCheck)
{
    EXPECT_EQ(run(mock, {"-o", dir.string(), "sweep", "-c", shipped("harmonic_regularity.toml")}).code, cli::exit_ok);
    EXPECT_EQ(run(mock, {"-o", dir.string(), "sweep", "-c", shipped("schrodinger_weyl.toml")}).code, cli::exit_ok);
    EXPECT_EQ(run(mock, {"-o", dir.string(), "audit", "-c", shipped("audit_harmonic.toml")}).code, cli::exit_ok);
    EXPECT_EQ(mock.calls, (std::vector<std::string>{"regularity", "schrodinger", "audit"}));
}

TEST_F(CliTest, ThreadsOptionReachesConfig)
{
    EXPECT_EQ(run(mock, {"-o", dir.string(), "-j", "3", "harmonic", "-c", shipped("harmonic_default.toml")}).code,
              cli::exit_ok);
    EXPECT_EQ(mock.last.threads, 3u);
    EXPECT_EQ(run(mock, {"-j", "-2", "harmonic", "-c", shipped("harmonic_default.toml")}).code, cli::exit_usage);
}

TEST_F(CliTest, OutputDirectoryFallsBackToEnvironment)
{
    const fs::path cfg = dir / "no_output.toml";
    std::ofstream(cfg) << "family = \"harmonic\"\ncheck = \"env\"\n[harmonic]\nlevels = [8, 16, 32, 64, 128]\n";
    const fs::path target = dir / "from_env";
    ::setenv("SRL_OUTPUT_DIR", target.c_str(), 1);
    const Outcome r = run(mock, {"harmonic", "-c", cfg.string()});
    ::unsetenv("SRL_OUTPUT_DIR");
    EXPECT_EQ(r.code, cli::exit_ok) << r.err;
    ASSERT_TRUE(fs::is_directory(target));
    long n = 0;
    for (const auto& e : fs::directory_iterator(target))
        n += e.path().filename().string().rfind("harmonic_env_", 0) == 0;
    EXPECT_EQ(n, 2);
}

TEST_F(CliTest, TransformWritesField)
{
    const fock::FockOperator p = fock::harmonic_projection(0, 1, 6, 0.1);
    const grid::GridOperator op = fock::fock_to_grid(p, grid::Grid(4.0, 64));
    const fs::path in = dir / "ground.bin";
    phasespace::write_operator_binary(op, in.string());

    cli::NumericBackend numeric;
    const fs::path out = dir / "w.csv";
    const Outcome r = run(numeric, {"transform", "--wigner", "-i", in.string(), "--output", out.string()});
    EXPECT_EQ(r.code, cli::exit_ok) << r.err;
    std::ifstream f(out);
    std::string header;
    std::getline(f, header);
    EXPECT_EQ(header, "# columns: x xi value");

    EXPECT_EQ(run(mock, {"-o", dir.string(), "transform", "--husimi", "--binary", "-i", in.string()}).code,
              cli::exit_ok);
    EXPECT_TRUE(fs::exists(dir / "ground_husimi.bin"));
    EXPECT_EQ(run(mock, {"transform", "--wigner", "--husimi", "-i", in.string()}).code, cli::exit_usage);
    EXPECT_EQ(run(mock, {"transform", "--wigner", "-i", (dir / "none.bin").string()}).code, cli::exit_usage);
}
