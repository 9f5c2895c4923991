#ifndef SRL_CLI_HPP
#define SRL_CLI_HPP

#include "srl/config.hpp"
#include "srl/experiments.hpp"
#include "srl/phasespace.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

namespace srl::cli {

enum class TransformKind { wigner, husimi };

/// Everything numerical the dispatcher needs; replaced by a mock in tests.
class Backend {
public:
    virtual ~Backend() = default;
    virtual experiments::SweepResult harmonic(const experiments::SweepConfig& cfg) = 0;
    virtual experiments::SweepResult schrodinger(const experiments::SweepConfig& cfg) = 0;
    virtual experiments::SweepResult regularity(const experiments::SweepConfig& cfg) = 0;
    virtual experiments::AuditReport audit(const experiments::AuditConfig& cfg) = 0;
    virtual phasespace::PhaseField transform(const grid::GridOperator& op, TransformKind kind) = 0;
};

class NumericBackend : public Backend {
public:
    experiments::SweepResult harmonic(const experiments::SweepConfig& cfg) override
    {
        return experiments::harmonic_sweep(cfg);
    }
    experiments::SweepResult schrodinger(const experiments::SweepConfig& cfg) override
    {
        return experiments::weyl_law_sweep(cfg);
    }
    experiments::SweepResult regularity(const experiments::SweepConfig& cfg) override
    {
        return experiments::regularity_trend(cfg);
    }
    experiments::AuditReport audit(const experiments::AuditConfig& cfg) override { return experiments::audit_family(cfg); }
    phasespace::PhaseField transform(const grid::GridOperator& op, TransformKind kind) override
    {
        return kind == TransformKind::wigner ? phasespace::wigner(op) : phasespace::husimi(op);
    }
};

inline constexpr int exit_ok = 0;
inline constexpr int exit_check_failed = 1;
inline constexpr int exit_usage = 2;

struct Options {
    std::string subcommand;
    std::string config;
    std::string output_dir;
    int verbosity = 1;
    int threads = -1;
    // transform
    std::string input;
    std::string output_file;
    bool wigner = false;
    bool husimi = false;
    bool binary = false;
};

/// --output-dir, then [output] dir in the config, then SRL_OUTPUT_DIR, then ".".
inline std::string resolve_output_dir(const Options& o, const config::Reader* r)
{
    if (!o.output_dir.empty())
        return o.output_dir;
    if (r && r->has("output.dir"))
        return r->string("output.dir");
    if (const char* env = std::getenv("SRL_OUTPUT_DIR"); env && *env)
        return env;
    return ".";
}

inline void ensure_writable(const std::string& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir))
        throw config::ConfigError("output.dir", "cannot create directory " + dir);
    const auto probe = std::filesystem::path(dir) / ".srl_write_probe";
    {
        std::ofstream f(probe);
        if (!f)
            throw config::ConfigError("output.dir", "directory " + dir + " is not writable");
    }
    std::filesystem::remove(probe, ec);
}

inline const char* tag(const experiments::Verdict& v)
{
    if (!v.asserted)
        return "[INFO]";
    return v.passed ? "[PASS]" : "[FAIL]";
}

inline int report_sweep(const experiments::SweepResult& res, const experiments::WrittenFiles& files, int verbosity,
                        std::ostream& out)
{
    if (verbosity >= 2) {
        for (const auto& r : res.rows) {
            out << "  hbar " << experiments::fmt(r.hbar) << " rank " << r.rank;
            for (const auto& [k, v] : r.values)
                out << ' ' << k << '=' << experiments::fmt(v);
            out << '\n';
        }
        for (const auto& f : res.fits)
            out << "  fit " << f.quantity << " slope " << experiments::fmt(f.line.slope) << " R^2 "
                << experiments::fmt(f.line.r2) << '\n';
    }
    if (verbosity >= 1)
        for (const auto& w : res.warnings)
            out << "warning: " << w << '\n';
    for (const auto& v : res.verdicts)
        out << tag(v) << ' ' << v.check << " (" << v.statement << "): " << v.outcome << "; " << v.detail << '\n';
    if (verbosity >= 1)
        out << "wrote " << files.csv << "\nwrote " << files.json << '\n';
    return res.passed() ? exit_ok : exit_check_failed;
}

inline int report_audit(const experiments::AuditReport& rep, const experiments::WrittenFiles& files, int verbosity,
                        std::ostream& out)
{
    for (const auto& it : rep.items)
        out << (it.passed ? "[PASS] " : "[FAIL] ") << it.name << " (" << it.statement << "): lhs "
            << experiments::fmt(it.lhs) << " rhs " << experiments::fmt(it.rhs) << " slack " << experiments::fmt(it.slack)
            << '\n';
    if (verbosity >= 1)
        out << "wrote " << files.csv << "\nwrote " << files.json << '\n';
    return rep.passed() ? exit_ok : exit_check_failed;
}

inline int dispatch(const Options& o, Backend& backend, std::ostream& out)
{
    if (o.threads >= 0)
        default_thread_count() = std::max(1, o.threads);

    if (o.subcommand == "transform") {
        if (o.wigner == o.husimi)
            throw config::ConfigError("--wigner/--husimi", "choose exactly one transform");
        if (!std::filesystem::exists(o.input))
            throw config::ConfigError("--input", "file " + o.input + " does not exist");
        const grid::GridOperator op = phasespace::read_operator_binary(o.input);
        const TransformKind kind = o.wigner ? TransformKind::wigner : TransformKind::husimi;
        const phasespace::PhaseField f = backend.transform(op, kind);
        std::string path = o.output_file;
        if (path.empty()) {
            const std::string dir = resolve_output_dir(o, nullptr);
            ensure_writable(dir);
            path = (std::filesystem::path(dir) / (std::filesystem::path(o.input).stem().string() +
                                                  (o.wigner ? "_wigner" : "_husimi") + (o.binary ? ".bin" : ".csv")))
                       .string();
        }
        if (o.binary)
            phasespace::write_binary(f, path);
        else
            phasespace::write_csv(f, path);
        out << "[PASS] transform: " << (o.wigner ? "wigner" : "husimi") << " written to " << path << '\n';
        return exit_ok;
    }

    if (!std::filesystem::exists(o.config))
        throw config::ConfigError("--config", "file " + o.config + " does not exist");
    const config::Reader reader = config::load(o.config);
    const std::string dir = resolve_output_dir(o, &reader);
    ensure_writable(dir);

    if (o.subcommand == "audit") {
        const experiments::AuditConfig cfg = config::audit_config(reader);
        const experiments::AuditReport rep = backend.audit(cfg);
        return report_audit(rep, experiments::write_audit(rep, dir), o.verbosity, out);
    }

    experiments::SweepConfig cfg = config::sweep_config(reader);
    if (o.threads >= 0)
        cfg.threads = unsigned(std::max(1, o.threads));
    using experiments::Family;
    if (o.subcommand == "harmonic" && cfg.family != Family::harmonic)
        throw config::ConfigError("family", "the harmonic subcommand needs family = \"harmonic\"");
    if (o.subcommand == "schrodinger" && cfg.family != Family::schrodinger)
        throw config::ConfigError("family", "the schrodinger subcommand needs family = \"schrodinger\"");

    experiments::SweepResult res;
    if (o.subcommand == "sweep" && cfg.check == "regularity")
        res = backend.regularity(cfg);
    else if (cfg.family == Family::harmonic)
        res = backend.harmonic(cfg);
    else
        res = backend.schrodinger(cfg);
    return report_sweep(res, experiments::write_sweep(res, dir), o.verbosity, out);
}

/// Parse argv and dispatch; usage and config errors give 2, failed checks 1.
inline int run(int argc, const char* const* argv, Backend& backend, std::ostream& out = std::cout,
               std::ostream& err = std::cerr)
{
    CLI::App app{"Phase-space norms of projection operators: sweeps, audits and transforms", "srl"};
    app.require_subcommand(1);
    Options o;
    int verbose = 0;
    bool quiet = false;
    app.add_option("-o,--output-dir", o.output_dir, "Output directory (default: [output] dir, SRL_OUTPUT_DIR, .)");
    app.add_option("-j,--threads", o.threads, "Worker threads")->check(CLI::NonNegativeNumber);
    app.add_flag("-v,--verbose", verbose, "More output (repeatable)");
    app.add_flag("-q,--quiet", quiet, "Only verdict lines");

    for (const char* name : {"harmonic", "schrodinger", "sweep", "audit"}) {
        CLI::App* sub = app.add_subcommand(name, std::string("Run the ") + name + " experiment from a TOML config");
        sub->add_option("-c,--config", o.config, "TOML configuration file")->required();
    }
    CLI::App* tr = app.add_subcommand("transform", "Wigner or Husimi transform of a stored operator");
    tr->add_flag("--wigner", o.wigner, "Wigner transform");
    tr->add_flag("--husimi", o.husimi, "Husimi transform");
    tr->add_option("-i,--input", o.input, "Operator file written by write_operator_binary")->required();
    tr->add_option("--output", o.output_file, "Output file (default: <output-dir>/<input>_<kind>.csv)");
    tr->add_flag("--binary", o.binary, "Write the binary field format instead of CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_usage;
    }
    for (const CLI::App* sub : app.get_subcommands())
        o.subcommand = sub->get_name();
    o.verbosity = quiet ? 0 : 1 + verbose;

    try {
        return dispatch(o, backend, out);
    } catch (const config::ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_check_failed;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_check_failed;
    }
}

} // namespace srl::cli

#endif // SRL_CLI_HPP
