#ifndef SRL_CONFIG_HPP
#define SRL_CONFIG_HPP

#include "srl/experiments.hpp"

#include <toml.hpp>

#include <optional>
#include <string>
#include <vector>

namespace srl::config {

/// Missing or malformed configuration entry; key() is the dotted path.
class ConfigError : public InvalidArgument {
public:
    ConfigError(std::string key, const std::string& what)
        : InvalidArgument("config key '" + key + "': " + what), key_(std::move(key))
    {
    }
    [[nodiscard]] const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

/// Dotted-path reader over a parsed TOML table.
class Reader {
public:
    explicit Reader(toml::table t) : root_(std::move(t)) {}

    [[nodiscard]] const toml::table& root() const noexcept { return root_; }

    [[nodiscard]] toml::node_view<const toml::node> at(const std::string& key) const
    {
        return root_.at_path(key);
    }
    [[nodiscard]] bool has(const std::string& key) const { return bool(at(key)); }

    [[nodiscard]] std::string string(const std::string& key) const
    {
        if (!has(key))
            throw ConfigError(key, "missing");
        if (auto v = at(key).value<std::string>())
            return *v;
        throw ConfigError(key, "expected a string");
    }
    [[nodiscard]] std::string string(const std::string& key, const std::string& fallback) const
    {
        return has(key) ? string(key) : fallback;
    }

    [[nodiscard]] double number(const std::string& key) const
    {
        if (!has(key))
            throw ConfigError(key, "missing");
        return to_number(at(key), key);
    }
    [[nodiscard]] double number(const std::string& key, double fallback) const
    {
        return has(key) ? number(key) : fallback;
    }

    [[nodiscard]] long integer(const std::string& key) const
    {
        if (!has(key))
            throw ConfigError(key, "missing");
        if (auto v = at(key).value_exact<int64_t>())
            return long(*v);
        throw ConfigError(key, "expected an integer");
    }
    [[nodiscard]] long integer(const std::string& key, long fallback) const
    {
        return has(key) ? integer(key) : fallback;
    }

    [[nodiscard]] bool boolean(const std::string& key, bool fallback) const
    {
        if (!has(key))
            return fallback;
        if (auto v = at(key).value<bool>())
            return *v;
        throw ConfigError(key, "expected true or false");
    }

    [[nodiscard]] std::vector<double> numbers(const std::string& key) const
    {
        const toml::array* arr = array(key);
        std::vector<double> out;
        for (std::size_t i = 0; i < arr->size(); ++i)
            out.push_back(to_number(toml::node_view<const toml::node>(arr->get(i)), key + "[" + std::to_string(i) + "]"));
        return out;
    }

    [[nodiscard]] std::vector<long> integers(const std::string& key) const
    {
        const toml::array* arr = array(key);
        std::vector<long> out;
        for (std::size_t i = 0; i < arr->size(); ++i) {
            auto v = arr->get(i)->value_exact<int64_t>();
            if (!v)
                throw ConfigError(key + "[" + std::to_string(i) + "]", "expected an integer");
            out.push_back(long(*v));
        }
        return out;
    }

    [[nodiscard]] const toml::array* array(const std::string& key) const
    {
        if (!has(key))
            throw ConfigError(key, "missing");
        const toml::array* arr = at(key).as_array();
        if (!arr)
            throw ConfigError(key, "expected an array");
        return arr;
    }

private:
    /// Accepts integers, floats (including inf) and the string "inf".
    static double to_number(toml::node_view<const toml::node> n, const std::string& key)
    {
        if (auto s = n.value_exact<std::string>()) {
            if (*s == "inf")
                return infinity;
            throw ConfigError(key, "expected a number or \"inf\"");
        }
        if (auto v = n.value<double>())
            return *v;
        throw ConfigError(key, "expected a number");
    }

    toml::table root_;
};

inline Reader load(const std::string& path)
{
    try {
        return Reader(toml::parse_file(path));
    } catch (const toml::parse_error& e) {
        std::ostringstream msg;
        msg << "cannot parse " << path << ": " << e.description() << " at line " << e.source().begin.line;
        throw ConfigError("<file>", msg.str());
    }
}

inline Reader parse(std::string_view text)
{
    try {
        return Reader(toml::parse(text));
    } catch (const toml::parse_error& e) {
        std::ostringstream msg;
        msg << e.description() << " at line " << e.source().begin.line;
        throw ConfigError("<text>", msg.str());
    }
}

/// [<prefix>] kind = harmonic_well | bump | rough_hoelder | csv, with that kind's parameters.
inline grid::Potential read_potential(const Reader& r, const std::string& prefix)
{
    const std::string kind = r.string(prefix + ".kind");
    auto num = [&](const std::string& k, double fallback) { return r.number(prefix + "." + k, fallback); };
    if (kind == "harmonic_well")
        return grid::Potential::harmonic_well(num("u0", 1.0));
    if (kind == "bump")
        return grid::Potential::bump(num("u0", 1.0), num("radius", 2.5), num("epsilon", 1.0));
    if (kind == "rough_hoelder")
        return grid::Potential::rough_hoelder(num("alpha", 0.5), num("amplitude", 0.1),
                                              int(r.integer(prefix + ".kmax", -1)), num("u0", 1.0),
                                              num("radius", 2.5), num("epsilon", 1.0));
    if (kind == "csv")
        return grid::Potential::from_csv(r.string(prefix + ".file"));
    throw ConfigError(prefix + ".kind", "unknown potential '" + kind + "'");
}

inline norms::NormRequest read_norm(const Reader& r, const std::string& prefix)
{
    norms::NormRequest n;
    try {
        n.kind = norms::norm_kind_from_string(r.string(prefix + ".kind"));
    } catch (const ConfigError&) {
        throw;
    } catch (const InvalidArgument& e) {
        throw ConfigError(prefix + ".kind", e.what());
    }
    n.p = r.number(prefix + ".p", 2.0);
    n.q = r.number(prefix + ".q", infinity);
    n.s = r.number(prefix + ".s", 0.5);
    try {
        n.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(prefix, e.what());
    }
    return n;
}

inline std::optional<norms::QuadratureSpec> read_quadrature(const Reader& r)
{
    if (!r.has("quadrature"))
        return std::nullopt;
    norms::QuadratureSpec q;
    q.r_min = r.number("quadrature.r_min");
    q.r_max = r.number("quadrature.r_max");
    q.rho = r.number("quadrature.rho", q.rho);
    q.directions = int(r.integer("quadrature.directions", q.directions));
    try {
        (void)q.shells();
    } catch (const InvalidArgument& e) {
        throw ConfigError("quadrature", e.what());
    }
    return q;
}

inline std::size_t table_array_size(const Reader& r, const std::string& key)
{
    if (!r.has(key))
        return 0;
    return r.array(key)->size();
}

inline experiments::SweepConfig sweep_config(const Reader& r)
{
    experiments::SweepConfig c;
    try {
        c.family = experiments::family_from_string(r.string("family"));
    } catch (const ConfigError&) {
        throw;
    } catch (const InvalidArgument& e) {
        throw ConfigError("family", e.what());
    }
    c.check = r.string("check");
    c.threads = unsigned(std::max(0L, r.integer("threads", 0)));
    if (c.family == experiments::Family::harmonic) {
        c.levels.clear();
        for (long n : r.integers("harmonic.levels"))
            c.levels.push_back(int(n));
        c.dim = int(r.integer("harmonic.dim", 1));
        c.cutoff_extra = int(r.integer("harmonic.cutoff_extra", c.cutoff_extra));
        c.points = r.integer("harmonic.points", 1024);
        c.width_factor = r.number("harmonic.width_factor", c.width_factor);
        c.gradient_checks = r.boolean("harmonic.gradient_checks", true);
    } else {
        c.hbars = r.numbers("schrodinger.hbars");
        c.dim = int(r.integer("schrodinger.dim", 1));
        c.points = r.integer("schrodinger.points", 256);
        c.half_width = r.number("schrodinger.half_width", c.half_width);
        c.threshold = r.number("schrodinger.threshold", 0.0);
        c.refine_factor = r.integer("schrodinger.refine", c.refine_factor);
        c.omega_level = r.number("schrodinger.omega_level", 0.0);
        c.potential = read_potential(r, "schrodinger.potential");
    }
    c.quadrature = read_quadrature(r);
    for (std::size_t i = 0; i < table_array_size(r, "norms"); ++i)
        c.norms.push_back(read_norm(r, "norms[" + std::to_string(i) + "]"));
    for (std::size_t i = 0; i < table_array_size(r, "trends"); ++i) {
        const std::string prefix = "trends[" + std::to_string(i) + "]";
        experiments::TrendRequest t;
        t.norm = read_norm(r, prefix);
        try {
            t.expect = experiments::expectation_from_string(r.string(prefix + ".expect", "none"));
        } catch (const ConfigError&) {
            throw;
        } catch (const InvalidArgument& e) {
            throw ConfigError(prefix + ".expect", e.what());
        }
        t.statement = r.string(prefix + ".statement", "");
        c.trends.push_back(t);
    }
    try {
        (void)c.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(c.family == experiments::Family::harmonic ? "harmonic" : "schrodinger", e.what());
    }
    return c;
}

inline experiments::AuditConfig audit_config(const Reader& r)
{
    experiments::AuditConfig c;
    try {
        c.family = experiments::family_from_string(r.string("family"));
    } catch (const ConfigError&) {
        throw;
    } catch (const InvalidArgument& e) {
        throw ConfigError("family", e.what());
    }
    if (c.family == experiments::Family::harmonic) {
        c.level = int(r.integer("audit.level"));
        c.cutoff_extra = int(r.integer("audit.cutoff_extra", c.cutoff_extra));
        c.points = r.integer("audit.points", 512);
        c.width_factor = r.number("audit.width_factor", c.width_factor);
    } else {
        c.hbar = r.number("audit.hbar");
        c.points = r.integer("audit.points", 256);
        c.half_width = r.number("audit.half_width", c.half_width);
        c.threshold = r.number("audit.threshold", 0.0);
        c.dim = int(r.integer("audit.dim", 1));
        c.potential = read_potential(r, "audit.potential");
    }
    c.options.quadrature = read_quadrature(r);
    c.options.phi_radius = r.number("audit.phi_radius", 0.0);
    return c;
}

} // namespace srl::config

#endif // SRL_CONFIG_HPP
