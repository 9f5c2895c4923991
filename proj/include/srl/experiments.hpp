#ifndef SRL_EXPERIMENTS_HPP
#define SRL_EXPERIMENTS_HPP

#include "srl/core.hpp"
#include "srl/fit.hpp"
#include "srl/fock.hpp"
#include "srl/grid.hpp"
#include "srl/norms.hpp"
#include "srl/phasespace.hpp"

#include <boost/math/special_functions/bessel.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace srl::experiments {

using grid::Grid;
using grid::GridOperator;
using norms::NormReport;
using norms::NormRequest;

inline constexpr double not_computed = std::numeric_limits<double>::quiet_NaN();

enum class Family { harmonic, schrodinger };

inline std::string to_string(Family f) { return f == Family::harmonic ? "harmonic" : "schrodinger"; }

inline Family family_from_string(const std::string& s)
{
    if (s == "harmonic")
        return Family::harmonic;
    if (s == "schrodinger")
        return Family::schrodinger;
    throw InvalidArgument("unknown family '" + s + "' (expected harmonic or schrodinger)");
}

/// What a trend row is expected to do across the sweep.
enum class Expectation {
    none,    ///< reported only
    bounded, ///< max/min <= 2
    growing, ///< fitted exponent <= -0.05 with R^2 >= 0.9
    stable   ///< every value within 25% of the median
};

inline std::string to_string(Expectation e)
{
    switch (e) {
    case Expectation::none: return "none";
    case Expectation::bounded: return "bounded";
    case Expectation::growing: return "growing";
    case Expectation::stable: return "stable";
    }
    return "none";
}

inline Expectation expectation_from_string(const std::string& s)
{
    for (Expectation e : {Expectation::none, Expectation::bounded, Expectation::growing, Expectation::stable})
        if (to_string(e) == s)
            return e;
    throw InvalidArgument("unknown expectation '" + s + "'");
}

struct TrendRequest {
    NormRequest norm;
    Expectation expect = Expectation::none;
    std::string statement; ///< the result this row instantiates, for the verdict
};

struct SweepConfig {
    Family family = Family::harmonic;
    std::string check = "sweep";

    // harmonic: levels n, hbar from N h^d = 1
    std::vector<int> levels{8, 16, 32, 64, 128};
    int cutoff_extra = 6; ///< K = n + cutoff_extra
    double width_factor = 2.0;

    // schrodinger
    std::vector<double> hbars{0.2, 0.1, 0.05, 0.025};
    grid::Potential potential = grid::Potential::harmonic_well();
    double threshold = 0.0;
    double half_width = 6.0;
    long refine_factor = 2;
    double omega_level = 0.0; ///< Omega = {x : U(x) > omega_level}

    int dim = 1;
    long points = 256;

    std::vector<NormRequest> norms;
    std::vector<TrendRequest> trends;
    std::optional<norms::QuadratureSpec> quadrature;

    bool gradient_checks = true; ///< harmonic only
    unsigned threads = 0;

    [[nodiscard]] std::size_t row_count() const { return family == Family::harmonic ? levels.size() : hbars.size(); }

    [[nodiscard]] std::vector<double> hbar_points() const
    {
        std::vector<double> out;
        if (family == Family::harmonic)
            for (int n : levels)
                out.push_back(fock::linked_hbar(n, dim));
        else
            out = hbars;
        return out;
    }

    /// Throws on unusable settings; returns warnings for weak ones.
    [[nodiscard]] std::vector<std::string> validate() const
    {
        std::vector<std::string> warnings;
        if (dim < 1)
            throw InvalidArgument("dim must be >= 1");
        if (family == Family::harmonic) {
            for (int n : levels)
                if (n < 0)
                    throw InvalidArgument("harmonic levels must be >= 0");
            if (cutoff_extra < 2)
                throw InvalidArgument("cutoff_extra must be >= 2");
        } else {
            for (double hb : hbars)
                if (!(hb > 0.0))
                    throw InvalidArgument("hbar values must be positive");
            if (!(half_width > 0.0))
                throw InvalidArgument("half_width must be positive");
        }
        for (const auto& r : norms)
            r.validate();
        for (const auto& t : trends) {
            t.norm.validate();
            if (t.norm.kind == norms::NormKind::commutator_exp)
                throw InvalidArgument("commutator_exp is a single-shot norm, not a sweep quantity");
        }
        if (row_count() < 3)
            throw InvalidArgument("a sweep needs at least 3 points");
        const auto hb = hbar_points();
        const double span = *std::max_element(hb.begin(), hb.end()) / *std::min_element(hb.begin(), hb.end());
        if (span < 10.0)
            warnings.push_back("sweep spans a factor " + std::to_string(span) + " in hbar, less than one decade");
        return warnings;
    }
};

struct SweepRow {
    double hbar = 0.0;
    long level = -1;
    long rank = 0;
    double trace = 0.0; ///< h^d Tr P
    double classical_volume = not_computed;
    double volume_deviation = not_computed;
    double husimi_l1 = not_computed;
    double husimi_l2 = not_computed;
    double tolerance_factor = 1.0;
    std::vector<std::pair<std::string, double>> values;
    std::vector<NormReport> norms;
    std::vector<std::string> flags;

    [[nodiscard]] double value(const std::string& name) const
    {
        for (const auto& [k, v] : values)
            if (k == name)
                return v;
        throw InvalidArgument("row has no quantity '" + name + "'");
    }
    void set(const std::string& name, double v)
    {
        for (auto& [k, old] : values)
            if (k == name) {
                old = v;
                return;
            }
        values.emplace_back(name, v);
    }
};

struct ExponentFit {
    std::string quantity;
    fit::LineFit line;
    bool conclusive = false; ///< R^2 >= 0.9
};

struct Verdict {
    std::string check;
    std::string statement; ///< the result being instantiated
    std::string outcome;   ///< pass, fail, bounded, growing, stable, inconclusive
    bool asserted = true;
    bool passed = true;
    double measured = not_computed;
    std::string detail;
};

struct SweepResult {
    Family family = Family::harmonic;
    std::string check;
    std::vector<SweepRow> rows;
    std::vector<ExponentFit> fits;
    std::vector<Verdict> verdicts;
    std::vector<std::string> warnings;

    [[nodiscard]] bool passed() const
    {
        return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return !v.asserted || v.passed; });
    }

    [[nodiscard]] const ExponentFit* find_fit(const std::string& q) const
    {
        for (const auto& f : fits)
            if (f.quantity == q)
                return &f;
        return nullptr;
    }

    [[nodiscard]] std::vector<double> column(const std::string& name) const
    {
        std::vector<double> out;
        for (const auto& r : rows)
            out.push_back(r.value(name));
        return out;
    }
};

//
// helpers
//

inline ExponentFit fit_exponent(const std::string& quantity, const std::vector<double>& hbar,
                                const std::vector<double>& values)
{
    ExponentFit f;
    f.quantity = quantity;
    f.line = fit::loglog(hbar, values);
    f.conclusive = f.line.r2 >= 0.9;
    return f;
}

inline double median(std::vector<double> v)
{
    if (v.empty())
        throw InvalidArgument("median of an empty list");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Number of i with v[i+1] >= v[i].
inline int inversions(const std::vector<double>& v)
{
    int k = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] < v[i - 1]))
            ++k;
    return k;
}

struct Classification {
    std::string outcome;
    double ratio = 0.0;
    ExponentFit fit;
};

/// growing takes precedence over bounded, then inconclusive.
inline Classification classify_trend(const std::string& quantity, const std::vector<double>& hbar,
                                     const std::vector<double>& values)
{
    Classification c;
    c.fit = fit_exponent(quantity, hbar, values);
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    c.ratio = *hi / *lo;
    if (c.fit.conclusive && c.fit.line.slope <= -0.05)
        c.outcome = "growing";
    else if (c.ratio <= 2.0)
        c.outcome = "bounded";
    else
        c.outcome = "inconclusive";
    return c;
}

inline std::string fmt(double v, int digits = 6)
{
    std::ostringstream o;
    o << std::setprecision(digits) << v;
    return o.str();
}

//
// operators for one sweep row
//

struct RowOperators {
    std::optional<fock::FockOperator> fock;
    std::optional<GridOperator> grid_op;
    std::optional<grid::SpectralProjection> projection;
};

inline int harmonic_cutoff(const SweepConfig& cfg, int n) { return n + cfg.cutoff_extra; }

inline GridOperator harmonic_grid_operator(const fock::FockOperator& p, int n, const SweepConfig& cfg)
{
    if (p.dim() != 1)
        throw InvalidArgument("harmonic grid operators are built for d = 1");
    const Grid g = fock::harmonic_grid(n, harmonic_cutoff(cfg, n), cfg.points, cfg.width_factor);
    return fock::fock_to_grid(p, g);
}

inline bool needs_grid(const SweepConfig& cfg)
{
    auto on_grid = [](const NormRequest& r) {
        return r.kind == norms::NormKind::besov || r.kind == norms::NormKind::frac_sobolev;
    };
    return std::any_of(cfg.norms.begin(), cfg.norms.end(), on_grid) ||
           std::any_of(cfg.trends.begin(), cfg.trends.end(), [&](const TrendRequest& t) { return on_grid(t.norm); });
}

/// Evaluate one norm; Fock algebra is preferred for Schatten and W^{1,p}.
inline NormReport evaluate_norm(const RowOperators& ops, const NormRequest& r, const norms::DifferenceSpectra* ds)
{
    switch (r.kind) {
    case norms::NormKind::schatten:
        if (ops.fock)
            return norms::schatten(*ops.fock, r.p);
        return norms::schatten(*ops.grid_op, r.p);
    case norms::NormKind::sobolev1:
        if (ops.fock)
            return norms::sobolev1(*ops.fock, r.p);
        return norms::sobolev1(*ops.grid_op, r.p);
    case norms::NormKind::besov:
        return norms::besov(*ds, r.s, r.p, r.q);
    case norms::NormKind::frac_sobolev:
        return norms::frac_sobolev(*ds, r.s, r.p);
    case norms::NormKind::commutator_exp:
        break;
    }
    throw InvalidArgument("norm kind not available in sweeps: " + norms::to_string(r.kind));
}

/// Override radii are in units of the grid spacing, so the shell count is fixed across a sweep.
inline norms::QuadratureSpec scaled_quadrature(const std::optional<norms::QuadratureSpec>& spec, const Grid& g)
{
    if (!spec)
        return norms::QuadratureSpec::for_grid(g);
    norms::QuadratureSpec q = *spec;
    q.r_min = spec->r_min * g.spacing();
    q.r_max = spec->r_max * g.spacing();
    return q;
}

inline norms::QuadratureSpec quadrature_for(const SweepConfig& cfg, const Grid& g)
{
    return scaled_quadrature(cfg.quadrature, g);
}

/// Norm requests and trend requests for a row, sharing one set of difference spectra.
inline void evaluate_row_norms(SweepRow& row, const RowOperators& ops, const SweepConfig& cfg)
{
    std::optional<norms::DifferenceSpectra> ds;
    bool need_first = false, need_second = false;
    auto scan = [&](const NormRequest& r) {
        need_first = need_first || r.kind == norms::NormKind::frac_sobolev;
        need_second = need_second || r.kind == norms::NormKind::besov;
    };
    for (const auto& r : cfg.norms)
        scan(r);
    for (const auto& t : cfg.trends)
        scan(t.norm);
    if (need_first || need_second) {
        const GridOperator& op = *ops.grid_op;
        ds = norms::difference_spectra(op, quadrature_for(cfg, op.grid()), need_first, need_second, 1);
    }
    const norms::DifferenceSpectra* dp = ds ? &*ds : nullptr;
    for (const auto& r : cfg.norms) {
        row.norms.push_back(evaluate_norm(ops, r, dp));
        row.set(r.label(), row.norms.back().value);
    }
    for (const auto& t : cfg.trends) {
        const std::string label = t.norm.label();
        bool have = false;
        for (const auto& [k, v] : row.values)
            have = have || k == label;
        if (have)
            continue;
        row.norms.push_back(evaluate_norm(ops, t.norm, dp));
        row.set(label, row.norms.back().value);
    }
}

//
// harmonic family
//

inline std::string gradient_label(GradientKind k, double p)
{
    std::string s = k == GradientKind::x ? "grad_x" : "grad_xi";
    return s + "_p" + (is_infinite_exponent(p) ? std::string("inf") : fmt(p));
}

inline SweepRow harmonic_row(const SweepConfig& cfg, int n)
{
    const int d = cfg.dim;
    SweepRow row;
    row.level = n;
    RowOperators ops;
    ops.fock = fock::harmonic_projection(n, d, harmonic_cutoff(cfg, n));
    const fock::FockOperator& p = *ops.fock;
    row.hbar = p.hbar();
    const double h = p.h();
    row.rank = long(std::llround(p.matrix.trace().real()));
    row.trace = std::pow(h, d) * double(row.rank);

    if (cfg.gradient_checks) {
        const fock::FockOperator gxi = fock::quantum_gradient(p, GradientKind::xi, 1);
        const fock::FockOperator gx = fock::quantum_gradient(p, GradientKind::x, 1);
        const RVector sxi = norms::singular_values(gxi.matrix);
        const RVector sx = norms::singular_values(gx.matrix);
        for (double q : {1.0, 2.0, infinity}) {
            const double exact = fock::gradient_xi_schatten_exact(n, d, q);
            const double mxi = norms::schatten_from_singular(sxi, q, h, d);
            const double mx = norms::schatten_from_singular(sx, q, h, d);
            const double dual = is_infinite_exponent(q) ? 1.0 : 1.0 - 1.0 / q;
            row.set(gradient_label(GradientKind::xi, q) + "_exact", exact);
            row.set(gradient_label(GradientKind::xi, q), mxi);
            row.set(gradient_label(GradientKind::x, q), mx);
            row.set("scaled_" + gradient_label(GradientKind::xi, q), mxi * std::pow(h, dual));
        }
    }
    if (needs_grid(cfg))
        ops.grid_op = harmonic_grid_operator(p, n, cfg);
    evaluate_row_norms(row, ops, cfg);
    return row;
}

inline void fit_all(SweepResult& res)
{
    if (res.rows.empty())
        return;
    std::vector<double> hb;
    for (const auto& r : res.rows)
        hb.push_back(r.hbar);
    for (const auto& [name, v0] : res.rows.front().values) {
        const auto col = res.column(name);
        if (std::all_of(col.begin(), col.end(), [](double v) { return v > 0.0 && std::isfinite(v); }))
            res.fits.push_back(fit_exponent(name, hb, col));
    }
}

inline void add_slope_verdict(SweepResult& res, const std::string& quantity, double expected, double tol,
                              const std::string& statement)
{
    Verdict v;
    v.check = "slope_" + quantity;
    v.statement = statement;
    const ExponentFit* f = res.find_fit(quantity);
    if (f && expected == 0.0) {
        const auto col = res.column(quantity);
        const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
        const double ratio = *hi / *lo;
        v.measured = f->line.slope;
        v.passed = std::abs(f->line.slope) <= tol && ratio <= 2.0;
        v.outcome = v.passed ? "pass" : "fail";
        v.detail = "slope " + fmt(f->line.slope, 8) + " (at most " + fmt(tol) + " in magnitude), max/min " + fmt(ratio, 6);
        res.verdicts.push_back(v);
        return;
    }
    if (!f || !f->conclusive) {
        v.outcome = "inconclusive";
        v.passed = false;
        v.detail = f ? "R^2 = " + fmt(f->line.r2) + " < 0.9" : "no fit";
        res.verdicts.push_back(v);
        return;
    }
    v.measured = f->line.slope;
    v.passed = std::abs(f->line.slope - expected) <= tol;
    v.outcome = v.passed ? "pass" : "fail";
    v.detail = "slope " + fmt(f->line.slope, 8) + ", expected " + fmt(expected) + " +- " + fmt(tol) + ", R^2 " +
               fmt(f->line.r2);
    res.verdicts.push_back(v);
}

inline void harmonic_gradient_verdicts(SweepResult& res, int d)
{
    double exact_err = 0.0, matrix_err = 0.0, x_vs_xi = 0.0, l1_max = 0.0, linf_excess = -infinity;
    const double dfact = std::tgamma(d + 1.0);
    const double l1_bound = 2.0 * d * std::sqrt(pi) / std::sqrt(dfact);
    for (const auto& r : res.rows) {
        const double target = 1.0 / std::sqrt(r.hbar);
        exact_err = std::max(exact_err, std::abs(r.value("grad_xi_p2_exact") - target) / target);
        matrix_err = std::max(matrix_err, std::abs(r.value("grad_xi_p2") - target) / target);
        for (double q : {1.0, 2.0, infinity}) {
            const double a = r.value(gradient_label(GradientKind::xi, q));
            const double b = r.value(gradient_label(GradientKind::x, q));
            x_vs_xi = std::max(x_vs_xi, std::abs(a - b) / a);
        }
        l1_max = std::max(l1_max, r.value("grad_xi_p1"));
        const double linf_bound = std::sqrt(std::pow(dfact, 1.0 / d) * pi) / planck_h(r.hbar);
        linf_excess = std::max(linf_excess, r.value("grad_xi_pinf") / linf_bound);
    }
    res.verdicts.push_back({"l2_law_exact", "L2 gradient law ||D_xi P||_2 = hbar^{-1/2} (closed form)",
                            exact_err <= 1e-10 ? "pass" : "fail", true, exact_err <= 1e-10, exact_err,
                            "max relative error " + fmt(exact_err, 3) + " (tolerance 1e-10)"});
    res.verdicts.push_back({"l2_law_matrix", "L2 gradient law ||D_xi P||_2 = hbar^{-1/2} (matrix path)",
                            matrix_err <= 1e-8 ? "pass" : "fail", true, matrix_err <= 1e-8, matrix_err,
                            "max relative error " + fmt(matrix_err, 3) + " (tolerance 1e-8)"});
    res.verdicts.push_back({"l1_bound", "L1 gradient bound ||D_xi P||_1 <= 2 d sqrt(pi) / sqrt(d!)",
                            l1_max <= l1_bound * (1 + 1e-12) ? "pass" : "fail", true, l1_max <= l1_bound * (1 + 1e-12),
                            l1_max, "max " + fmt(l1_max, 10) + " vs bound " + fmt(l1_bound, 10)});
    res.verdicts.push_back({"linf_bound", "Linf gradient bound ||D_xi P||_inf <= sqrt((d!)^{1/d} pi) / h",
                            linf_excess <= 1 + 1e-12 ? "pass" : "fail", true, linf_excess <= 1 + 1e-12, linf_excess,
                            "max value / bound " + fmt(linf_excess, 10)});
    res.verdicts.push_back({"x_equals_xi", "x-gradient norms equal xi-gradient norms",
                            x_vs_xi <= 1e-10 ? "pass" : "fail", true, x_vs_xi <= 1e-10, x_vs_xi,
                            "max relative difference " + fmt(x_vs_xi, 3)});
    add_slope_verdict(res, "grad_xi_p1", 0.0, 0.05, "L1 gradient norm bounded in hbar");
    add_slope_verdict(res, "grad_xi_p2", -0.5, 1e-3, "L2 gradient law exponent -1/2");
    add_slope_verdict(res, "grad_xi_pinf", -1.0, 0.05, "Linf gradient law C/h");
    add_slope_verdict(res, "grad_x_p1", 0.0, 0.05, "L1 x-gradient norm bounded in hbar");
    add_slope_verdict(res, "grad_x_p2", -0.5, 1e-3, "L2 x-gradient law exponent -1/2");
    add_slope_verdict(res, "grad_x_pinf", -1.0, 0.05, "Linf x-gradient law C/h");
}

inline void add_trend_verdicts(SweepResult& res, const SweepConfig& cfg);

inline SweepResult harmonic_sweep(const SweepConfig& cfg)
{
    if (cfg.family != Family::harmonic)
        throw InvalidArgument("harmonic_sweep needs family = harmonic");
    SweepResult res;
    res.family = cfg.family;
    res.check = cfg.check;
    res.warnings = cfg.validate();
    const std::size_t rows = cfg.levels.size();
    for (int n : cfg.levels) {
        const long k = ipow(harmonic_cutoff(cfg, n), cfg.dim);
        if (k > 20000)
            throw InvalidArgument("Fock dimension " + std::to_string(k) + " for n = " + std::to_string(n) +
                                  " exceeds the memory guard (20000)");
    }
    res.rows.resize(rows);
    parallel_for(rows, [&](std::size_t i) { res.rows[i] = harmonic_row(cfg, cfg.levels[i]); }, cfg.threads);
    fit_all(res);
    if (cfg.gradient_checks)
        harmonic_gradient_verdicts(res, cfg.dim);
    add_trend_verdicts(res, cfg);
    return res;
}

//
// Schrodinger family
//

/// Indicator of {|xi|^2 <= U(x)} sampled on the phase grid of g.
inline phasespace::PhaseField classical_indicator(const Grid& g, double hbar, const grid::Potential& u)
{
    const RVector us = u.sample(g);
    const phasespace::PhaseField base = phasespace::PhaseField::zeros(g, hbar);
    CMatrix v(g.size(), g.size());
    for (long c = 0; c < g.size(); ++c) {
        const auto p = base.momentum(c);
        double p2 = 0;
        for (double x : p)
            p2 += x * x;
        for (long r = 0; r < g.size(); ++r)
            v(r, c) = p2 <= us[r] ? 1.0 : 0.0;
    }
    return {g, hbar, std::move(v)};
}

/// (sum over x in Omega, all xi, |a - b|^p cell)^{1/p}.
inline double restricted_distance(const phasespace::PhaseField& a, const phasespace::PhaseField& b,
                                  const std::vector<bool>& omega, double p)
{
    a.check_compatible(b);
    double s = 0.0;
    for (long c = 0; c < a.values().cols(); ++c)
        for (long r = 0; r < a.values().rows(); ++r)
            if (omega[std::size_t(r)])
                s += std::pow(std::abs(a.values()(r, c) - b.values()(r, c)), p);
    return std::pow(s * a.cell(), 1.0 / p);
}

inline SweepRow schrodinger_row(const SweepConfig& cfg, double hbar, double volume, bool with_husimi)
{
    SweepRow row;
    row.hbar = hbar;
    const Grid g(cfg.half_width, cfg.points, cfg.dim);
    const grid::Potential u = cfg.potential.resolved_for(g);
    RowOperators ops;
    ops.projection = grid::spectral_projection(grid::schrodinger_hamiltonian(g, u, hbar), cfg.threshold);
    const auto& sp = *ops.projection;
    ops.grid_op = sp.projector;
    row.rank = sp.rank;
    row.trace = std::pow(planck_h(hbar), cfg.dim) * double(sp.rank);
    row.flags = sp.warnings;
    if (sp.near_threshold > 0)
        row.tolerance_factor = 2.0;
    row.classical_volume = volume;
    row.volume_deviation = std::abs(row.trace - volume);
    row.set("weyl_relative_error", volume > 0 ? row.volume_deviation / volume : row.volume_deviation);

    if (with_husimi) {
        const GridOperator fine_op = cfg.dim == 1 && cfg.refine_factor > 1 ? grid::refine(sp.projector, cfg.refine_factor)
                                                                           : sp.projector;
        const Grid& fg = fine_op.grid();
        const phasespace::PhaseField hus = phasespace::husimi(fine_op);
        const phasespace::PhaseField ind = classical_indicator(fg, hbar, u);
        const RVector us = u.sample(fg);
        std::vector<bool> omega(std::size_t(fg.size()));
        for (long r = 0; r < fg.size(); ++r)
            omega[std::size_t(r)] = us[r] > cfg.omega_level;
        row.husimi_l1 = restricted_distance(hus, ind, omega, 1.0);
        row.husimi_l2 = restricted_distance(hus, ind, omega, 2.0);
    }
    evaluate_row_norms(row, ops, cfg);
    return row;
}

inline SweepResult schrodinger_rows(const SweepConfig& cfg, bool with_husimi)
{
    if (cfg.family != Family::schrodinger)
        throw InvalidArgument("this sweep needs family = schrodinger");
    SweepResult res;
    res.family = cfg.family;
    res.check = cfg.check;
    res.warnings = cfg.validate();
    const Grid g(cfg.half_width, cfg.points, cfg.dim);
    const grid::PhaseVolume vol = grid::classical_phase_volume(cfg.potential, cfg.dim, 1e-8, g);
    if (!vol.converged)
        res.warnings.push_back("classical phase volume quadrature did not reach tolerance");
    res.rows.resize(cfg.hbars.size());
    parallel_for(cfg.hbars.size(),
                 [&](std::size_t i) { res.rows[i] = schrodinger_row(cfg, cfg.hbars[i], vol.value, with_husimi); },
                 cfg.threads);
    for (const auto& r : res.rows)
        for (const auto& f : r.flags)
            res.warnings.push_back("hbar " + fmt(r.hbar) + ": " + f);
    return res;
}

inline SweepResult weyl_law_sweep(const SweepConfig& cfg)
{
    SweepResult res = schrodinger_rows(cfg, true);
    fit_all(res);
    if (res.rows.empty())
        return res;

    const SweepRow& last = res.rows.back();
    const double vol = last.classical_volume;
    if (vol <= 0.0) {
        const bool zero = std::all_of(res.rows.begin(), res.rows.end(), [](const SweepRow& r) { return r.rank == 0; });
        res.verdicts.push_back({"empty_projection", "Weyl law with U <= 0: no bound states", zero ? "pass" : "fail",
                                true, zero, 0.0, zero ? "all ranks zero" : "nonzero rank with U <= 0"});
        return res;
    }
    const double tol = 0.03 * last.tolerance_factor;
    const double rel = last.volume_deviation / vol;
    res.verdicts.push_back({"weyl_final", "Weyl law h^d N -> classical phase volume (final row)",
                            rel <= tol ? "pass" : "fail", true, rel <= tol, rel,
                            "relative error " + fmt(rel, 4) + " at hbar " + fmt(last.hbar) + " (tolerance " + fmt(tol) + ")"});

    std::vector<double> dev, l1, l2;
    for (const auto& r : res.rows) {
        dev.push_back(r.volume_deviation);
        l1.push_back(r.husimi_l1);
        l2.push_back(r.husimi_l2);
    }
    auto series = [](const std::vector<double>& v) {
        std::string s;
        for (double x : v)
            s += (s.empty() ? "" : ", ") + fmt(x, 4);
        return s;
    };
    const int inv_dev = inversions(dev);
    res.verdicts.push_back({"weyl_decreasing", "Weyl law deviation strictly decreasing along the sweep",
                            inv_dev == 0 ? "pass" : "fail", true, inv_dev == 0, double(inv_dev),
                            "deviations " + series(dev)});
    const int inv1 = inversions(l1);
    res.verdicts.push_back({"husimi_l1", "Husimi transform -> classical indicator in L1(Omega)",
                            inv1 <= 1 ? "pass" : "fail", true, inv1 <= 1, double(inv1),
                            "distances " + series(l1) + " (" + std::to_string(inv1) + " inversion(s), at most 1)"});
    const int inv2 = inversions(l2);
    res.verdicts.push_back({"husimi_l2", "Husimi transform -> classical indicator in L2(Omega)",
                            inv2 <= 1 ? "pass" : "fail", true, inv2 <= 1, double(inv2),
                            "distances " + series(l2) + " (" + std::to_string(inv2) + " inversion(s), at most 1)"});
    add_trend_verdicts(res, cfg);
    return res;
}

//
// regularity trends
//

inline void add_trend_verdicts(SweepResult& res, const SweepConfig& cfg)
{
    if (res.rows.empty())
        return;
    std::vector<double> hb;
    for (const auto& r : res.rows)
        hb.push_back(r.hbar);
    for (const auto& t : cfg.trends) {
        const std::string label = t.norm.label();
        const auto vals = res.column(label);
        Verdict v;
        v.check = "trend_" + label;
        v.statement = t.statement.empty() ? label : t.statement;
        v.asserted = t.expect != Expectation::none;
        if (t.expect == Expectation::stable) {
            const double med = median(vals);
            double worst = 0.0;
            for (double x : vals)
                worst = std::max(worst, std::abs(x - med) / med);
            v.measured = worst;
            v.outcome = worst <= 0.25 ? "stable" : "unstable";
            v.passed = worst <= 0.25;
            v.detail = "max deviation from median " + fmt(worst, 4) + " (at most 0.25)";
        } else {
            const Classification c = classify_trend(label, hb, vals);
            v.outcome = c.outcome;
            v.measured = c.fit.line.slope;
            v.passed = t.expect == Expectation::none || c.outcome == to_string(t.expect);
            v.detail = "exponent " + fmt(c.fit.line.slope, 4) + ", R^2 " + fmt(c.fit.line.r2, 4) + ", max/min " +
                       fmt(c.ratio, 4) + ", expected " + to_string(t.expect);
        }
        res.verdicts.push_back(v);
    }
}

inline SweepResult regularity_trend(const SweepConfig& cfg)
{
    if (cfg.trends.empty())
        throw InvalidArgument("regularity_trend needs at least one trend request");
    if (cfg.family == Family::harmonic) {
        SweepConfig c = cfg;
        c.gradient_checks = false;
        return harmonic_sweep(c);
    }
    SweepResult res = schrodinger_rows(cfg, false);
    fit_all(res);
    add_trend_verdicts(res, cfg);
    return res;
}

/// Single trend (s, p, q) with the Besov classification.
inline SweepResult regularity_trend(SweepConfig cfg, double s, double p, double q, Expectation expect = Expectation::none)
{
    NormRequest r;
    r.kind = norms::NormKind::besov;
    r.s = s;
    r.p = p;
    r.q = q;
    cfg.trends = {{r, expect, {}}};
    return regularity_trend(cfg);
}

//
// inequality audit
//

struct AuditItem {
    std::string name;
    std::string statement;
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0; ///< rhs - lhs
    bool passed = false;
};

struct AuditReport {
    std::string subject;
    double hbar = 0.0;
    std::vector<AuditItem> items;
    [[nodiscard]] bool passed() const
    {
        return std::all_of(items.begin(), items.end(), [](const AuditItem& i) { return i.passed; });
    }
};

struct AuditOptions {
    std::optional<norms::QuadratureSpec> quadrature; ///< radii in grid spacings
    double phi_radius = 0.0;                         ///< 0 means L/4
};

/// Rounding allowance for inequalities that are equalities for positive operators.
inline constexpr double audit_rounding = 1e-9;

inline AuditItem make_item(std::string name, std::string statement, double lhs, double rhs)
{
    AuditItem it{std::move(name), std::move(statement), lhs, rhs, rhs - lhs, false};
    it.passed = lhs <= rhs + audit_rounding * std::max(std::abs(rhs), 1e-300);
    return it;
}

/// Truncated ||.||_{B^s_{p,q}} that also accepts s = 0.
inline double besov_value(const norms::DifferenceSpectra& ds, double s, double p, double q)
{
    return norms::lq_aggregate(norms::besov_ratios(ds, s, p), ds.set, q);
}

/// Smooth bump phi(x) = exp(1 - 1/(1 - |x|^2/R^2)).
inline double bump_profile(double r, double radius)
{
    const double t2 = (r * r) / (radius * radius);
    return t2 < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - t2)) : 0.0;
}

/// 2 pi (integral |phi^(eta)| |eta|^{1/2} d eta)^2 for the radial bump in R^d,
/// with phi^(eta) = integral phi(x) e^{-2 pi i x.eta} dx.
inline double half_derivative_constant(double radius, int d)
{
    // phi^ is radial: 2 pi rho^{1-d/2} int_0^R phi(r) J_{d/2-1}(2 pi rho r) r^{d/2} dr
    constexpr int intervals = 2048;
    const double dr = radius / intervals;
    std::vector<double> r(intervals + 1), w(intervals + 1);
    for (int i = 0; i <= intervals; ++i) {
        r[std::size_t(i)] = i * dr;
        const double simpson = (i == 0 || i == intervals) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        w[std::size_t(i)] = simpson * dr / 3.0 * bump_profile(i * dr, radius);
    }
    using no_promote = boost::math::policies::policy<boost::math::policies::promote_double<false>>;
    const double nu = 0.5 * d - 1.0;
    auto fourier = [&](double rho) {
        double acc = 0.0;
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (w[i] == 0.0)
                continue;
            const double arg = 2.0 * pi * rho * r[i];
            acc += w[i] * (d == 1 ? 2.0 * std::cos(arg)
                                  : 2.0 * pi * std::pow(rho, 1.0 - 0.5 * d) *
                                        boost::math::cyl_bessel_j(nu, arg, no_promote()) * std::pow(r[i], 0.5 * d));
        }
        return acc;
    };
    // |phi^| decays like exp(-c sqrt(rho R)); below 1e-9 of its peak by rho R = 80
    const double step = 1.0 / (128.0 * radius);
    const long count = long(std::ceil(80.0 / radius / step));
    double sum = 0.0;
    for (long k = 1; k <= count; ++k) {
        const double rho = double(k) * step;
        sum += (k == count ? 0.5 : 1.0) * std::abs(fourier(rho)) * std::pow(rho, d - 0.5);
    }
    const double integral = norms::sphere_area(d) * sum * step;
    return 2.0 * pi * integral * integral;
}

inline AuditReport inequality_audit(const GridOperator& op, const std::string& subject, const AuditOptions& opts = {})
{
    const Grid& g = op.grid();
    const int d = g.dim();
    const double hbar = op.hbar();
    const double h = op.h();
    const double scale = std::max(1.0, op.weighted().cwiseAbs().maxCoeff());
    if (hermitian_defect(op.weighted()) > 1e-10 * scale)
        throw InvalidArgument("inequality audit needs a Hermitian operator");
    AuditReport rep;
    rep.subject = subject;
    rep.hbar = hbar;

    const norms::QuadratureSpec spec = scaled_quadrature(opts.quadrature, g);
    const norms::DifferenceSpectra ds = norms::difference_spectra(op, spec, false, true);

    // interpolation between (s0, p0, q0) and (s1, p1, q1) at theta = 1/2
    struct Triple {
        double s, p, q;
    };
    auto inv = [](double v) { return is_infinite_exponent(v) ? 0.0 : 1.0 / v; };
    auto mid = [&](Triple a, Triple b) {
        const double ip = 0.5 * (inv(a.p) + inv(b.p));
        const double iq = 0.5 * (inv(a.q) + inv(b.q));
        return Triple{0.5 * (a.s + b.s), ip == 0.0 ? infinity : 1.0 / ip, iq == 0.0 ? infinity : 1.0 / iq};
    };
    for (const auto& [a, b] : {std::pair{Triple{0.0, infinity, infinity}, Triple{1.0, 1.0, infinity}},
                               std::pair{Triple{0.25, 4.0, 4.0}, Triple{0.75, 4.0 / 3.0, 2.0}}}) {
        const Triple m = mid(a, b);
        const double lhs = besov_value(ds, m.s, m.p, m.q);
        const double rhs = std::sqrt(besov_value(ds, a.s, a.p, a.q) * besov_value(ds, b.s, b.p, b.q));
        rep.items.push_back(make_item("interpolation_s" + fmt(m.s) + "_p" + fmt(m.p) + "_q" + fmt(m.q),
                                      "Besov interpolation B^{s_t}_{p_t,q_t} <= B0^{1-t} B1^t at t = 1/2", lhs, rhs));
    }

    // comparison B^1_{p,inf} <= 2 W^{1,p}
    for (double p : {1.0, 2.0}) {
        const double lhs = besov_value(ds, 1.0, p, infinity);
        const double rhs = 2.0 * norms::sobolev1(op, p).value;
        rep.items.push_back(make_item("comparison_p" + fmt(p), "Besov-Sobolev comparison B^1_{p,inf} <= 2 W^{1,p}", lhs, rhs));
    }

    // Husimi and Wick contraction
    const phasespace::PhaseField hus = phasespace::husimi(op);
    const GridOperator wick = phasespace::wick_quantize(hus);
    for (double p : {1.0, 2.0, infinity}) {
        rep.items.push_back(make_item("husimi_contraction_p" + fmt(p), "Husimi contraction ||f~_op||_{L^p} <= ||op||_{L^p}",
                                      hus.lp_norm(p), norms::schatten(op, p).value));
        rep.items.push_back(make_item("wick_contraction_p" + fmt(p), "Wick contraction ||Op~_f||_{L^p} <= ||f||_{L^p}",
                                      norms::schatten(wick, p).value, hus.lp_norm(p)));
    }

    // product defect with f = g = Husimi of op
    {
        const phasespace::PhaseField f2(g, hbar, hus.values().cwiseProduct(hus.values()));
        const GridOperator wick_f2 = phasespace::wick_quantize(f2);
        const GridOperator defect = wick * wick - wick_f2;
        const phasespace::PhaseField grad = phasespace::gradient_magnitude(hus);
        for (double p : {2.0, 4.0}) {
            const double lhs = norms::schatten(defect, 0.5 * p).value;
            const double gp = grad.lp_norm(p);
            const double rhs = std::pow(2.0, d + 1) * d * hbar * gp * gp;
            rep.items.push_back(make_item("product_defect_p" + fmt(p),
                                          "Wick product defect ||Op~_f Op~_f - Op~_{f^2}||_{L^{p/2}} <= 2^{d+1} d hbar ||grad f||_{L^p}^2",
                                          lhs, rhs));
        }
    }

    // variance bound with a smooth bump phi
    {
        const double radius = opts.phi_radius > 0.0 ? opts.phi_radius : g.half_width() / 4.0;
        const long n = g.size();
        RVector phi(n);
        for (long j = 0; j < n; ++j) {
            const auto x = g.coordinates(j);
            double r2 = 0;
            for (double v : x)
                r2 += v * v;
            phi[j] = bump_profile(std::sqrt(r2), radius);
        }
        const CMatrix w = op.weighted();
        const CMatrix comm = phi.cast<Complex>().asDiagonal() * w - w * phi.cast<Complex>().asDiagonal();
        const double lhs = std::pow(h, d) * comm.squaredNorm();
        const double b = besov_value(ds, 0.5, 2.0, infinity);
        const double rhs = hbar * half_derivative_constant(radius, d) * b * b;
        rep.items.push_back(make_item("variance_bound", "variance bound h^d Tr|[phi, op]|^2 <= hbar ||phi||_{H^1/2} B^{1/2}_{2,inf}^2",
                                      lhs, rhs));
    }
    return rep;
}

/// Subject of an audit: a harmonic projector on its grid or a Schrodinger projection.
struct AuditConfig {
    Family family = Family::harmonic;
    int level = 16;
    int cutoff_extra = 6;
    double width_factor = 2.0;
    long points = 512;
    double hbar = 0.05;
    double half_width = 6.0;
    grid::Potential potential = grid::Potential::bump();
    double threshold = 0.0;
    int dim = 1;
    AuditOptions options;
};

inline GridOperator audit_operator(const AuditConfig& cfg)
{
    if (cfg.family == Family::harmonic) {
        if (cfg.dim != 1)
            throw InvalidArgument("harmonic audits run on d = 1 grids");
        const int k = cfg.level + cfg.cutoff_extra;
        const fock::FockOperator p = fock::harmonic_projection(cfg.level, 1, k);
        return fock::fock_to_grid(p, fock::harmonic_grid(cfg.level, k, cfg.points, cfg.width_factor));
    }
    const Grid g(cfg.half_width, cfg.points, cfg.dim);
    return grid::spectral_projection(grid::schrodinger_hamiltonian(g, cfg.potential, cfg.hbar), cfg.threshold).projector;
}

inline AuditReport audit_family(const AuditConfig& cfg)
{
    return inequality_audit(audit_operator(cfg), to_string(cfg.family), cfg.options);
}

//
// output
//

inline std::string timestamp_utc()
{
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream o;
    o << std::put_time(&tm, "%Y%m%dT%H%M%SZ");
    return o.str();
}

inline std::string csv_number(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    std::ostringstream o;
    o << std::setprecision(17) << v;
    return o.str();
}

inline std::vector<std::string> result_columns(const SweepResult& res)
{
    std::vector<std::string> cols{"hbar",     "level",       "rank",      "trace", "classical_volume",
                                  "volume_deviation", "husimi_l1", "husimi_l2"};
    if (!res.rows.empty())
        for (const auto& [k, v] : res.rows.front().values)
            cols.push_back(k);
    return cols;
}

inline void write_sweep_csv(const SweepResult& res, const std::string& path)
{
    std::ofstream out(path);
    if (!out)
        throw InvalidArgument("cannot write " + path);
    const auto cols = result_columns(res);
    out << "# columns:";
    for (const auto& c : cols)
        out << ' ' << c;
    out << '\n';
    for (std::size_t i = 0; i < cols.size(); ++i)
        out << (i ? "," : "") << cols[i];
    out << '\n';
    for (const auto& r : res.rows) {
        out << csv_number(r.hbar) << ',' << r.level << ',' << r.rank << ',' << csv_number(r.trace) << ','
            << csv_number(r.classical_volume) << ',' << csv_number(r.volume_deviation) << ','
            << csv_number(r.husimi_l1) << ',' << csv_number(r.husimi_l2);
        for (std::size_t i = 8; i < cols.size(); ++i)
            out << ',' << csv_number(r.value(cols[i]));
        out << '\n';
    }
}

inline nlohmann::json json_number(double v)
{
    if (std::isnan(v))
        return nullptr;
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    return v;
}

inline nlohmann::json to_json(const Verdict& v)
{
    return {{"check", v.check},       {"statement", v.statement}, {"outcome", v.outcome},
            {"asserted", v.asserted}, {"passed", v.passed},       {"measured", json_number(v.measured)},
            {"detail", v.detail}};
}

inline nlohmann::json to_json(const SweepResult& res)
{
    nlohmann::json j;
    j["family"] = to_string(res.family);
    j["check"] = res.check;
    j["passed"] = res.passed();
    j["warnings"] = res.warnings;
    j["verdicts"] = nlohmann::json::array();
    for (const auto& v : res.verdicts)
        j["verdicts"].push_back(to_json(v));
    j["fits"] = nlohmann::json::array();
    for (const auto& f : res.fits)
        j["fits"].push_back({{"quantity", f.quantity},
                             {"slope", json_number(f.line.slope)},
                             {"r2", json_number(f.line.r2)},
                             {"conclusive", f.conclusive}});
    j["rows"] = nlohmann::json::array();
    for (const auto& r : res.rows) {
        nlohmann::json row{{"hbar", r.hbar}, {"level", r.level}, {"rank", r.rank}, {"trace", r.trace}, {"flags", r.flags}};
        for (const auto& n : r.norms)
            row["norms"].push_back(n.to_json());
        j["rows"].push_back(row);
    }
    return j;
}

inline nlohmann::json to_json(const AuditReport& rep)
{
    nlohmann::json j{{"subject", rep.subject}, {"hbar", rep.hbar}, {"passed", rep.passed()}};
    j["items"] = nlohmann::json::array();
    for (const auto& it : rep.items)
        j["items"].push_back({{"name", it.name},
                              {"statement", it.statement},
                              {"lhs", json_number(it.lhs)},
                              {"rhs", json_number(it.rhs)},
                              {"slack", json_number(it.slack)},
                              {"passed", it.passed}});
    return j;
}

struct WrittenFiles {
    std::string csv;
    std::string json;
};

/// <family>_<check>_<timestamp>.csv plus the matching .json verdict summary.
inline WrittenFiles write_sweep(const SweepResult& res, const std::string& dir, const std::string& stamp = timestamp_utc())
{
    std::filesystem::create_directories(dir);
    const std::string base = (std::filesystem::path(dir) / (to_string(res.family) + "_" + res.check + "_" + stamp)).string();
    WrittenFiles w{base + ".csv", base + ".json"};
    write_sweep_csv(res, w.csv);
    std::ofstream(w.json) << to_json(res).dump(2) << '\n';
    return w;
}

inline WrittenFiles write_audit(const AuditReport& rep, const std::string& dir, const std::string& stamp = timestamp_utc())
{
    std::filesystem::create_directories(dir);
    const std::string base = (std::filesystem::path(dir) / (rep.subject + "_audit_" + stamp)).string();
    WrittenFiles w{base + ".csv", base + ".json"};
    std::ofstream out(w.csv);
    if (!out)
        throw InvalidArgument("cannot write " + w.csv);
    out << "# columns: name lhs rhs slack passed\nname,lhs,rhs,slack,passed\n";
    for (const auto& it : rep.items)
        out << it.name << ',' << csv_number(it.lhs) << ',' << csv_number(it.rhs) << ',' << csv_number(it.slack) << ','
            << (it.passed ? 1 : 0) << '\n';
    std::ofstream(w.json) << to_json(rep).dump(2) << '\n';
    return w;
}

} // namespace srl::experiments

#endif // SRL_EXPERIMENTS_HPP
