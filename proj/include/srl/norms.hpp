#ifndef SRL_NORMS_HPP
#define SRL_NORMS_HPP

#include "srl/core.hpp"
#include "srl/fock.hpp"
#include "srl/grid.hpp"
#include "srl/phasespace.hpp"

#include <json.hpp>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <string>
#include <vector>

namespace srl::norms {

using grid::Grid;
using grid::GridOperator;
using phasespace::PhasePoint;

enum class NormKind { schatten, sobolev1, frac_sobolev, besov, commutator_exp };

inline std::string to_string(NormKind k)
{
    switch (k) {
    case NormKind::schatten: return "schatten";
    case NormKind::sobolev1: return "sobolev1";
    case NormKind::frac_sobolev: return "frac_sobolev";
    case NormKind::besov: return "besov";
    case NormKind::commutator_exp: return "commutator_exp";
    }
    return "unknown";
}

inline NormKind norm_kind_from_string(const std::string& s)
{
    for (NormKind k : {NormKind::schatten, NormKind::sobolev1, NormKind::frac_sobolev, NormKind::besov, NormKind::commutator_exp})
        if (to_string(k) == s)
            return k;
    throw InvalidArgument("unknown norm kind '" + s + "'");
}

/// Shells r_min * rho^i up to r_max, a fixed set of directions per shell, each
/// sample snapped to a translation-compatible phase point.
struct QuadratureSpec {
    double r_min = 0.0;
    double r_max = 0.0;
    double rho = std::pow(2.0, 0.25);
    int directions = 8;

    /// r_min = 2 dx, r_max = L/4.
    static QuadratureSpec for_grid(const Grid& g)
    {
        QuadratureSpec q;
        q.r_min = 2.0 * g.spacing();
        q.r_max = g.half_width() / 4.0;
        return q;
    }

    [[nodiscard]] int shells() const
    {
        if (!(r_min > 0.0) || !(r_max > r_min) || !(rho > 1.0))
            throw InvalidArgument("quadrature needs 0 < r_min < r_max and rho > 1");
        return int(std::floor(std::log(r_max / r_min) / std::log(rho) + 1e-9)) + 1;
    }
};

struct QuadratureSample {
    PhasePoint z;
    double radius = 0.0; ///< |z| after snapping
    double weight = 0.0; ///< weight for the measure dz / |z|^{2d}
};

struct SampleSet {
    std::vector<QuadratureSample> samples;
    long dropped = 0; ///< 2z outside the box, or snapped to the origin
    QuadratureSpec spec;
};

inline double sphere_area(int dim_total)
{
    // |S^{n-1}| = 2 pi^{n/2} / Gamma(n/2)
    return 2.0 * std::pow(pi, 0.5 * dim_total) / std::tgamma(0.5 * dim_total);
}

inline SampleSet make_samples(const Grid& g, double hbar, const QuadratureSpec& spec)
{
    const int d = g.dim();
    const double dx = g.spacing();
    const double dk = phasespace::compatible_xi_step(g, hbar);
    const double xi_box = pi * hbar / dx;
    SampleSet out;
    out.spec = spec;
    const int shells = spec.shells();

    // direction list in R^{2d}: for d = 1 equally spaced angles, else +-axes
    std::vector<std::vector<double>> dirs;
    if (d == 1) {
        for (int k = 0; k < spec.directions; ++k) {
            const double t = 2.0 * pi * k / spec.directions;
            dirs.push_back({std::cos(t), std::sin(t)});
        }
    } else {
        for (int a = 0; a < 2 * d; ++a)
            for (double sgn : {1.0, -1.0}) {
                std::vector<double> e(std::size_t(2 * d), 0.0);
                e[std::size_t(a)] = sgn;
                dirs.push_back(e);
            }
    }
    const double weight = std::log(spec.rho) * sphere_area(2 * d) / double(dirs.size());

    for (int i = 0; i < shells; ++i) {
        const double r = spec.r_min * std::pow(spec.rho, i);
        for (const auto& e : dirs) {
            PhasePoint z;
            bool zero = true, outside = false;
            for (int a = 0; a < d; ++a) {
                const double x0 = std::round(r * e[std::size_t(a)] / dx) * dx;
                const double k0 = std::round(r * e[std::size_t(d + a)] / dk) * dk;
                z.x.push_back(x0);
                z.xi.push_back(k0);
                zero = zero && x0 == 0.0 && k0 == 0.0;
                outside = outside || std::abs(2.0 * x0) > g.half_width() || std::abs(2.0 * k0) > xi_box;
            }
            if (zero || outside) {
                ++out.dropped;
                continue;
            }
            out.samples.push_back({z, z.norm(), weight});
        }
    }
    if (out.samples.empty())
        throw InvalidArgument("quadrature sample set is empty");
    return out;
}

struct NormReport {
    std::string kind;
    double value = 0.0;
    double p = 2.0;
    double q = infinity;
    double s = 0.0;
    double hbar = 0.0;
    double gamma = 1.0;
    long samples = 0;
    long dropped = 0;
    double r_min = 0.0;
    double r_max = 0.0;
    bool truncated = false;
    std::vector<std::string> flags;

    [[nodiscard]] nlohmann::json to_json() const
    {
        auto num = [](double v) -> nlohmann::json {
            if (std::isinf(v))
                return v > 0 ? "inf" : "-inf";
            return v;
        };
        nlohmann::json j;
        j["kind"] = kind;
        j["value"] = num(value);
        j["p"] = num(p);
        j["q"] = num(q);
        j["s"] = s;
        j["hbar"] = hbar;
        j["gamma"] = gamma;
        j["samples"] = samples;
        j["dropped"] = dropped;
        j["r_min"] = r_min;
        j["r_max"] = r_max;
        j["truncated"] = truncated;
        j["flags"] = flags;
        return j;
    }
};

//
// singular values
//

/// h^{d/p} (sum sigma^p)^{1/p}; p = inf gives sigma_max.
inline double schatten_from_singular(const RVector& sigma, double p, double h, int d)
{
    if (!(p >= 1.0))
        throw InvalidArgument("Schatten exponent must be >= 1");
    if (sigma.size() == 0)
        return 0.0;
    if (is_infinite_exponent(p))
        return sigma.cwiseAbs().maxCoeff();
    double sum = 0.0;
    for (long i = 0; i < sigma.size(); ++i)
        sum += std::pow(std::abs(sigma[i]), p);
    return std::pow(std::pow(h, d) * sum, 1.0 / p);
}

/// Singular values of a dense matrix; Hermitian input goes through the eigensolver.
inline RVector singular_values(const CMatrix& a)
{
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    if (hermitian_defect(a) <= 1e-13 * scale) {
        Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (a + a.adjoint()), Eigen::EigenvaluesOnly);
        if (es.info() != Eigen::Success)
            throw NumericalFailure("eigensolver did not converge");
        return es.eigenvalues().cwiseAbs();
    }
    Eigen::BDCSVD<CMatrix> svd(a);
    return svd.singularValues();
}

/// Eigenvalues of U C U^H through U = QR, i.e. the spectrum of R C R^H.
inline RVector lowrank_eigenvalues(const CMatrix& u, const CMatrix& core)
{
    const long k = std::min(u.rows(), u.cols());
    Eigen::HouseholderQR<CMatrix> qr(u);
    const CMatrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    const CMatrix small = r * core * r.adjoint();
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (small + small.adjoint()), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw NumericalFailure("eigensolver did not converge");
    return es.eigenvalues();
}

/// Singular values of the weighted matrix of op (low-rank route when factored).
inline RVector operator_singular_values(const GridOperator& op)
{
    if (const grid::SpectralFactor* f = op.factor()) {
        return lowrank_eigenvalues(f->vectors, f->weights.cast<Complex>().asDiagonal().toDenseMatrix()).cwiseAbs();
    }
    return singular_values(op.weighted());
}

inline NormReport schatten(const GridOperator& op, double p)
{
    NormReport r;
    r.kind = "schatten";
    r.p = p;
    r.hbar = op.hbar();
    r.value = schatten_from_singular(operator_singular_values(op), p, op.h(), op.grid().dim());
    return r;
}

/// Fock operators are already in an orthonormal basis; interior_only drops the
/// outer layer that a ladder step leaves.
inline NormReport schatten(const fock::FockOperator& op, double p, bool interior_only = false)
{
    NormReport r;
    r.kind = "schatten";
    r.p = p;
    r.hbar = op.hbar();
    const CMatrix m = interior_only ? op.interior_block() : op.matrix;
    r.value = schatten_from_singular(singular_values(m), p, op.h(), op.dim());
    if (interior_only)
        r.flags.push_back("outer Fock layer excluded");
    return r;
}

//
// W^{1,p}
//

inline RVector gradient_modulus_spectrum(const std::vector<CMatrix>& components)
{
    CMatrix sum = CMatrix::Zero(components.front().rows(), components.front().cols());
    for (const auto& g : components)
        sum += g.adjoint() * g;
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (sum + sum.adjoint()), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw NumericalFailure("eigensolver did not converge");
    return es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
}

/// Scaled Schatten norm of |grad op| = (sum_i |grad_{x_i} op|^2 + |grad_{xi_i} op|^2)^{1/2}.
inline NormReport sobolev1(const GridOperator& op, double p)
{
    std::vector<CMatrix> comps;
    for (int a = 1; a <= op.grid().dim(); ++a)
        for (GradientKind k : {GradientKind::x, GradientKind::xi})
            comps.push_back(grid::quantum_gradient(op, k, a).weighted());
    NormReport r;
    r.kind = "sobolev1";
    r.p = p;
    r.hbar = op.hbar();
    r.value = schatten_from_singular(gradient_modulus_spectrum(comps), p, op.h(), op.grid().dim());
    return r;
}

inline NormReport sobolev1(const fock::FockOperator& op, double p)
{
    std::vector<CMatrix> comps;
    for (int a = 1; a <= op.dim(); ++a)
        for (GradientKind k : {GradientKind::x, GradientKind::xi})
            comps.push_back(fock::quantum_gradient(op, k, a).interior_block());
    NormReport r;
    r.kind = "sobolev1";
    r.p = p;
    r.hbar = op.hbar();
    r.value = schatten_from_singular(gradient_modulus_spectrum(comps), p, op.h(), op.dim());
    r.flags.push_back("outer Fock layer excluded");
    return r;
}

//
// translated differences
//

/// Singular values of T_z op - op and T_{2z} op - 2 T_z op + op at every sample.
struct DifferenceSpectra {
    SampleSet set;
    std::vector<RVector> first;
    std::vector<RVector> second;
    double hbar = 0.0;
    int dim = 1;
};

inline DifferenceSpectra difference_spectra(const GridOperator& op, const SampleSet& set, bool need_first = true,
                                            bool need_second = true, unsigned threads = 0)
{
    DifferenceSpectra out;
    out.set = set;
    out.hbar = op.hbar();
    out.dim = op.grid().dim();
    const std::size_t n = set.samples.size();
    out.first.resize(n);
    out.second.resize(n);
    const grid::SpectralFactor* f = op.factor();

    // With D1 = T_z V - V and E = T_2z V - 2 T_z V + V the differences expand
    // without cancellation: the first is [V D1] [0 W; W W] [V D1]^H and the
    // second is [V D1 E] [0 0 W; 0 2W 2W; W 2W W] [V D1 E]^H.
    parallel_for(n, [&](std::size_t i) {
        const PhasePoint& z = set.samples[i].z;
        if (f) {
            const CMatrix& v0 = f->vectors;
            const long r = v0.cols();
            const CMatrix w = f->weights.cast<Complex>().asDiagonal();
            const CMatrix d1 = phasespace::translate_vectors(v0, op.grid(), op.hbar(), z) - v0;
            if (need_first) {
                CMatrix u(v0.rows(), 2 * r);
                u << v0, d1;
                CMatrix c = CMatrix::Zero(2 * r, 2 * r);
                c.block(0, r, r, r) = w;
                c.block(r, 0, r, r) = w;
                c.block(r, r, r, r) = w;
                out.first[i] = lowrank_eigenvalues(u, c).cwiseAbs();
            }
            if (need_second) {
                const CMatrix e = phasespace::translate_vectors(v0, op.grid(), op.hbar(), 2.0 * z) - 2.0 * d1 - v0;
                CMatrix u(v0.rows(), 3 * r);
                u << v0, d1, e;
                CMatrix c = CMatrix::Zero(3 * r, 3 * r);
                c.block(0, 2 * r, r, r) = w;
                c.block(2 * r, 0, r, r) = w;
                c.block(r, r, r, r) = 2.0 * w;
                c.block(r, 2 * r, r, r) = 2.0 * w;
                c.block(2 * r, r, r, r) = 2.0 * w;
                c.block(2 * r, 2 * r, r, r) = w;
                out.second[i] = lowrank_eigenvalues(u, c).cwiseAbs();
            }
            return;
        }
        const CMatrix w0 = op.weighted();
        const CMatrix w1 = phasespace::translate(op, z).weighted();
        if (need_first)
            out.first[i] = singular_values(w1 - w0);
        if (need_second) {
            const CMatrix w2 = phasespace::translate(op, 2.0 * z).weighted();
            out.second[i] = singular_values(w2 - 2.0 * w1 + w0);
        }
    }, threads);
    return out;
}

inline DifferenceSpectra difference_spectra(const GridOperator& op, const QuadratureSpec& spec, bool need_first = true,
                                            bool need_second = true, unsigned threads = 0)
{
    return difference_spectra(op, make_samples(op.grid(), op.hbar(), spec), need_first, need_second, threads);
}

inline void echo_quadrature(NormReport& r, const DifferenceSpectra& ds)
{
    r.hbar = ds.hbar;
    r.samples = long(ds.set.samples.size());
    r.dropped = ds.set.dropped;
    r.r_min = ds.set.spec.r_min;
    r.r_max = ds.set.spec.r_max;
    r.truncated = true;
    r.flags.push_back("truncated z-quadrature");
    if (ds.set.dropped > 0)
        r.flags.push_back(std::to_string(ds.set.dropped) + " samples dropped (2z outside the box or snapped to 0)");
}

/// Per-sample ratio ||T_{2z} op - 2 T_z op + op||_{L^p} / |z|^s.
inline std::vector<double> besov_ratios(const DifferenceSpectra& ds, double s, double p)
{
    const double h = planck_h(ds.hbar);
    std::vector<double> out;
    for (std::size_t i = 0; i < ds.set.samples.size(); ++i) {
        if (ds.second[i].size() == 0)
            throw InvalidArgument("second-difference spectra were not computed");
        out.push_back(schatten_from_singular(ds.second[i], p, h, ds.dim) / std::pow(ds.set.samples[i].radius, s));
    }
    return out;
}

inline double lq_aggregate(const std::vector<double>& ratios, const SampleSet& set, double q)
{
    if (is_infinite_exponent(q))
        return *std::max_element(ratios.begin(), ratios.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < ratios.size(); ++i)
        sum += set.samples[i].weight * std::pow(ratios[i], q);
    return std::pow(sum, 1.0 / q);
}

inline NormReport besov(const DifferenceSpectra& ds, double s, double p, double q)
{
    if (!(s > 0.0 && s < 2.0))
        throw InvalidArgument("besov requires s in (0, 2)");
    if (!(q >= 1.0))
        throw InvalidArgument("besov requires q >= 1");
    NormReport r;
    r.kind = "besov";
    r.s = s;
    r.p = p;
    r.q = q;
    echo_quadrature(r, ds);
    r.value = lq_aggregate(besov_ratios(ds, s, p), ds.set, q);
    return r;
}

inline NormReport besov(const GridOperator& op, double s, double p, double q, const QuadratureSpec& spec)
{
    return besov(difference_spectra(op, spec, false, true), s, p, q);
}

/// (gamma h^d sum_z w_z Tr|T_z op - op|^p / |z|^{sp})^{1/p} over the samples.
inline NormReport frac_sobolev(const DifferenceSpectra& ds, double s, double p, double gamma = 1.0)
{
    if (!(s > 0.0 && s < 1.0))
        throw InvalidArgument("frac_sobolev requires s in (0, 1)");
    if (!(p >= 1.0) || is_infinite_exponent(p))
        throw InvalidArgument("frac_sobolev requires finite p >= 1");
    NormReport r;
    r.kind = "frac_sobolev";
    r.s = s;
    r.p = p;
    r.q = p;
    r.gamma = gamma;
    echo_quadrature(r, ds);
    const double h = planck_h(ds.hbar);
    double sum = 0.0;
    for (std::size_t i = 0; i < ds.set.samples.size(); ++i) {
        if (ds.first[i].size() == 0)
            throw InvalidArgument("first-difference spectra were not computed");
        const double np = std::pow(schatten_from_singular(ds.first[i], p, h, ds.dim), p);
        sum += ds.set.samples[i].weight * np / std::pow(ds.set.samples[i].radius, s * p);
    }
    r.value = std::pow(gamma * sum, 1.0 / p);
    return r;
}

inline NormReport frac_sobolev(const GridOperator& op, double s, double p, const QuadratureSpec& spec, double gamma = 1.0)
{
    return frac_sobolev(difference_spectra(op, spec, true, false), s, p, gamma);
}

//
// commutators with plane waves and shifts
//

enum class CommutatorDirection { x, p };

struct CommutatorReport {
    NormReport norm;
    double ratio = 0.0; ///< value / (hbar^s |w|^s)
};

/// [e^{2 i pi w.x}, op] (direction x) or [e^{2 i pi w.p}, op] (direction p).
inline CommutatorReport commutator_exponential(const GridOperator& op, CommutatorDirection dir,
                                               const std::vector<double>& w, double p, double s = 0.5)
{
    const Grid& g = op.grid();
    const int d = g.dim();
    if (int(w.size()) != d)
        throw InvalidArgument("frequency dimension does not match the grid");
    const double hbar = op.hbar();
    const long n = g.size();
    CMatrix u = CMatrix::Identity(n, n);
    for (int a = 0; a < d; ++a) {
        if (w[std::size_t(a)] == 0.0)
            continue;
        if (dir == CommutatorDirection::x) {
            const double steps = 2.0 * g.half_width() * w[std::size_t(a)];
            if (std::abs(steps - std::round(steps)) > 1e-9 * std::max(1.0, std::abs(steps)))
                throw IncompatibleTranslation("frequency w must be a multiple of 1/(2L)");
            const RVector x = grid::position_diagonal(g, a);
            CVector phase(n);
            for (long j = 0; j < n; ++j)
                phase[j] = std::polar(1.0, 2.0 * pi * w[std::size_t(a)] * x[j]);
            u = phase.asDiagonal() * u;
        } else {
            const double shift = planck_h(hbar) * w[std::size_t(a)];
            const double steps = shift / g.spacing();
            if (std::abs(steps - std::round(steps)) > 1e-9 * std::max(1.0, std::abs(steps)))
                throw IncompatibleTranslation("h w must be a multiple of the grid spacing");
            // circulant from the Fourier multiplier e^{i h w kappa}
            const long m = g.points();
            std::vector<Complex> sym(static_cast<std::size_t>(m));
            for (long k = 0; k < m; ++k)
                sym[std::size_t(k)] = std::polar(1.0 / double(m), shift * g.wavenumber(k));
            fft::transform(sym, true);
            CMatrix one(m, m);
            for (long r = 0; r < m; ++r)
                for (long c = 0; c < m; ++c)
                    one(r, c) = sym[std::size_t(wrap_index(r - c, m))];
            CMatrix full = CMatrix::Zero(n, n);
            const long stride = ipow(m, d - 1 - a);
            for (long row = 0; row < n; ++row) {
                const long digit = (row / stride) % m;
                const long base = row - digit * stride;
                for (long c = 0; c < m; ++c)
                    full(row, base + c * stride) = one(digit, c);
            }
            u = full * u;
        }
    }
    const CMatrix a = op.weighted();
    CommutatorReport out;
    out.norm.kind = "commutator_exp";
    out.norm.p = p;
    out.norm.s = s;
    out.norm.hbar = hbar;
    out.norm.value = schatten_from_singular(singular_values(u * a - a * u), p, op.h(), d);
    double wn = 0.0;
    for (double v : w)
        wn += v * v;
    wn = std::sqrt(wn);
    out.ratio = wn == 0.0 ? 0.0 : out.norm.value / std::pow(hbar * wn, s);
    return out;
}

struct NormRequest {
    NormKind kind = NormKind::schatten;
    double p = 2.0;
    double q = infinity;
    double s = 0.5;

    void validate() const
    {
        if (!(p >= 1.0) || !(q >= 1.0))
            throw InvalidArgument("norm request needs p, q >= 1");
        if (kind == NormKind::besov && !(s > 0.0 && s < 2.0))
            throw InvalidArgument("besov requires s in (0, 2)");
        if (kind == NormKind::frac_sobolev && !(s > 0.0 && s < 1.0))
            throw InvalidArgument("frac_sobolev requires s in (0, 1)");
    }
    [[nodiscard]] std::string label() const
    {
        std::ostringstream o;
        o << to_string(kind) << "_p" << p;
        if (kind == NormKind::besov || kind == NormKind::frac_sobolev)
            o << "_s" << s;
        if (kind == NormKind::besov)
            o << "_q" << q;
        return o.str();
    }
};

} // namespace srl::norms

#endif // SRL_NORMS_HPP
