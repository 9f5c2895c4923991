#ifndef SRL_PHASESPACE_HPP
#define SRL_PHASESPACE_HPP

#include "srl/core.hpp"
#include "srl/fft.hpp"
#include "srl/grid.hpp"

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace srl::phasespace {

using grid::Grid;
using grid::GridOperator;

/// Samples f(x_j, xi_m): rows are flattened x indices, columns flattened xi
/// indices with xi_m = m * pi hbar / (2L), m = -M/2 .. M/2-1 per axis.
class PhaseField {
public:
    PhaseField(Grid g, double hbar, CMatrix values)
        : grid_(g), hbar_(SemiclassicalParam(hbar).hbar), values_(std::move(values))
    {
        if (values_.rows() != g.size() || values_.cols() != g.size())
            throw GridMismatch("phase field shape does not match the grid");
    }

    static PhaseField zeros(Grid g, double hbar) { return {g, hbar, CMatrix::Zero(g.size(), g.size())}; }

    /// Evaluate f(x, xi) at every node.
    template <class F>
    static PhaseField sample(Grid g, double hbar, F&& f)
    {
        PhaseField out = zeros(g, hbar);
        for (long r = 0; r < g.size(); ++r) {
            const auto x = g.coordinates(r);
            for (long c = 0; c < g.size(); ++c)
                out.values_(r, c) = f(x, out.momentum(c));
        }
        return out;
    }

    [[nodiscard]] const Grid& grid() const noexcept { return grid_; }
    [[nodiscard]] double hbar() const noexcept { return hbar_; }
    [[nodiscard]] double h() const noexcept { return planck_h(hbar_); }
    [[nodiscard]] const CMatrix& values() const noexcept { return values_; }
    [[nodiscard]] CMatrix& values() noexcept { return values_; }

    [[nodiscard]] double dxi() const noexcept { return pi * hbar_ / (2.0 * grid_.half_width()); }
    /// (dx dxi)^d = (h / 2M)^d.
    [[nodiscard]] double cell() const { return std::pow(grid_.spacing() * dxi(), grid_.dim()); }

    [[nodiscard]] double xi(long m_slot) const noexcept { return double(m_slot - grid_.points() / 2) * dxi(); }
    [[nodiscard]] std::vector<double> momentum(long col) const
    {
        std::vector<long> digits;
        unflatten(col, grid_.points(), grid_.dim(), digits);
        std::vector<double> p(digits.size());
        for (std::size_t a = 0; a < digits.size(); ++a)
            p[a] = xi(digits[a]);
        return p;
    }

    [[nodiscard]] double max_imag() const { return values_.imag().cwiseAbs().maxCoeff(); }

    [[nodiscard]] Complex integral() const { return values_.sum() * cell(); }

    /// (sum |f|^p cell)^{1/p}; p = inf gives max |f|.
    [[nodiscard]] double lp_norm(double p) const
    {
        if (!(p >= 1.0))
            throw InvalidArgument("L^p exponent must be >= 1");
        if (is_infinite_exponent(p))
            return values_.cwiseAbs().maxCoeff();
        double s = 0.0;
        for (long c = 0; c < values_.cols(); ++c)
            for (long r = 0; r < values_.rows(); ++r)
                s += std::pow(std::abs(values_(r, c)), p);
        return std::pow(s * cell(), 1.0 / p);
    }

    void check_compatible(const PhaseField& o) const
    {
        if (!(grid_ == o.grid_) || hbar_ != o.hbar_)
            throw GridMismatch("phase fields live on different grids");
    }

private:
    Grid grid_;
    double hbar_;
    CMatrix values_;
};

namespace detail {

    inline long offset_flat(const std::vector<long>& base, const std::vector<long>& shift, long m, int sign, bool& inside)
    {
        long idx = 0;
        for (std::size_t a = 0; a < base.size(); ++a) {
            const long v = base[a] + sign * shift[a];
            if (v < 0 || v >= m) {
                inside = false;
                return 0;
            }
            idx = idx * m + v;
        }
        return idx;
    }

    /// Slot of the FFT array for centred index c (c - M/2 taken mod M), per axis.
    inline long centred_to_slot(long c_flat, long m, int d)
    {
        std::vector<long> digits;
        unflatten(c_flat, m, d, digits);
        for (auto& v : digits)
            v = wrap_index(v - m / 2, m);
        return flatten(digits, m);
    }

} // namespace detail

/// f(x_j, xi_m) = (2 dx)^d sum_k K(x_j + k dx, x_j - k dx) e^{-2 pi i k.m / M};
/// kernel entries leaving the box count as zero.
inline PhaseField wigner(const GridOperator& op)
{
    const Grid& g = op.grid();
    const long m = g.points();
    const int d = g.dim();
    const long n = g.size();
    const CMatrix& kernel = op.kernel();
    CMatrix out(n, n);
    const double scale = std::pow(2.0 * g.spacing(), d);

    std::vector<long> slot_of_col(static_cast<std::size_t>(n));
    for (long c = 0; c < n; ++c)
        slot_of_col[std::size_t(c)] = detail::centred_to_slot(c, m, d);

    parallel_for(std::size_t(n), [&](std::size_t row) {
        std::vector<long> j, k;
        unflatten(long(row), m, d, j);
        std::vector<Complex> line(static_cast<std::size_t>(n), Complex{});
        for (long slot = 0; slot < n; ++slot) {
            unflatten(slot, m, d, k);
            for (auto& v : k)
                v = fft::signed_frequency(v, m);
            bool inside = true;
            const long a = detail::offset_flat(j, k, m, +1, inside);
            const long b = detail::offset_flat(j, k, m, -1, inside);
            if (inside)
                line[std::size_t(slot)] = kernel(a, b);
        }
        fft::transform_all_axes(line, m, d, false);
        for (long c = 0; c < n; ++c)
            out(long(row), c) = scale * line[std::size_t(slot_of_col[std::size_t(c)])];
    });

    if (op.is_hermitian(1e-12)) {
        const double tol = 1e-10 * std::max(1.0, out.cwiseAbs().maxCoeff());
        if (out.imag().cwiseAbs().maxCoeff() <= tol)
            out = out.real().cast<Complex>();
    }
    return {g, op.hbar(), std::move(out)};
}

/// Spectral shift f(x) -> f(x + dx/2) along one x axis, every xi column (Nyquist dropped).
inline CMatrix half_shift_x(const CMatrix& values, const Grid& g, int axis)
{
    const long m = g.points();
    const int d = g.dim();
    const long n = g.size();
    CMatrix out(n, n);
    std::vector<Complex> phase(static_cast<std::size_t>(m));
    for (long k = 0; k < m; ++k)
        phase[std::size_t(k)] = k == m / 2 ? Complex{} : std::polar(1.0 / double(m), pi * double(fft::signed_frequency(k, m)) / double(m));
    const long stride = ipow(m, d - 1 - axis);
    for (long c = 0; c < n; ++c) {
        std::vector<Complex> col(values.col(c).data(), values.col(c).data() + n);
        fft::transform_axis(col, m, d, axis, false);
        for (long r = 0; r < n; ++r)
            col[std::size_t(r)] *= phase[std::size_t((r / stride) % m)];
        fft::transform_axis(col, m, d, axis, true);
        for (long r = 0; r < n; ++r)
            out(r, c) = col[std::size_t(r)];
    }
    return out;
}

/// Discrete inverse of wigner: entries with x_a + x_b on the grid come from the
/// inverse DFT in xi, the others from the half-cell shifted field.
inline GridOperator weyl_quantize(const PhaseField& f)
{
    const Grid& g = f.grid();
    const long m = g.points();
    const int d = g.dim();
    const long n = g.size();
    CMatrix kernel = CMatrix::Zero(n, n);
    const double scale = 1.0 / std::pow(2.0 * g.spacing() * double(m), d);

    std::vector<long> slot_of_col(static_cast<std::size_t>(n));
    for (long c = 0; c < n; ++c)
        slot_of_col[std::size_t(c)] = detail::centred_to_slot(c, m, d);

    for (long pattern = 0; pattern < (1L << d); ++pattern) {
        std::vector<long> sigma(static_cast<std::size_t>(d));
        for (int a = 0; a < d; ++a)
            sigma[std::size_t(a)] = (pattern >> (d - 1 - a)) & 1;
        CMatrix shifted = f.values();
        for (int a = 0; a < d; ++a)
            if (sigma[std::size_t(a)])
                shifted = half_shift_x(shifted, g, a);
        // half-integer k: extra phase e^{i pi m / M} on the shifted axes
        std::vector<Complex> col_phase(static_cast<std::size_t>(n), Complex(1.0, 0.0));
        for (long c = 0; c < n; ++c) {
            std::vector<long> digits;
            unflatten(c, m, d, digits);
            double arg = 0.0;
            for (int a = 0; a < d; ++a)
                if (sigma[std::size_t(a)])
                    arg += pi * double(digits[std::size_t(a)] - m / 2) / double(m);
            col_phase[std::size_t(c)] = std::polar(1.0, arg);
        }
        parallel_for(std::size_t(n), [&](std::size_t row) {
            std::vector<Complex> line(static_cast<std::size_t>(n), Complex{});
            for (long c = 0; c < n; ++c)
                line[std::size_t(slot_of_col[std::size_t(c)])] = shifted(long(row), c) * col_phase[std::size_t(c)];
            fft::transform_all_axes(line, m, d, true);
            std::vector<long> j, k, a_idx(static_cast<std::size_t>(d)), b_idx(static_cast<std::size_t>(d));
            unflatten(long(row), m, d, j);
            for (long slot = 0; slot < n; ++slot) {
                unflatten(slot, m, d, k);
                bool inside = true;
                for (int ax = 0; ax < d; ++ax) {
                    const long kk = fft::signed_frequency(k[std::size_t(ax)], m);
                    const long av = j[std::size_t(ax)] + kk + sigma[std::size_t(ax)];
                    const long bv = j[std::size_t(ax)] - kk;
                    if (av < 0 || av >= m || bv < 0 || bv >= m) {
                        inside = false;
                        break;
                    }
                    a_idx[std::size_t(ax)] = av;
                    b_idx[std::size_t(ax)] = bv;
                }
                if (inside)
                    kernel(flatten(a_idx, m), flatten(b_idx, m)) = scale * line[std::size_t(slot)];
            }
        });
    }
    return {g, f.hbar(), std::move(kernel)};
}

//
// phase-space translations
//

struct PhasePoint {
    std::vector<double> x;
    std::vector<double> xi;

    [[nodiscard]] double norm() const
    {
        double s = 0;
        for (double v : x)
            s += v * v;
        for (double v : xi)
            s += v * v;
        return std::sqrt(s);
    }
    friend PhasePoint operator+(const PhasePoint& a, const PhasePoint& b)
    {
        PhasePoint r = a;
        for (std::size_t i = 0; i < r.x.size(); ++i) {
            r.x[i] += b.x[i];
            r.xi[i] += b.xi[i];
        }
        return r;
    }
    friend PhasePoint operator*(double c, const PhasePoint& a)
    {
        PhasePoint r = a;
        for (auto& v : r.x)
            v *= c;
        for (auto& v : r.xi)
            v *= c;
        return r;
    }
};

/// Momentum step of exact translations: pi hbar / L.
inline double compatible_xi_step(const Grid& g, double hbar) { return pi * hbar / g.half_width(); }

/// Integer steps (s, l) with x0 = s dx, xi0 = l pi hbar / L.
struct LatticeShift {
    std::vector<long> s;
    std::vector<long> l;
};

inline LatticeShift lattice_shift(const Grid& g, double hbar, const PhasePoint& z)
{
    const int d = g.dim();
    if (int(z.x.size()) != d || int(z.xi.size()) != d)
        throw InvalidArgument("phase point dimension does not match the grid");
    const double dx = g.spacing();
    const double dk = compatible_xi_step(g, hbar);
    LatticeShift out{std::vector<long>(std::size_t(d)), std::vector<long>(std::size_t(d))};
    bool ok = true;
    for (int a = 0; a < d; ++a) {
        const double s = z.x[std::size_t(a)] / dx;
        const double l = z.xi[std::size_t(a)] / dk;
        out.s[std::size_t(a)] = std::lround(s);
        out.l[std::size_t(a)] = std::lround(l);
        if (std::abs(s - std::round(s)) > 1e-9 * std::max(1.0, std::abs(s)) ||
            std::abs(l - std::round(l)) > 1e-9 * std::max(1.0, std::abs(l)))
            ok = false;
    }
    if (!ok) {
        std::ostringstream msg;
        msg << std::setprecision(12) << "phase point is not grid-compatible; nearest compatible point is (x0, xi0) = (";
        for (int a = 0; a < d; ++a)
            msg << (a ? ", " : "") << double(out.s[std::size_t(a)]) * dx;
        msg << "; ";
        for (int a = 0; a < d; ++a)
            msg << (a ? ", " : "") << double(out.l[std::size_t(a)]) * dk;
        msg << ")";
        throw IncompatibleTranslation(msg.str());
    }
    return out;
}

inline PhasePoint lattice_point(const Grid& g, double hbar, const LatticeShift& sh)
{
    PhasePoint z;
    for (std::size_t a = 0; a < sh.s.size(); ++a) {
        z.x.push_back(double(sh.s[a]) * g.spacing());
        z.xi.push_back(double(sh.l[a]) * compatible_xi_step(g, hbar));
    }
    return z;
}

namespace detail {

    /// Source index (a - s wrapped) and phase e^{i xi0 . x_a / hbar} for every node.
    inline void shift_maps(const Grid& g, const LatticeShift& sh, std::vector<long>& src, std::vector<Complex>& phase)
    {
        const long m = g.points();
        const int d = g.dim();
        const long n = g.size();
        src.resize(std::size_t(n));
        phase.resize(std::size_t(n));
        std::vector<long> digits;
        for (long a = 0; a < n; ++a) {
            unflatten(a, m, d, digits);
            double arg = 0.0;
            for (int ax = 0; ax < d; ++ax) {
                // e^{i pi l x / L} with x = -L + j dx, reduced mod 2 pi exactly
                const long l = sh.l[std::size_t(ax)];
                const long jj = digits[std::size_t(ax)];
                const long num = wrap_index(l * (2 * jj - m), 2 * m);
                arg += pi * double(num) / double(m);
                digits[std::size_t(ax)] = wrap_index(jj - sh.s[std::size_t(ax)], m);
            }
            src[std::size_t(a)] = flatten(digits, m);
            phase[std::size_t(a)] = std::polar(1.0, arg);
        }
    }

} // namespace detail

/// W_z V with the symmetric phase e^{i xi0 (x - x0/2) / hbar}.
inline CMatrix translate_vectors(const CMatrix& v, const Grid& g, double hbar, const PhasePoint& z)
{
    const LatticeShift sh = lattice_shift(g, hbar, z);
    std::vector<long> src;
    std::vector<Complex> phase;
    detail::shift_maps(g, sh, src, phase);
    const long m = g.points();
    long ls = 0;
    for (std::size_t ax = 0; ax < sh.l.size(); ++ax)
        ls += wrap_index(sh.l[ax] * sh.s[ax], 2 * m);
    const Complex global = std::polar(1.0, -pi * double(wrap_index(ls, 2 * m)) / double(m));
    CMatrix out(v.rows(), v.cols());
    for (long a = 0; a < v.rows(); ++a)
        out.row(a) = global * phase[std::size_t(a)] * v.row(src[std::size_t(a)]);
    return out;
}

/// W_z op W_z^* for a grid-compatible z.
inline GridOperator translate(const GridOperator& op, const PhasePoint& z)
{
    const Grid& g = op.grid();
    if (const grid::SpectralFactor* f = op.factor()) {
        grid::SpectralFactor nf;
        nf.weights = f->weights;
        nf.vectors = translate_vectors(f->vectors, g, op.hbar(), z);
        return GridOperator::from_factor(g, op.hbar(), std::move(nf));
    }
    const LatticeShift sh = lattice_shift(g, op.hbar(), z);
    std::vector<long> src;
    std::vector<Complex> phase;
    detail::shift_maps(g, sh, src, phase);
    const long n = g.size();
    const CMatrix& k = op.kernel();
    CMatrix out(n, n);
    for (long b = 0; b < n; ++b) {
        const Complex pb = std::conj(phase[std::size_t(b)]);
        const long sb = src[std::size_t(b)];
        for (long a = 0; a < n; ++a)
            out(a, b) = phase[std::size_t(a)] * pb * k(src[std::size_t(a)], sb);
    }
    return {g, op.hbar(), std::move(out)};
}

enum class PhaseConvention {
    symmetric, ///< e^{i xi0 (x - x0/2) / hbar} phi(x - x0)
    plain      ///< e^{i xi0 x / hbar} phi(x - x0)
};

/// Discrete unitary (weighted form) implementing W_z on the periodic grid.
inline CMatrix translation_unitary(const Grid& g, double hbar, const PhasePoint& z,
                                   PhaseConvention conv = PhaseConvention::symmetric)
{
    const LatticeShift sh = lattice_shift(g, hbar, z);
    const long n = g.size();
    const long m = g.points();
    CMatrix w = CMatrix::Zero(n, n);
    std::vector<long> digits;
    for (long a = 0; a < n; ++a) {
        unflatten(a, m, g.dim(), digits);
        double arg = 0.0;
        for (int ax = 0; ax < g.dim(); ++ax) {
            const double x = g.node(digits[std::size_t(ax)]);
            const double xi0 = z.xi[std::size_t(ax)];
            const double x0 = z.x[std::size_t(ax)];
            arg += xi0 * (conv == PhaseConvention::symmetric ? x - 0.5 * x0 : x) / hbar;
            digits[std::size_t(ax)] = wrap_index(digits[std::size_t(ax)] - sh.s[std::size_t(ax)], m);
        }
        w(a, flatten(digits, m)) = std::polar(1.0, arg);
    }
    return w;
}

//
// semiclassical convolution and the Gaussian g_h
//

struct WeightedPoint {
    PhasePoint z;
    Complex weight;
};

/// sum_z weight_z T_z op.
inline GridOperator semiclassical_convolve(const std::vector<WeightedPoint>& points, const GridOperator& op)
{
    const long n = op.grid().size();
    CMatrix acc = CMatrix::Zero(n, n);
    for (const auto& p : points) {
        if (p.weight == Complex{})
            continue;
        acc += p.weight * translate(op, p.z).kernel();
    }
    return {op.grid(), op.hbar(), std::move(acc)};
}

/// Phase-space nodes of f that are exact translations (every xi index even),
/// each carrying the cell (2 dx dxi)^d = (h/M)^d.
inline std::vector<WeightedPoint> compatible_samples(const PhaseField& f)
{
    const Grid& g = f.grid();
    const long m = g.points();
    const int d = g.dim();
    const double cell = std::pow(2.0 * g.spacing() * f.dxi(), d);
    std::vector<WeightedPoint> pts;
    std::vector<long> xd, pd;
    for (long r = 0; r < g.size(); ++r) {
        unflatten(r, m, d, xd);
        for (long c = 0; c < g.size(); ++c) {
            unflatten(c, m, d, pd);
            bool even = true;
            for (long v : pd)
                even = even && ((v - m / 2) % 2 == 0);
            if (!even || f.values()(r, c) == Complex{})
                continue;
            PhasePoint z;
            for (int a = 0; a < d; ++a) {
                z.x.push_back(g.node(xd[std::size_t(a)]));
                z.xi.push_back(f.xi(pd[std::size_t(a)]));
            }
            pts.push_back({std::move(z), f.values()(r, c) * cell});
        }
    }
    return pts;
}

/// f * op summed over the translation-compatible nodes of the phase grid.
inline GridOperator semiclassical_convolve(const PhaseField& f, const GridOperator& op)
{
    const Grid& g = op.grid();
    if (!(f.grid() == g) || f.hbar() != op.hbar())
        throw GridMismatch("phase field and operator live on different grids");
    if (g.dim() != 1)
        return semiclassical_convolve(compatible_samples(f), op);

    const long m = g.points();
    const double cell = 2.0 * g.spacing() * f.dxi();
    const CMatrix& k = op.kernel();
    CMatrix acc = CMatrix::Zero(m, m);
    std::vector<Complex> fl(static_cast<std::size_t>(m));
    for (long j = 0; j < m; ++j) {
        // F_j(r) = sum_l f(x_j, l pi hbar / L) e^{2 pi i l r / M}
        std::fill(fl.begin(), fl.end(), Complex{});
        bool any = false;
        for (long c = 0; c < m; c += 2) {
            const Complex v = f.values()(j, c);
            if (v == Complex{})
                continue;
            any = true;
            const long l = (c - m / 2) / 2;
            fl[std::size_t(wrap_index(l, m))] = v;
        }
        if (!any)
            continue;
        fft::transform(fl, true);
        const long s = j - m / 2;
        for (long b = 0; b < m; ++b) {
            const long sb = wrap_index(b - s, m);
            for (long a = 0; a < m; ++a)
                acc(a, b) += cell * fl[std::size_t(wrap_index(a - b, m))] * k(wrap_index(a - s, m), sb);
        }
    }
    return {g, op.hbar(), std::move(acc)};
}

/// g_h(z) = (2/h)^d e^{-|z|^2 / hbar}.
inline double gaussian_gh(const std::vector<double>& x, const std::vector<double>& xi, double hbar)
{
    double r2 = 0.0;
    for (double v : x)
        r2 += v * v;
    for (double v : xi)
        r2 += v * v;
    return std::pow(2.0 / planck_h(hbar), double(x.size())) * std::exp(-r2 / hbar);
}

/// Normalized coherent state psi_z(x) = (pi hbar)^{-d/4} e^{-|x-x0|^2/(2hbar)} e^{i xi0.(x - x0/2)/hbar},
/// returned as a discrete vector (times sqrt(dx^d)).
inline CVector coherent_state(const Grid& g, double hbar, const PhasePoint& z)
{
    const long n = g.size();
    const int d = g.dim();
    CVector v(n);
    const double norm = std::pow(pi * hbar, -0.25 * d) * std::sqrt(g.cell_volume());
    for (long j = 0; j < n; ++j) {
        const auto x = g.coordinates(j);
        double r2 = 0.0;
        double arg = 0.0;
        for (int a = 0; a < d; ++a) {
            const double dx = x[std::size_t(a)] - z.x[std::size_t(a)];
            r2 += dx * dx;
            arg += z.xi[std::size_t(a)] * (x[std::size_t(a)] - 0.5 * z.x[std::size_t(a)]) / hbar;
        }
        v[j] = norm * std::exp(-r2 / (2.0 * hbar)) * std::polar(1.0, arg);
    }
    return v;
}

/// Op_{g_h} = h^{-d} |psi_0><psi_0|.
inline GridOperator gaussian_operator(const Grid& g, double hbar)
{
    const PhasePoint origin{std::vector<double>(std::size_t(g.dim()), 0.0), std::vector<double>(std::size_t(g.dim()), 0.0)};
    grid::SpectralFactor f;
    f.vectors = coherent_state(g, hbar, origin);
    f.weights = RVector::Constant(1, std::pow(planck_h(hbar), -g.dim()));
    return GridOperator::from_factor(g, hbar, std::move(f));
}

/// Wick (Toeplitz) quantization f * Op_{g_h}.
inline GridOperator wick_quantize(const PhaseField& f)
{
    return semiclassical_convolve(f, gaussian_operator(f.grid(), f.hbar()));
}

/// g_h * wigner(op), by multiplying the periodic phase-space DFT with e^{-hbar |omega|^2 / 4}.
inline PhaseField smooth_gaussian(const PhaseField& f)
{
    const Grid& g = f.grid();
    const long m = g.points();
    const int d = g.dim();
    const long n = g.size();
    std::vector<Complex> data(static_cast<std::size_t>(n * n));
    for (long r = 0; r < n; ++r)
        for (long c = 0; c < n; ++c)
            data[std::size_t(r * n + c)] = f.values()(r, c);
    fft::transform_all_axes(data, m, 2 * d, false);
    const double wx = pi / g.half_width();
    const double wxi = 2.0 * pi / (double(m) * f.dxi());
    std::vector<long> digits;
    for (long idx = 0; idx < n * n; ++idx) {
        unflatten(idx, m, 2 * d, digits);
        double w2 = 0.0;
        for (int a = 0; a < 2 * d; ++a) {
            const double w = double(fft::signed_frequency(digits[std::size_t(a)], m)) * (a < d ? wx : wxi);
            w2 += w * w;
        }
        data[std::size_t(idx)] *= std::exp(-f.hbar() * w2 / 4.0) / double(n * n);
    }
    fft::transform_all_axes(data, m, 2 * d, true);
    CMatrix out(n, n);
    for (long r = 0; r < n; ++r)
        for (long c = 0; c < n; ++c)
            out(r, c) = data[std::size_t(r * n + c)];
    if (f.max_imag() == 0.0)
        out = out.real().cast<Complex>();
    return {g, f.hbar(), std::move(out)};
}

/// Husimi transform g_h * f_op.
inline PhaseField husimi(const GridOperator& op) { return smooth_gaussian(wigner(op)); }

/// Integer-cell translation of a phase field (periodic): x by s dx, xi by l pi hbar / L.
inline PhaseField translate_field(const PhaseField& f, const PhasePoint& z)
{
    const Grid& g = f.grid();
    const LatticeShift sh = lattice_shift(g, f.hbar(), z);
    const long m = g.points();
    const int d = g.dim();
    const long n = g.size();
    std::vector<long> xmap(static_cast<std::size_t>(n)), pmap(static_cast<std::size_t>(n));
    std::vector<long> digits;
    for (long j = 0; j < n; ++j) {
        unflatten(j, m, d, digits);
        for (int a = 0; a < d; ++a)
            digits[std::size_t(a)] = wrap_index(digits[std::size_t(a)] - sh.s[std::size_t(a)], m);
        xmap[std::size_t(j)] = flatten(digits, m);
        unflatten(j, m, d, digits);
        for (int a = 0; a < d; ++a)
            digits[std::size_t(a)] = wrap_index(digits[std::size_t(a)] - 2 * sh.l[std::size_t(a)], m);
        pmap[std::size_t(j)] = flatten(digits, m);
    }
    CMatrix out(n, n);
    for (long c = 0; c < n; ++c)
        for (long r = 0; r < n; ++r)
            out(r, c) = f.values()(xmap[std::size_t(r)], pmap[std::size_t(c)]);
    return {g, f.hbar(), std::move(out)};
}

/// Spectral partial derivative of a phase field along x_axis or xi_axis (1-based).
inline PhaseField field_derivative(const PhaseField& f, GradientKind kind, int axis)
{
    const Grid& g = f.grid();
    const long m = g.points();
    const int d = g.dim();
    const long n = g.size();
    if (axis < 1 || axis > d)
        throw InvalidArgument("axis outside 1..d");
    const int tensor_axis = kind == GradientKind::x ? axis - 1 : d + axis - 1;
    const double period = kind == GradientKind::x ? 2.0 * g.half_width() : double(m) * f.dxi();
    std::vector<Complex> data(static_cast<std::size_t>(n * n));
    for (long r = 0; r < n; ++r)
        for (long c = 0; c < n; ++c)
            data[std::size_t(r * n + c)] = f.values()(r, c);
    fft::transform_axis(data, m, 2 * d, tensor_axis, false);
    const long stride = ipow(m, 2 * d - 1 - tensor_axis);
    for (long idx = 0; idx < n * n; ++idx) {
        const long k = (idx / stride) % m;
        const double w = k == m / 2 ? 0.0 : 2.0 * pi * double(fft::signed_frequency(k, m)) / period;
        data[std::size_t(idx)] *= Complex(0.0, w) / double(m);
    }
    fft::transform_axis(data, m, 2 * d, tensor_axis, true);
    CMatrix out(n, n);
    for (long r = 0; r < n; ++r)
        for (long c = 0; c < n; ++c)
            out(r, c) = data[std::size_t(r * n + c)];
    if (f.max_imag() == 0.0)
        out = out.real().cast<Complex>();
    return {g, f.hbar(), std::move(out)};
}

/// |grad f| = (sum_i |d_{x_i} f|^2 + |d_{xi_i} f|^2)^{1/2} as a phase field.
inline PhaseField gradient_magnitude(const PhaseField& f)
{
    const long n = f.grid().size();
    RMatrix acc = RMatrix::Zero(n, n);
    for (int a = 1; a <= f.grid().dim(); ++a)
        for (GradientKind k : {GradientKind::x, GradientKind::xi})
            acc += field_derivative(f, k, a).values().cwiseAbs2();
    return {f.grid(), f.hbar(), acc.cwiseSqrt().cast<Complex>()};
}

//
// export
//

/// Columns x..., xi..., value (real part); '# columns:' header for gnuplot.
inline void write_csv(const PhaseField& f, const std::string& path)
{
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write " + path);
    const int d = f.grid().dim();
    out << "# columns:";
    for (int a = 1; a <= d; ++a)
        out << (d == 1 ? " x" : " x" + std::to_string(a));
    for (int a = 1; a <= d; ++a)
        out << (d == 1 ? " xi" : " xi" + std::to_string(a));
    out << " value\n";
    out << std::setprecision(12);
    for (long r = 0; r < f.grid().size(); ++r) {
        const auto x = f.grid().coordinates(r);
        for (long c = 0; c < f.grid().size(); ++c) {
            const auto p = f.momentum(c);
            for (double v : x)
                out << v << ',';
            for (double v : p)
                out << v << ',';
            out << f.values()(r, c).real() << '\n';
        }
    }
}

struct BinaryHeader {
    std::int64_t points = 0;
    double half_width = 0;
    double hbar = 0;
    std::int64_t dim = 0;
};

/// Header (M, L, hbar, d) followed by the real values, row-major.
inline void write_binary(const PhaseField& f, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write " + path);
    const BinaryHeader hd{f.grid().points(), f.grid().half_width(), f.hbar(), f.grid().dim()};
    out.write(reinterpret_cast<const char*>(&hd.points), sizeof hd.points);
    out.write(reinterpret_cast<const char*>(&hd.half_width), sizeof hd.half_width);
    out.write(reinterpret_cast<const char*>(&hd.hbar), sizeof hd.hbar);
    out.write(reinterpret_cast<const char*>(&hd.dim), sizeof hd.dim);
    for (long r = 0; r < f.values().rows(); ++r)
        for (long c = 0; c < f.values().cols(); ++c) {
            const double v = f.values()(r, c).real();
            out.write(reinterpret_cast<const char*>(&v), sizeof v);
        }
}

inline BinaryHeader read_header(std::istream& in)
{
    BinaryHeader hd;
    in.read(reinterpret_cast<char*>(&hd.points), sizeof hd.points);
    in.read(reinterpret_cast<char*>(&hd.half_width), sizeof hd.half_width);
    in.read(reinterpret_cast<char*>(&hd.hbar), sizeof hd.hbar);
    in.read(reinterpret_cast<char*>(&hd.dim), sizeof hd.dim);
    if (!in)
        throw InvalidArgument("truncated binary header");
    return hd;
}

inline PhaseField read_field_binary(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InvalidArgument("cannot open " + path);
    const BinaryHeader hd = read_header(in);
    const Grid g(hd.half_width, hd.points, int(hd.dim));
    CMatrix v(g.size(), g.size());
    for (long r = 0; r < g.size(); ++r)
        for (long c = 0; c < g.size(); ++c) {
            double x = 0;
            in.read(reinterpret_cast<char*>(&x), sizeof x);
            v(r, c) = x;
        }
    if (!in)
        throw InvalidArgument("truncated phase field file " + path);
    return {g, hd.hbar, std::move(v)};
}

/// Operator dump: same header, then the kernel as (re, im) pairs, row-major.
inline void write_operator_binary(const GridOperator& op, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write " + path);
    const BinaryHeader hd{op.grid().points(), op.grid().half_width(), op.hbar(), op.grid().dim()};
    out.write(reinterpret_cast<const char*>(&hd.points), sizeof hd.points);
    out.write(reinterpret_cast<const char*>(&hd.half_width), sizeof hd.half_width);
    out.write(reinterpret_cast<const char*>(&hd.hbar), sizeof hd.hbar);
    out.write(reinterpret_cast<const char*>(&hd.dim), sizeof hd.dim);
    for (long r = 0; r < op.kernel().rows(); ++r)
        for (long c = 0; c < op.kernel().cols(); ++c) {
            const double re = op.kernel()(r, c).real();
            const double im = op.kernel()(r, c).imag();
            out.write(reinterpret_cast<const char*>(&re), sizeof re);
            out.write(reinterpret_cast<const char*>(&im), sizeof im);
        }
}

inline GridOperator read_operator_binary(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InvalidArgument("cannot open " + path);
    const BinaryHeader hd = read_header(in);
    const Grid g(hd.half_width, hd.points, int(hd.dim));
    CMatrix k(g.size(), g.size());
    for (long r = 0; r < g.size(); ++r)
        for (long c = 0; c < g.size(); ++c) {
            double re = 0, im = 0;
            in.read(reinterpret_cast<char*>(&re), sizeof re);
            in.read(reinterpret_cast<char*>(&im), sizeof im);
            k(r, c) = Complex(re, im);
        }
    if (!in)
        throw InvalidArgument("truncated operator file " + path);
    return {g, hd.hbar, std::move(k)};
}

} // namespace srl::phasespace

#endif // SRL_PHASESPACE_HPP
