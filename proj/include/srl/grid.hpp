#ifndef SRL_GRID_HPP
#define SRL_GRID_HPP

#include "srl/core.hpp"
#include "srl/fft.hpp"

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/roots.hpp>

#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <span>
#include <string>
#include <vector>

namespace srl::grid {

/// Uniform periodic grid on [-L, L)^d with M points per axis.
class Grid {
public:
    Grid(double half_width, long points_per_axis, int dim = 1)
        : L_(half_width), M_(points_per_axis), d_(dim)
    {
        if (!(half_width > 0.0) || !std::isfinite(half_width))
            throw InvalidArgument("grid half-width must be positive");
        if (points_per_axis < 16 || (points_per_axis & (points_per_axis - 1)) != 0)
            throw InvalidArgument("points per axis must be a power of two >= 16");
        if (dim < 1)
            throw InvalidArgument("grid dimension must be >= 1");
    }

    [[nodiscard]] double half_width() const noexcept { return L_; }
    [[nodiscard]] long points() const noexcept { return M_; }
    [[nodiscard]] int dim() const noexcept { return d_; }
    [[nodiscard]] double spacing() const noexcept { return 2.0 * L_ / double(M_); }
    [[nodiscard]] double node(long j) const noexcept { return -L_ + double(j) * spacing(); }
    [[nodiscard]] long size() const { return ipow(M_, d_); }
    /// Delta x^d, the weight of one node in a Riemann sum.
    [[nodiscard]] double cell_volume() const { return std::pow(spacing(), d_); }
    /// Periodic wavenumber of DFT slot k.
    [[nodiscard]] double wavenumber(long k) const noexcept
    {
        return pi * double(fft::signed_frequency(k, M_)) / L_;
    }

    [[nodiscard]] std::vector<double> coordinates(long flat) const
    {
        std::vector<long> digits;
        unflatten(flat, M_, d_, digits);
        std::vector<double> x(digits.size());
        for (std::size_t a = 0; a < digits.size(); ++a)
            x[a] = node(digits[a]);
        return x;
    }

    friend bool operator==(const Grid& a, const Grid& b) noexcept
    {
        return a.L_ == b.L_ && a.M_ == b.M_ && a.d_ == b.d_;
    }

private:
    double L_;
    long M_;
    int d_;
};

//
// potentials U; the Schroedinger operator uses V = -U
//

enum class PotentialKind { harmonic_well, bump, rough_hoelder, sampled };

class Potential {
public:
    static Potential harmonic_well(double u0 = 1.0)
    {
        Potential p;
        p.kind_ = PotentialKind::harmonic_well;
        p.u0_ = u0;
        return p;
    }

    /// (u0 + eps) * B(|x|/R) - eps with the smooth bump B(r) = exp(1 - 1/(1 - r^2)).
    static Potential bump(double u0 = 1.0, double radius = 2.5, double epsilon = 1.0)
    {
        if (!(radius > 0.0) || !(epsilon > 0.0))
            throw InvalidArgument("bump radius and epsilon must be positive");
        Potential p;
        p.kind_ = PotentialKind::bump;
        p.u0_ = u0;
        p.radius_ = radius;
        p.epsilon_ = epsilon;
        return p;
    }

    /// bump + amplitude * sum_i sum_{k<=kmax} 2^{-alpha k} cos(2^k x_i); kmax < 0 means auto.
    static Potential rough_hoelder(double alpha = 0.5, double amplitude = 0.1, int kmax = -1,
                                   double u0 = 1.0, double radius = 2.5, double epsilon = 1.0)
    {
        if (!(alpha > 0.0) || alpha >= 1.0)
            throw InvalidArgument("hoelder exponent alpha must lie in (0, 1)");
        Potential p = bump(u0, radius, epsilon);
        p.kind_ = PotentialKind::rough_hoelder;
        p.alpha_ = alpha;
        p.amplitude_ = amplitude;
        p.kmax_ = kmax;
        return p;
    }

    /// One-dimensional potential given by node values, linearly interpolated.
    static Potential sampled(std::vector<double> x, std::vector<double> u)
    {
        if (x.size() != u.size() || x.size() < 2)
            throw InvalidArgument("sampled potential needs matching x and U columns");
        for (std::size_t i = 1; i < x.size(); ++i)
            if (!(x[i] > x[i - 1]))
                throw InvalidArgument("sampled potential x column must be increasing");
        for (double v : u)
            if (!std::isfinite(v))
                throw InvalidArgument("sampled potential contains non-finite values");
        Potential p;
        p.kind_ = PotentialKind::sampled;
        p.xs_ = std::make_shared<const std::vector<double>>(std::move(x));
        p.us_ = std::make_shared<const std::vector<double>>(std::move(u));
        return p;
    }

    /// Reads "x,U" rows; a header line and '#' comments are skipped.
    static Potential from_csv(const std::string& path)
    {
        std::ifstream in(path);
        if (!in)
            throw InvalidArgument("cannot open potential file " + path);
        std::vector<double> x, u;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#')
                continue;
            std::replace(line.begin(), line.end(), ',', ' ');
            std::istringstream row(line);
            double a = 0, b = 0;
            if (!(row >> a >> b))
                continue; // header
            x.push_back(a);
            u.push_back(b);
        }
        return sampled(std::move(x), std::move(u));
    }

    [[nodiscard]] PotentialKind kind() const noexcept { return kind_; }
    [[nodiscard]] double u0() const noexcept { return u0_; }
    [[nodiscard]] double radius() const noexcept { return radius_; }
    [[nodiscard]] double epsilon() const noexcept { return epsilon_; }
    [[nodiscard]] double alpha() const noexcept { return alpha_; }
    [[nodiscard]] double amplitude() const noexcept { return amplitude_; }
    [[nodiscard]] int kmax() const noexcept { return kmax_; }

    [[nodiscard]] std::string name() const
    {
        switch (kind_) {
        case PotentialKind::harmonic_well: return "harmonic_well";
        case PotentialKind::bump: return "bump";
        case PotentialKind::rough_hoelder: return "rough_hoelder";
        case PotentialKind::sampled: return "sampled";
        }
        return "unknown";
    }

    /// Copy with an automatic kmax fixed to ceil(log2(1/dx)).
    [[nodiscard]] Potential resolved_for(const Grid& g) const
    {
        Potential p = *this;
        if (p.kind_ == PotentialKind::rough_hoelder && p.kmax_ < 0)
            p.kmax_ = std::max(0, int(std::ceil(std::log2(1.0 / g.spacing()))));
        return p;
    }

    [[nodiscard]] double operator()(std::span<const double> x) const
    {
        switch (kind_) {
        case PotentialKind::harmonic_well: {
            double r2 = 0;
            for (double xi : x)
                r2 += xi * xi;
            return u0_ - r2;
        }
        case PotentialKind::bump:
            return bump_value(x);
        case PotentialKind::rough_hoelder: {
            if (kmax_ < 0)
                throw InvalidArgument("rough_hoelder potential with kmax=auto must be resolved on a grid");
            double w = 0;
            for (double xi : x)
                for (int k = 0; k <= kmax_; ++k)
                    w += std::pow(2.0, -alpha_ * k) * std::cos(std::ldexp(xi, k));
            return bump_value(x) + amplitude_ * w;
        }
        case PotentialKind::sampled: {
            if (x.size() != 1)
                throw InvalidArgument("sampled potentials are one-dimensional");
            const auto& xs = *xs_;
            const auto& us = *us_;
            if (x[0] <= xs.front())
                return us.front();
            if (x[0] >= xs.back())
                return us.back();
            const auto it = std::upper_bound(xs.begin(), xs.end(), x[0]);
            const std::size_t i = std::size_t(it - xs.begin());
            const double t = (x[0] - xs[i - 1]) / (xs[i] - xs[i - 1]);
            return (1 - t) * us[i - 1] + t * us[i];
        }
        }
        return 0.0;
    }

    [[nodiscard]] double operator()(double x) const { return (*this)(std::span<const double>(&x, 1)); }

    /// Half-width of a cube outside of which U <= 0.
    [[nodiscard]] double support_radius() const
    {
        switch (kind_) {
        case PotentialKind::harmonic_well:
            return u0_ > 0 ? std::sqrt(u0_) : 0.0;
        case PotentialKind::bump:
            return u0_ > 0 ? radius_ : 0.0;
        case PotentialKind::rough_hoelder: {
            const double wmax = 1.0 / (1.0 - std::pow(2.0, -alpha_));
            if (std::abs(amplitude_) * wmax >= epsilon_)
                throw InvalidArgument("rough_hoelder potential is positive arbitrarily far out");
            return radius_;
        }
        case PotentialKind::sampled:
            return std::max(std::abs(xs_->front()), std::abs(xs_->back()));
        }
        return 0.0;
    }

    /// Node values U(x_j) in flattened grid order.
    [[nodiscard]] RVector sample(const Grid& g) const
    {
        const Potential p = resolved_for(g);
        RVector u(g.size());
        for (long j = 0; j < g.size(); ++j) {
            const auto x = g.coordinates(j);
            u[j] = p(x);
            if (!std::isfinite(u[j]))
                throw InvalidArgument("potential sample is not finite");
        }
        return u;
    }

private:
    [[nodiscard]] double bump_value(std::span<const double> x) const
    {
        double r2 = 0;
        for (double xi : x)
            r2 += xi * xi;
        r2 /= radius_ * radius_;
        const double b = r2 < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - r2)) : 0.0;
        return (u0_ + epsilon_) * b - epsilon_;
    }

    PotentialKind kind_ = PotentialKind::harmonic_well;
    double u0_ = 1.0;
    double radius_ = 2.5;
    double epsilon_ = 1.0;
    double alpha_ = 0.5;
    double amplitude_ = 0.1;
    int kmax_ = -1;
    std::shared_ptr<const std::vector<double>> xs_, us_;
};

//
// operators on the grid
//

/// Factorization weighted = V diag(w) V^H of the discrete (Delta x^d-weighted) matrix.
struct SpectralFactor {
    CMatrix vectors;
    RVector weights;
};

/// Kernel A(x_j, x_k); (A phi)(x_j) = sum_k A(x_j, x_k) phi(x_k) dx^d.
class GridOperator {
public:
    GridOperator(Grid g, double hbar, CMatrix kernel)
        : grid_(g), hbar_(SemiclassicalParam(hbar).hbar), kernel_(std::move(kernel))
    {
        if (kernel_.rows() != g.size() || kernel_.cols() != g.size())
            throw GridMismatch("kernel size does not match the grid");
    }

    static GridOperator from_weighted(Grid g, double hbar, const CMatrix& weighted)
    {
        return {g, hbar, weighted / g.cell_volume()};
    }

    static GridOperator from_factor(Grid g, double hbar, SpectralFactor f)
    {
        CMatrix w = f.vectors * f.weights.cast<Complex>().asDiagonal() * f.vectors.adjoint();
        GridOperator op = from_weighted(g, hbar, w);
        op.factor_ = std::make_shared<const SpectralFactor>(std::move(f));
        return op;
    }

    static GridOperator identity(Grid g, double hbar)
    {
        return from_weighted(g, hbar, CMatrix::Identity(g.size(), g.size()));
    }

    [[nodiscard]] const Grid& grid() const noexcept { return grid_; }
    [[nodiscard]] double hbar() const noexcept { return hbar_; }
    [[nodiscard]] double h() const noexcept { return planck_h(hbar_); }
    [[nodiscard]] const CMatrix& kernel() const noexcept { return kernel_; }
    [[nodiscard]] CMatrix weighted() const { return kernel_ * grid_.cell_volume(); }
    [[nodiscard]] const SpectralFactor* factor() const noexcept { return factor_.get(); }

    [[nodiscard]] Complex trace() const { return kernel_.trace() * grid_.cell_volume(); }

    [[nodiscard]] GridOperator adjoint() const
    {
        GridOperator r{grid_, hbar_, kernel_.adjoint()};
        if (factor_ && factor_->weights.size() > 0)
            r.factor_ = factor_; // factors are only attached to Hermitian operators
        return r;
    }

    [[nodiscard]] bool is_hermitian(double tol = 1e-12) const
    {
        const double scale = std::max(1.0, kernel_.cwiseAbs().maxCoeff());
        return hermitian_defect(kernel_) <= tol * scale;
    }

    void check_compatible(const GridOperator& other) const
    {
        if (!(grid_ == other.grid_) || hbar_ != other.hbar_)
            throw GridMismatch("operators live on different grids or carry different hbar");
    }

    friend GridOperator operator+(const GridOperator& a, const GridOperator& b)
    {
        a.check_compatible(b);
        return {a.grid_, a.hbar_, a.kernel_ + b.kernel_};
    }
    friend GridOperator operator-(const GridOperator& a, const GridOperator& b)
    {
        a.check_compatible(b);
        return {a.grid_, a.hbar_, a.kernel_ - b.kernel_};
    }
    friend GridOperator operator*(Complex c, const GridOperator& a)
    {
        return {a.grid_, a.hbar_, c * a.kernel_};
    }
    /// Operator composition.
    friend GridOperator operator*(const GridOperator& a, const GridOperator& b)
    {
        a.check_compatible(b);
        return {a.grid_, a.hbar_, a.kernel_ * b.kernel_ * a.grid_.cell_volume()};
    }

private:
    Grid grid_;
    double hbar_;
    CMatrix kernel_;
    std::shared_ptr<const SpectralFactor> factor_;
};

/// Circulant matrix of -hbar^2 d^2/dx^2 on one axis (discrete form, no dx weight).
inline RMatrix kinetic_matrix_1d(const Grid& g, double hbar)
{
    const long m = g.points();
    std::vector<Complex> symbol(static_cast<std::size_t>(m));
    for (long k = 0; k < m; ++k) {
        const double kappa = g.wavenumber(k);
        symbol[std::size_t(k)] = hbar * hbar * kappa * kappa;
    }
    fft::transform(symbol, true);
    RMatrix t(m, m);
    for (long a = 0; a < m; ++a)
        for (long b = 0; b < m; ++b)
            t(a, b) = symbol[std::size_t(wrap_index(a - b, m))].real() / double(m);
    return 0.5 * (t + t.transpose());
}

/// Spectral first derivative on one axis (Nyquist mode dropped); real antisymmetric.
inline RMatrix derivative_matrix_1d(const Grid& g)
{
    const long m = g.points();
    std::vector<Complex> symbol(static_cast<std::size_t>(m));
    for (long k = 0; k < m; ++k)
        symbol[std::size_t(k)] = k == m / 2 ? Complex{} : Complex(0.0, g.wavenumber(k));
    fft::transform(symbol, true);
    RMatrix t(m, m);
    for (long a = 0; a < m; ++a)
        for (long b = 0; b < m; ++b)
            t(a, b) = symbol[std::size_t(wrap_index(a - b, m))].real() / double(m);
    return 0.5 * (t - t.transpose());
}

/// Lift a one-axis matrix to the full tensor grid acting on the given axis (0-based).
inline RMatrix lift_axis(const RMatrix& one, const Grid& g, int axis)
{
    const long m = g.points();
    const long n = g.size();
    const long stride = ipow(m, g.dim() - 1 - axis);
    RMatrix full = RMatrix::Zero(n, n);
    for (long row = 0; row < n; ++row) {
        const long digit = (row / stride) % m;
        const long base = row - digit * stride;
        for (long c = 0; c < m; ++c)
            full(row, base + c * stride) = one(digit, c);
    }
    return full;
}

/// Discrete form of the position operator x_axis (diagonal).
inline RVector position_diagonal(const Grid& g, int axis)
{
    RVector x(g.size());
    const long stride = ipow(g.points(), g.dim() - 1 - axis);
    for (long j = 0; j < g.size(); ++j)
        x[j] = g.node((j / stride) % g.points());
    return x;
}

/// x: (i/hbar)[p, op] = [d/dx, op] with the spectral derivative; xi: [x/(i hbar), op].
/// Axis is 1-based.
inline GridOperator quantum_gradient(const GridOperator& op, GradientKind kind, int axis)
{
    const Grid& g = op.grid();
    if (axis < 1 || axis > g.dim())
        throw InvalidArgument("axis outside 1..d");
    const CMatrix w = op.weighted();
    CMatrix out;
    if (kind == GradientKind::x) {
        const RMatrix d1 = derivative_matrix_1d(g);
        const CMatrix d = (g.dim() == 1 ? d1 : lift_axis(d1, g, axis - 1)).cast<Complex>();
        out = d * w - w * d;
    } else {
        const RVector x = position_diagonal(g, axis - 1);
        out = (x.asDiagonal() * w - w * x.asDiagonal()) / Complex(0.0, op.hbar());
    }
    return GridOperator::from_weighted(g, op.hbar(), out);
}

/// -hbar^2 Laplacian + V with V = -U, built spectrally on the periodic grid.
inline GridOperator schrodinger_hamiltonian(const Grid& g, const Potential& u, double hbar)
{
    SemiclassicalParam param(hbar);
    const RMatrix t1 = kinetic_matrix_1d(g, param.hbar);
    RMatrix h = RMatrix::Zero(g.size(), g.size());
    for (int axis = 0; axis < g.dim(); ++axis)
        h += g.dim() == 1 ? t1 : lift_axis(t1, g, axis);
    const RVector us = u.sample(g);
    h.diagonal() -= us;
    return GridOperator::from_weighted(g, param.hbar, h.cast<Complex>());
}

struct SpectralProjection {
    GridOperator projector;
    std::vector<double> eigenvalues;  ///< full spectrum, ascending
    long rank = 0;                    ///< N_hbar
    long near_threshold = 0;          ///< eigenvalues within 1e-10 of the threshold (included)
    double boundary_amplitude = 0.0;  ///< largest |psi| of a kept state on the box faces
    std::vector<std::string> warnings;
};

/// 1_{(-inf, threshold]}(H) by full Hermitian eigendecomposition.
inline SpectralProjection spectral_projection(const GridOperator& hamiltonian, double threshold = 0.0)
{
    constexpr double tie = 1e-10;
    const Grid& g = hamiltonian.grid();
    const CMatrix w = hamiltonian.weighted();
    const double scale = std::max(1.0, w.cwiseAbs().maxCoeff());
    if (hermitian_defect(w) > 1e-12 * scale)
        throw InvalidArgument("spectral projection requires a Hermitian operator");

    RVector evals;
    CMatrix evecs;
    if (w.imag().cwiseAbs().maxCoeff() == 0.0) {
        Eigen::SelfAdjointEigenSolver<RMatrix> es(w.real());
        if (es.info() != Eigen::Success)
            throw NumericalFailure("eigensolver did not converge");
        evals = es.eigenvalues();
        evecs = es.eigenvectors().cast<Complex>();
    } else {
        Eigen::SelfAdjointEigenSolver<CMatrix> es(w);
        if (es.info() != Eigen::Success)
            throw NumericalFailure("eigensolver did not converge");
        evals = es.eigenvalues();
        evecs = es.eigenvectors();
    }

    std::vector<long> kept;
    long ties = 0;
    for (long i = 0; i < evals.size(); ++i) {
        if (evals[i] <= threshold + tie)
            kept.push_back(i);
        if (std::abs(evals[i] - threshold) <= tie)
            ++ties;
    }

    SpectralFactor f;
    f.vectors.resize(w.rows(), long(kept.size()));
    for (std::size_t c = 0; c < kept.size(); ++c)
        f.vectors.col(long(c)) = evecs.col(kept[c]);
    f.weights = RVector::Ones(long(kept.size()));

    double boundary = 0.0;
    const long m = g.points();
    for (long row = 0; row < g.size(); ++row) {
        std::vector<long> digits;
        unflatten(row, m, g.dim(), digits);
        const bool face = std::any_of(digits.begin(), digits.end(),
                                      [m](long v) { return v == 0 || v == m - 1; });
        if (!face)
            continue;
        for (long c = 0; c < f.vectors.cols(); ++c)
            boundary = std::max(boundary, std::abs(f.vectors(row, c)));
    }
    boundary /= std::sqrt(g.cell_volume());

    SpectralProjection out{GridOperator::from_factor(g, hamiltonian.hbar(), std::move(f)), {}, 0, 0, 0.0, {}};
    out.eigenvalues.assign(evals.data(), evals.data() + evals.size());
    out.rank = long(kept.size());
    out.near_threshold = ties;
    out.boundary_amplitude = boundary;
    if (ties > 0)
        out.warnings.push_back(std::to_string(ties) + " eigenvalue(s) within 1e-10 of the threshold were included");
    if (boundary > 1e-8)
        out.warnings.push_back("kept eigenfunctions reach " + std::to_string(boundary) +
                               " on the box boundary; enlarge the domain");
    return out;
}

//
// classical phase-space volume of {|xi|^2 <= U(x)}
//

struct PhaseVolume {
    double value = 0.0;
    double error_estimate = 0.0;
    bool converged = true;
};

namespace detail {

    inline double unit_ball_volume(int d)
    {
        return std::pow(pi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
    }

    /// Maximal sub-intervals of [a, b] on which f > 0, endpoints refined to roots.
    template <class F>
    std::vector<std::pair<double, double>> positive_intervals(F&& f, double a, double b, int scan)
    {
        std::vector<std::pair<double, double>> out;
        const double step = (b - a) / scan;
        auto refine_root = [&](double lo, double hi) {
            boost::math::tools::eps_tolerance<double> tol(50);
            std::uintmax_t iters = 200;
            auto r = boost::math::tools::toms748_solve(f, lo, hi, tol, iters);
            return 0.5 * (r.first + r.second);
        };
        double prev_x = a;
        double prev_f = f(a);
        double start = prev_f > 0 ? a : 0.0;
        bool inside = prev_f > 0;
        for (int i = 1; i <= scan; ++i) {
            const double x = i == scan ? b : a + i * step;
            const double fx = f(x);
            const bool pos = fx > 0;
            if (pos != inside) {
                const double root = (prev_f == 0.0) ? prev_x : (fx == 0.0 ? x : refine_root(prev_x, x));
                if (pos)
                    start = root;
                else
                    out.emplace_back(start, root);
                inside = pos;
            }
            prev_x = x;
            prev_f = fx;
        }
        if (inside)
            out.emplace_back(start, b);
        return out;
    }

    struct VolumeIntegrator {
        const Potential& u;
        int d;
        double radius;
        double tolerance;
        double omega;
        double error = 0.0;
        bool converged = true;

        /// Integral over axes [axis, d) with the leading coordinates fixed in x.
        double integrate(std::vector<double>& x, int axis)
        {
            if (axis == d - 1) {
                auto f = [&](double t) {
                    x[std::size_t(axis)] = t;
                    return u(x);
                };
                double total = 0.0;
                boost::math::quadrature::tanh_sinh<double> ts(12);
                for (auto [a, b] : positive_intervals(f, -radius, radius, 4096)) {
                    double err = 0.0;
                    double l1 = 0.0;
                    const double v = ts.integrate(
                        [&](double t) {
                            x[std::size_t(axis)] = t;
                            const double w = u(x);
                            return w > 0 ? omega * std::pow(w, 0.5 * d) : 0.0;
                        },
                        a, b, tolerance, &err, &l1);
                    total += v;
                    error += err;
                    if (err > tolerance * std::max(1.0, std::abs(v)) * 10)
                        converged = false;
                }
                return total;
            }
            double err = 0.0;
            const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
                [&](double t) {
                    x[std::size_t(axis)] = t;
                    std::vector<double> inner = x;
                    return integrate(inner, axis + 1);
                },
                -radius, radius, 15, tolerance, &err);
            error += err;
            if (err > tolerance * std::max(1.0, std::abs(v)) * 10)
                converged = false;
            return v;
        }
    };

} // namespace detail

/// omega_d * integral of U_+^{d/2}, the Lebesgue measure of {|xi|^2 <= U(x)}.
inline PhaseVolume classical_phase_volume(const Potential& u, int d, double tolerance = 1e-8,
                                          const std::optional<Grid>& resolve_on = std::nullopt)
{
    if (d < 1)
        throw InvalidArgument("dimension must be >= 1");
    Potential pot = resolve_on ? u.resolved_for(*resolve_on) : u;
    if (pot.kind() == PotentialKind::rough_hoelder && pot.kmax() < 0)
        throw InvalidArgument("rough_hoelder kmax=auto needs a grid to resolve against");
    const double radius = pot.support_radius();
    if (radius <= 0.0)
        return {};
    detail::VolumeIntegrator vi{pot, d, radius * (1.0 + 1e-12), tolerance,
                                detail::unit_ball_volume(d)};
    std::vector<double> x(std::size_t(d), 0.0);
    PhaseVolume out;
    out.value = vi.integrate(x, 0);
    out.error_estimate = vi.error;
    out.converged = vi.converged;
    return out;
}

//
// band-limited refinement (d = 1)
//

/// Trigonometric interpolation of periodic samples onto factor-times finer nodes.
inline CVector interpolate_periodic(const CVector& v, long factor)
{
    const long m = v.size();
    const long mf = m * factor;
    std::vector<Complex> spec(v.data(), v.data() + m);
    fft::transform(spec, false);
    std::vector<Complex> padded(std::size_t(mf), Complex{});
    for (long k = 0; k < m / 2; ++k)
        padded[std::size_t(k)] = spec[std::size_t(k)];
    for (long k = m / 2 + 1; k < m; ++k)
        padded[std::size_t(mf - (m - k))] = spec[std::size_t(k)];
    const Complex nyq = spec[std::size_t(m / 2)];
    padded[std::size_t(m / 2)] += 0.5 * nyq;
    padded[std::size_t(mf - m / 2)] += 0.5 * nyq;
    fft::transform(padded, true);
    CVector out(mf);
    for (long j = 0; j < mf; ++j)
        out[j] = padded[std::size_t(j)] / double(m);
    return out;
}

/// Same operator on a grid with factor-times more points over the same box.
inline GridOperator refine(const GridOperator& op, long factor)
{
    const Grid& g = op.grid();
    if (g.dim() != 1)
        throw InvalidArgument("refine supports one-dimensional grids");
    if (factor < 1 || (factor & (factor - 1)) != 0)
        throw InvalidArgument("refinement factor must be a power of two");
    const Grid fine(g.half_width(), g.points() * factor, 1);
    if (const SpectralFactor* f = op.factor()) {
        SpectralFactor nf;
        nf.weights = f->weights;
        nf.vectors.resize(fine.points(), f->vectors.cols());
        const double scale = 1.0 / std::sqrt(double(factor));
        for (long c = 0; c < f->vectors.cols(); ++c)
            nf.vectors.col(c) = interpolate_periodic(f->vectors.col(c), factor) * scale;
        return GridOperator::from_factor(fine, op.hbar(), std::move(nf));
    }
    const long m = g.points();
    CMatrix half(fine.points(), m);
    for (long c = 0; c < m; ++c)
        half.col(c) = interpolate_periodic(op.kernel().col(c), factor);
    CMatrix full(fine.points(), fine.points());
    for (long r = 0; r < fine.points(); ++r)
        full.row(r) = interpolate_periodic(half.row(r).transpose(), factor).transpose();
    return {fine, op.hbar(), std::move(full)};
}

} // namespace srl::grid

#endif // SRL_GRID_HPP
