#ifndef SRL_FOCK_HPP
#define SRL_FOCK_HPP

#include "srl/core.hpp"
#include "srl/grid.hpp"

#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace srl::fock {

/// Hermite basis psi_alpha, alpha in {0..K-1}^d, enumerated lexicographically.
class FockSpace {
public:
    FockSpace(int cutoff, int dim, double hbar) : K_(cutoff), d_(dim), hbar_(SemiclassicalParam(hbar).hbar)
    {
        if (cutoff < 1)
            throw InvalidArgument("cutoff must be >= 1");
        if (dim < 1)
            throw InvalidArgument("dimension must be >= 1");
        size_ = ipow(K_, d_);
    }

    [[nodiscard]] int cutoff() const noexcept { return K_; }
    [[nodiscard]] int dim() const noexcept { return d_; }
    [[nodiscard]] double hbar() const noexcept { return hbar_; }
    [[nodiscard]] double h() const noexcept { return planck_h(hbar_); }
    [[nodiscard]] long size() const noexcept { return size_; }

    [[nodiscard]] std::vector<long> multi_index(long i) const
    {
        std::vector<long> alpha;
        unflatten(i, K_, d_, alpha);
        return alpha;
    }
    [[nodiscard]] long index_of(const std::vector<long>& alpha) const
    {
        if (long(alpha.size()) != d_)
            throw InvalidArgument("multi-index has wrong length");
        for (long a : alpha)
            if (a < 0 || a >= K_)
                throw InvalidArgument("multi-index entry outside the cutoff");
        return flatten(alpha, K_);
    }
    [[nodiscard]] long level(long i) const
    {
        long s = 0;
        for (long a : multi_index(i))
            s += a;
        return s;
    }
    /// True when some alpha_i == K-1, where one ladder step leaves the basis.
    [[nodiscard]] bool on_outer_layer(long i) const
    {
        for (long a : multi_index(i))
            if (a == K_ - 1)
                return true;
        return false;
    }

    friend bool operator==(const FockSpace& a, const FockSpace& b) noexcept
    {
        return a.K_ == b.K_ && a.d_ == b.d_ && a.hbar_ == b.hbar_;
    }

private:
    int K_;
    int d_;
    double hbar_;
    long size_ = 0;
};

using SpacePtr = std::shared_ptr<const FockSpace>;

inline SpacePtr make_space(int cutoff, int dim, double hbar)
{
    return std::make_shared<const FockSpace>(cutoff, dim, hbar);
}

struct FockOperator {
    CMatrix matrix;
    SpacePtr space;
    bool self_adjoint = false;
    bool normalized = true;          ///< false when the hbar-N linkage was overridden
    bool truncation_affected = false;///< outer layer entries are not exact

    FockOperator(CMatrix m, SpacePtr s, bool hermitian = false) : matrix(std::move(m)), space(std::move(s)), self_adjoint(hermitian)
    {
        if (!space)
            throw InvalidArgument("operator needs a Fock space");
        if (matrix.rows() != space->size() || matrix.cols() != space->size())
            throw InvalidArgument("matrix size does not match the Fock space");
        if (self_adjoint && hermitian_defect(matrix) > 1e-12)
            throw InvalidArgument("operator flagged self-adjoint is not Hermitian");
    }

    [[nodiscard]] double hbar() const noexcept { return space->hbar(); }
    [[nodiscard]] double h() const noexcept { return space->h(); }
    [[nodiscard]] int dim() const noexcept { return space->dim(); }

    /// Rows and columns with every alpha_i < K-1.
    [[nodiscard]] std::vector<long> interior_indices() const
    {
        std::vector<long> idx;
        for (long i = 0; i < space->size(); ++i)
            if (!space->on_outer_layer(i))
                idx.push_back(i);
        return idx;
    }

    [[nodiscard]] CMatrix interior_block() const
    {
        const auto idx = interior_indices();
        CMatrix b(long(idx.size()), long(idx.size()));
        for (std::size_t r = 0; r < idx.size(); ++r)
            for (std::size_t c = 0; c < idx.size(); ++c)
                b(long(r), long(c)) = matrix(idx[r], idx[c]);
        return b;
    }
};

inline void check_axis(const FockSpace& s, int axis)
{
    if (axis < 1 || axis > s.dim())
        throw InvalidArgument("axis " + std::to_string(axis) + " outside 1.." + std::to_string(s.dim()));
}

struct Ladder {
    FockOperator lower;
    FockOperator raise;
};

/// a psi_n = sqrt(2 hbar n) psi_{n-1} and a* = a^H on the given axis (1-based).
inline Ladder ladder_matrices(const SpacePtr& space, int axis)
{
    check_axis(*space, axis);
    if (space->cutoff() < 2)
        throw InvalidArgument("ladder operators need cutoff >= 2");
    const long n = space->size();
    CMatrix a = CMatrix::Zero(n, n);
    for (long col = 0; col < n; ++col) {
        auto alpha = space->multi_index(col);
        const long k = alpha[std::size_t(axis - 1)];
        if (k == 0)
            continue;
        alpha[std::size_t(axis - 1)] = k - 1;
        a(space->index_of(alpha), col) = std::sqrt(2.0 * space->hbar() * double(k));
    }
    CMatrix ad = a.adjoint();
    return {FockOperator(std::move(a), space), FockOperator(std::move(ad), space)};
}

/// x = (a + a*) / 2.
inline FockOperator position_matrix(const SpacePtr& space, int axis)
{
    const Ladder l = ladder_matrices(space, axis);
    return FockOperator(0.5 * (l.lower.matrix + l.raise.matrix), space, true);
}

/// p = (a - a*) / (2i).
inline FockOperator momentum_matrix(const SpacePtr& space, int axis)
{
    const Ladder l = ladder_matrices(space, axis);
    return FockOperator((l.lower.matrix - l.raise.matrix) / Complex(0.0, 2.0), space, true);
}

inline long binomial(long n, long k)
{
    if (k < 0 || n < 0 || k > n)
        return 0;
    k = std::min(k, n - k);
    long r = 1;
    for (long i = 1; i <= k; ++i)
        r = r * (n - k + i) / i;
    return r;
}

/// hbar fixed by N h^d = 1, N = binom(d + n, d).
inline double linked_hbar(int n, int d)
{
    const double count = double(binomial(d + n, d));
    return std::pow(count, -1.0 / d) / (2.0 * pi);
}

inline int default_cutoff(int n) { return n + 2 + 4; }

/// Projection onto all psi_alpha with |alpha|_1 <= n. With hbar_override the
/// normalization N h^d = 1 is broken and the result is marked non-normalized.
inline FockOperator harmonic_projection(int n, int d, int cutoff, std::optional<double> hbar_override = std::nullopt)
{
    if (n < 0)
        throw InvalidArgument("level n must be >= 0");
    if (cutoff < n + 2)
        throw InvalidArgument("cutoff " + std::to_string(cutoff) + " < n + 2 = " + std::to_string(n + 2) +
                              " would truncate a ladder step");
    const double hbar = hbar_override ? *hbar_override : linked_hbar(n, d);
    auto space = make_space(cutoff, d, hbar);
    CMatrix p = CMatrix::Zero(space->size(), space->size());
    for (long i = 0; i < space->size(); ++i)
        if (space->level(i) <= n)
            p(i, i) = 1.0;
    FockOperator out(std::move(p), space, true);
    out.normalized = !hbar_override.has_value();
    return out;
}

/// ||D_xi1 P||_{L^p} from the closed-form trace sum, with the linked hbar.
inline double gradient_xi_schatten_exact(int n, int d, double p)
{
    if (!(p >= 1.0))
        throw InvalidArgument("Schatten exponent must be >= 1");
    if (n < 0 || d < 1)
        throw InvalidArgument("need n >= 0 and d >= 1");
    const double hbar = linked_hbar(n, d);
    const double h = planck_h(hbar);
    if (is_infinite_exponent(p))
        return std::sqrt(double(n + 1) / (2.0 * hbar));
    double sum = 0.0;
    if (d == 1) {
        sum = std::pow(double(n + 1), 0.5 * p);
    } else {
        for (long k = 1; k <= n + 1; ++k)
            sum += double(binomial(d + n - k - 1, d - 2)) * std::pow(double(k), 0.5 * p);
    }
    const double trace = 2.0 * std::pow(h, d) * sum / std::pow(2.0 * hbar, 0.5 * p);
    return std::pow(trace, 1.0 / p);
}

using srl::GradientKind;

inline FockOperator require_same_space(const FockOperator& a, const FockOperator& b)
{
    if (!(*a.space == *b.space))
        throw InvalidArgument("operators live on different Fock spaces");
    return a;
}

/// x: (i/hbar)[p, op]; xi: [x/(i hbar), op].
inline FockOperator quantum_gradient(const FockOperator& op, GradientKind kind, int axis)
{
    const double hbar = op.hbar();
    CMatrix g;
    if (kind == GradientKind::x) {
        const FockOperator pm = momentum_matrix(op.space, axis);
        g = Complex(0.0, 1.0 / hbar) * (pm.matrix * op.matrix - op.matrix * pm.matrix);
    } else {
        const FockOperator xm = position_matrix(op.space, axis);
        g = (xm.matrix * op.matrix - op.matrix * xm.matrix) / Complex(0.0, hbar);
    }
    FockOperator out(std::move(g), op.space);
    out.normalized = op.normalized;
    out.truncation_affected = true;
    return out;
}

//
// bridge to the position grid
//

/// Row k holds psi_k(x_j) on one grid axis, by the three-term recurrence.
inline RMatrix hermite_samples(const FockSpace& space, const grid::Grid& g)
{
    const double hbar = space.hbar();
    const int kk = space.cutoff();
    const long m = g.points();
    RMatrix psi = RMatrix::Zero(kk, m);
    const double norm0 = std::pow(pi * hbar, -0.25);
    for (long j = 0; j < m; ++j) {
        const double x = g.node(j);
        psi(0, j) = norm0 * std::exp(-x * x / (2.0 * hbar));
        if (kk > 1)
            psi(1, j) = x * std::sqrt(2.0 / hbar) * psi(0, j);
        for (int n = 1; n + 1 < kk; ++n)
            psi(n + 1, j) = x * std::sqrt(2.0 / (hbar * (n + 1))) * psi(n, j) -
                            std::sqrt(double(n) / double(n + 1)) * psi(n - 1, j);
    }
    const RMatrix gram = psi * psi.transpose() * g.spacing();
    const double defect = (gram - RMatrix::Identity(kk, kk)).cwiseAbs().maxCoeff();
    if (!(defect <= 1e-8)) {
        const double needed = std::sqrt(2.0 * hbar * (kk + 1)) + 5.0 * std::sqrt(hbar);
        const double kmax = std::sqrt(2.0 * (kk + 1) / hbar) + 5.0 / std::sqrt(hbar);
        std::ostringstream msg;
        msg << "Hermite basis not orthonormal on the grid (Gram defect " << defect << "); need L >= "
            << needed << " (have " << g.half_width() << ") and M >= " << long(std::ceil(kmax * g.half_width() / pi * 2))
            << " (have " << m << ")";
        throw DomainTooNarrow(msg.str());
    }
    return psi;
}

/// Columns are tensor-product Hermite functions psi_alpha(x_j) * sqrt(dx^d), rows in grid order.
inline CMatrix discrete_basis(const FockSpace& space, const grid::Grid& g)
{
    if (space.dim() != g.dim())
        throw GridMismatch("Fock space and grid dimensions differ");
    const RMatrix psi = hermite_samples(space, g);
    const double w = std::sqrt(g.cell_volume());
    const long m = g.points();
    CMatrix basis(g.size(), space.size());
    std::vector<long> xi, alpha;
    for (long col = 0; col < space.size(); ++col) {
        alpha = space.multi_index(col);
        for (long row = 0; row < g.size(); ++row) {
            unflatten(row, m, g.dim(), xi);
            double v = w;
            for (int a = 0; a < g.dim(); ++a)
                v *= psi(alpha[std::size_t(a)], xi[std::size_t(a)]);
            basis(row, col) = v;
        }
    }
    return basis;
}

/// Kernel sum_{alpha beta} psi_alpha(x) M_{alpha beta} psi_beta(y); diagonal
/// sources also carry their spectral factor.
inline grid::GridOperator fock_to_grid(const FockOperator& op, const grid::Grid& g)
{
    const CMatrix basis = discrete_basis(*op.space, g);
    const CMatrix& m = op.matrix;
    const bool diagonal = (m - CMatrix(m.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0 &&
                          m.diagonal().imag().cwiseAbs().maxCoeff() == 0.0;
    if (diagonal) {
        std::vector<long> cols;
        for (long i = 0; i < m.rows(); ++i)
            if (m(i, i) != Complex{})
                cols.push_back(i);
        grid::SpectralFactor f;
        f.vectors.resize(g.size(), long(cols.size()));
        f.weights.resize(long(cols.size()));
        for (std::size_t c = 0; c < cols.size(); ++c) {
            f.vectors.col(long(c)) = basis.col(cols[c]);
            f.weights[long(c)] = m(cols[c], cols[c]).real();
        }
        return grid::GridOperator::from_factor(g, op.hbar(), std::move(f));
    }
    return grid::GridOperator::from_weighted(g, op.hbar(), basis * m * basis.adjoint());
}

/// Grid for a level-n projector: half-width twice the Gaussian-safe core, M points.
inline grid::Grid harmonic_grid(int n, int cutoff, long points, double width_factor = 2.0)
{
    const double hbar = linked_hbar(n, 1);
    const double core = std::sqrt(2.0 * hbar * (cutoff + 1)) + 5.0 * std::sqrt(hbar);
    return {width_factor * core, points, 1};
}

} // namespace srl::fock

#endif // SRL_FOCK_HPP
