#ifndef SRL_TESTS_COMMON_HPP
#define SRL_TESTS_COMMON_HPP

#include "srl/fock.hpp"
#include "srl/grid.hpp"
#include "srl/phasespace.hpp"

#include <random>

namespace srl::test {

inline CMatrix random_matrix(std::mt19937_64& rng, long rows, long cols)
{
    std::normal_distribution<double> n(0.0, 1.0);
    CMatrix m(rows, cols);
    for (long c = 0; c < cols; ++c)
        for (long r = 0; r < rows; ++r)
            m(r, c) = Complex(n(rng), n(rng));
    return m;
}

inline double relative(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

/// Smooth operator B C B^H built from the first k Hermite functions at the given hbar.
struct SmoothOperators {
    grid::Grid g;
    double hbar;
    CMatrix basis; ///< discrete basis, columns orthonormal

    SmoothOperators(double hbar_, long points, int k = 6, double half_width = 0.0)
        : g(half_width > 0 ? half_width : std::sqrt(2.0 * hbar_ * (k + 1)) * 2.0 + 10.0 * std::sqrt(hbar_), points, 1),
          hbar(hbar_), basis(fock::discrete_basis(fock::FockSpace(k, 1, hbar_), g))
    {
    }

    [[nodiscard]] long rank() const { return basis.cols(); }

    [[nodiscard]] grid::GridOperator general(std::mt19937_64& rng) const
    {
        return grid::GridOperator::from_weighted(g, hbar, basis * random_matrix(rng, rank(), rank()) * basis.adjoint());
    }
    [[nodiscard]] grid::GridOperator hermitian(std::mt19937_64& rng) const
    {
        const CMatrix c = random_matrix(rng, rank(), rank());
        return grid::GridOperator::from_weighted(g, hbar, basis * (c + c.adjoint()) * basis.adjoint());
    }
    /// Orthogonal projection onto a random r-dimensional subspace of the span, with its factor.
    [[nodiscard]] grid::GridOperator projection(std::mt19937_64& rng, long r) const
    {
        Eigen::HouseholderQR<CMatrix> qr(random_matrix(rng, rank(), r));
        const CMatrix q = qr.householderQ() * CMatrix::Identity(rank(), r);
        grid::SpectralFactor f{basis * q, RVector::Ones(r)};
        return grid::GridOperator::from_factor(g, hbar, std::move(f));
    }
};

} // namespace srl::test

#endif // SRL_TESTS_COMMON_HPP
