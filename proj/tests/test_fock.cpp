#include "common.hpp"
#include "srl/norms.hpp"

#include <gtest/gtest.h>

using namespace srl;
using fock::FockOperator;

namespace {

CMatrix abs_power(const CMatrix& g, double p)
{
    Eigen::SelfAdjointEigenSolver<CMatrix> es(g.adjoint() * g);
    const RVector ev = es.eigenvalues().cwiseMax(0.0).array().pow(0.5 * p);
    return es.eigenvectors() * ev.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
}

} // namespace

TEST(Ladder, PositionAtCutoffTwo)
{
    const auto space = fock::make_space(2, 1, 1.0);
    const CMatrix x = fock::position_matrix(space, 1).matrix;
    EXPECT_NEAR(std::abs(x(0, 0)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(x(1, 1)), 0.0, 1e-15);
    EXPECT_NEAR(x(0, 1).real(), std::sqrt(2.0) / 2.0, 1e-15);
    EXPECT_NEAR(x(1, 0).real(), std::sqrt(2.0) / 2.0, 1e-15);
}

TEST(Ladder, PositionIsRealSymmetricTridiagonal)
{
    const auto space = fock::make_space(12, 1, 0.3);
    const CMatrix x = fock::position_matrix(space, 1).matrix;
    EXPECT_EQ(x.imag().cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(hermitian_defect(x), 0.0);
    for (long r = 0; r < x.rows(); ++r)
        for (long c = 0; c < x.cols(); ++c)
            if (std::abs(r - c) != 1) {
                EXPECT_EQ(x(r, c), Complex{}) << r << ',' << c;
            }
}

TEST(Ladder, CanonicalCommutatorOnInterior)
{
    for (int d : {1, 2}) {
        const double hbar = 0.17;
        const auto space = fock::make_space(7, d, hbar);
        for (int axis = 1; axis <= d; ++axis) {
            const CMatrix x = fock::position_matrix(space, axis).matrix;
            const CMatrix p = fock::momentum_matrix(space, axis).matrix;
            const CMatrix c = x * p - p * x;
            for (long i = 0; i < space->size(); ++i) {
                if (space->on_outer_layer(i))
                    continue;
                for (long j = 0; j < space->size(); ++j) {
                    if (space->on_outer_layer(j))
                        continue;
                    const Complex expect = i == j ? Complex(0.0, hbar) : Complex{};
                    EXPECT_NEAR(std::abs(c(i, j) - expect), 0.0, 1e-14);
                }
            }
        }
    }
}

TEST(Ladder, AxisOutOfRangeThrows)
{
    const auto space = fock::make_space(4, 2, 1.0);
    EXPECT_THROW(fock::ladder_matrices(space, 0), InvalidArgument);
    EXPECT_THROW(fock::ladder_matrices(space, 3), InvalidArgument);
}

TEST(Projection, GroundStateLinkage)
{
    const FockOperator p = fock::harmonic_projection(0, 1, 6);
    EXPECT_NEAR(p.hbar(), 1.0 / (2.0 * pi), 1e-16);
    EXPECT_NEAR(p.h(), 1.0, 1e-15);
    EXPECT_EQ(p.matrix(0, 0), Complex(1.0));
    EXPECT_EQ(p.matrix.cwiseAbs().sum(), 1.0);
    EXPECT_TRUE(p.normalized);
}

TEST(Projection, CountsMultiIndices)
{
    const FockOperator p = fock::harmonic_projection(2, 2, 4);
    EXPECT_EQ(p.matrix.trace(), Complex(6.0));
    EXPECT_NEAR(std::pow(p.h(), 2) * 6.0, 1.0, 1e-14);
}

TEST(Projection, IdempotentAndNormalized)
{
    for (int d : {1, 2, 3})
        for (int n : {0, 1, 3, 5}) {
            const FockOperator p = fock::harmonic_projection(n, d, fock::default_cutoff(n));
            const double count = double(fock::binomial(d + n, d));
            EXPECT_NEAR((p.matrix * p.matrix - p.matrix).cwiseAbs().maxCoeff(), 0.0, 1e-12);
            EXPECT_NEAR((p.matrix * p.matrix).trace().real(), count, 1e-12);
            EXPECT_NEAR(std::pow(p.h(), d) * p.matrix.trace().real(), 1.0, 1e-12);
        }
}

TEST(Projection, CutoffTooSmallThrows)
{
    EXPECT_THROW(fock::harmonic_projection(5, 1, 6), InvalidArgument);
    EXPECT_NO_THROW(fock::harmonic_projection(5, 1, 7));
}

TEST(Projection, OverrideIsMarked)
{
    const FockOperator p = fock::harmonic_projection(3, 1, 9, 0.25);
    EXPECT_FALSE(p.normalized);
    EXPECT_EQ(p.hbar(), 0.25);
}

TEST(ExactGradient, L2LawInOneDimension)
{
    for (int n : {0, 1, 8, 16, 32, 64, 128}) {
        const double hbar = fock::linked_hbar(n, 1);
        EXPECT_LE(test::relative(fock::gradient_xi_schatten_exact(n, 1, 2.0), 1.0 / std::sqrt(hbar)), 1e-13);
    }
    EXPECT_NEAR(fock::gradient_xi_schatten_exact(0, 1, 2.0), std::sqrt(2.0 * pi), 1e-13);
    EXPECT_NEAR(fock::gradient_xi_schatten_exact(0, 1, 2.0), 2.50663, 1e-5);
}

TEST(ExactGradient, L1Bound)
{
    for (int n = 0; n <= 200; n += 7)
        EXPECT_LE(fock::gradient_xi_schatten_exact(n, 1, 1.0), 2.0 * std::sqrt(pi) * (1 + 1e-14));
}

TEST(ExactGradient, RejectsSmallExponent) { EXPECT_THROW(fock::gradient_xi_schatten_exact(3, 1, 0.5), InvalidArgument); }

TEST(QuantumGradient, IdentityHasZeroGradient)
{
    const auto space = fock::make_space(8, 2, 0.2);
    const FockOperator id(CMatrix::Identity(space->size(), space->size()), space, true);
    for (auto kind : {GradientKind::x, GradientKind::xi})
        for (int axis : {1, 2})
            EXPECT_NEAR(fock::quantum_gradient(id, kind, axis).interior_block().cwiseAbs().maxCoeff(), 0.0, 1e-14);
}

TEST(QuantumGradient, GroundStateModulus)
{
    const FockOperator p = fock::harmonic_projection(0, 1, 6);
    const FockOperator g = fock::quantum_gradient(p, GradientKind::xi, 1);
    EXPECT_TRUE(g.truncation_affected);
    const CMatrix sq = g.matrix.adjoint() * g.matrix;
    CMatrix expect = CMatrix::Zero(6, 6);
    expect(0, 0) = expect(1, 1) = 1.0 / (2.0 * p.hbar());
    EXPECT_NEAR((sq - expect).cwiseAbs().maxCoeff(), 0.0, 1e-12);
}

TEST(QuantumGradient, EntriesMatchLadderConstruction)
{
    // [x/(i hbar), P] only couples |alpha| = n with |alpha| = n + 1, entries sqrt((k+1)/(2 hbar))
    const int n = 4;
    const FockOperator p = fock::harmonic_projection(n, 1, fock::default_cutoff(n));
    const CMatrix g = fock::quantum_gradient(p, GradientKind::xi, 1).matrix;
    const double hbar = p.hbar();
    for (long r = 0; r < g.rows(); ++r)
        for (long c = 0; c < g.cols(); ++c) {
            double expect = 0.0;
            if (r == n && c == n + 1)
                expect = std::sqrt((n + 1) / (2.0 * hbar));
            if (r == n + 1 && c == n)
                expect = std::sqrt((n + 1) / (2.0 * hbar));
            EXPECT_NEAR(std::abs(g(r, c)), expect, 1e-12) << r << ',' << c;
        }
}

TEST(QuantumGradient, PowerStructure)
{
    for (int d : {1, 2})
        for (int n : {1, 3})
            for (double p : {1.0, 2.0, 3.0}) {
                const FockOperator proj = fock::harmonic_projection(n, d, fock::default_cutoff(n));
                const auto& space = *proj.space;
                const double hbar = proj.hbar();
                const CMatrix lhs = abs_power(fock::quantum_gradient(proj, GradientKind::xi, 1).matrix, p);
                CMatrix rhs = CMatrix::Zero(space.size(), space.size());
                for (long i = 0; i < space.size(); ++i) {
                    if (space.level(i) != n)
                        continue;
                    auto alpha = space.multi_index(i);
                    const double w = std::pow(2.0 * hbar, -0.5 * p) * std::pow(double(alpha[0] + 1), 0.5 * p);
                    rhs(i, i) += w;
                    alpha[0] += 1;
                    const long j = space.index_of(alpha);
                    rhs(j, j) += w;
                }
                EXPECT_NEAR((lhs - rhs).cwiseAbs().maxCoeff() / rhs.cwiseAbs().maxCoeff(), 0.0, 1e-10)
                    << "d=" << d << " n=" << n << " p=" << p;
            }
}

TEST(QuantumGradient, ExactMatchesMatrixPath)
{
    for (int d : {1, 2})
        for (int n = 0; n <= 8; ++n) {
            const FockOperator proj = fock::harmonic_projection(n, d, fock::default_cutoff(n));
            const FockOperator g = fock::quantum_gradient(proj, GradientKind::xi, 1);
            for (double p : {1.0, 2.0, 4.0, infinity}) {
                const double matrix = norms::schatten(g, p, true).value;
                const double exact = fock::gradient_xi_schatten_exact(n, d, p);
                EXPECT_LE(test::relative(matrix, exact), 1e-10) << "d=" << d << " n=" << n << " p=" << p;
            }
        }
}

TEST(QuantumGradient, XAndXiNormsAgree)
{
    for (int d : {1, 2})
        for (int n : {2, 5}) {
            const FockOperator proj = fock::harmonic_projection(n, d, fock::default_cutoff(n));
            for (int axis = 1; axis <= d; ++axis)
                for (double p : {1.0, 2.0, infinity}) {
                    const double a = norms::schatten(fock::quantum_gradient(proj, GradientKind::xi, axis), p, true).value;
                    const double b = norms::schatten(fock::quantum_gradient(proj, GradientKind::x, axis), p, true).value;
                    EXPECT_LE(test::relative(a, b), 1e-12);
                }
        }
}

TEST(QuantumGradient, ScaledConstantsAreStable)
{
    for (double p : {1.0, 4.0, infinity}) {
        std::vector<double> scaled;
        for (int n : {8, 16, 32, 64, 128}) {
            const FockOperator proj = fock::harmonic_projection(n, 1, fock::default_cutoff(n));
            const double v = norms::schatten(fock::quantum_gradient(proj, GradientKind::xi, 1), p, true).value;
            const double dual = is_infinite_exponent(p) ? 1.0 : 1.0 - 1.0 / p;
            scaled.push_back(v * std::pow(proj.h(), dual));
        }
        const auto [lo, hi] = std::minmax_element(scaled.begin(), scaled.end());
        EXPECT_LE((*hi - *lo) / *lo, 0.10) << "p=" << p;
    }
}

TEST(Hermite, GroundStateSamples)
{
    const double hbar = 0.05;
    const fock::FockSpace space(10, 1, hbar);
    const grid::Grid g(3.0, 256);
    const RMatrix psi = fock::hermite_samples(space, g);
    for (long j = 0; j < g.points(); ++j) {
        const double x = g.node(j);
        EXPECT_NEAR(psi(0, j), std::pow(pi * hbar, -0.25) * std::exp(-x * x / (2 * hbar)), 1e-13);
    }
}

TEST(Hermite, OrthonormalAndParity)
{
    const fock::FockSpace space(12, 1, 0.1);
    const grid::Grid g(4.0, 128);
    const RMatrix psi = fock::hermite_samples(space, g);
    const RMatrix gram = psi * psi.transpose() * g.spacing();
    EXPECT_NEAR((gram - RMatrix::Identity(12, 12)).cwiseAbs().maxCoeff(), 0.0, 1e-8);
    for (long j = 1; j < g.points(); ++j)
        EXPECT_EQ(psi(1, j), -psi(1, g.points() - j));
}

TEST(Hermite, NarrowDomainDiagnostic)
{
    const fock::FockSpace space(20, 1, 0.5);
    const grid::Grid g(2.0, 64);
    try {
        (void)fock::hermite_samples(space, g);
        FAIL() << "expected DomainTooNarrow";
    } catch (const DomainTooNarrow& e) {
        EXPECT_NE(std::string(e.what()).find("need L >="), std::string::npos);
    }
}
