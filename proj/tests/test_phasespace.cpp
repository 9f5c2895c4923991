#include "common.hpp"
#include "srl/norms.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace srl;
using grid::Grid;
using grid::GridOperator;
using phasespace::PhaseField;
using phasespace::PhasePoint;

namespace {

PhasePoint point(double x, double xi) { return {{x}, {xi}}; }

double max_abs(const CMatrix& a) { return a.cwiseAbs().maxCoeff(); }

/// Sum of a few Gaussian bumps with random centres and signs, smooth on the phase grid.
PhaseField smooth_field(const Grid& g, double hbar, std::mt19937_64& rng, bool positive)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double xi_max = pi * hbar / (2.0 * g.spacing());
    std::vector<std::array<double, 3>> bumps;
    for (int i = 0; i < 4; ++i)
        bumps.push_back({0.3 * g.half_width() * u(rng), 0.3 * xi_max * u(rng), positive ? 0.5 + 0.5 * u(rng) + 0.5 : u(rng)});
    return PhaseField::sample(g, hbar, [&](const std::vector<double>& x, const std::vector<double>& xi) {
        double v = 0.0;
        for (const auto& b : bumps)
            v += b[2] * std::exp(-((x[0] - b[0]) * (x[0] - b[0]) + (xi[0] - b[1]) * (xi[0] - b[1])) / 0.5);
        return Complex(v, 0.0);
    });
}

GridOperator ground_state(const Grid& g, double hbar)
{
    return fock::fock_to_grid(fock::harmonic_projection(0, 1, 6, hbar), g);
}

} // namespace

TEST(Wigner, GroundStateGaussian)
{
    const double hbar = 0.1;
    const Grid g(4.0, 256);
    const PhaseField f = phasespace::wigner(ground_state(g, hbar));
    EXPECT_EQ(f.max_imag(), 0.0);
    double err = 0.0;
    for (long r = 0; r < g.size(); ++r)
        for (long c = 0; c < g.size(); ++c) {
            const double x = g.node(r), xi = f.xi(c);
            err = std::max(err, std::abs(f.values()(r, c).real() - 2.0 * std::exp(-(x * x + xi * xi) / hbar)));
        }
    EXPECT_LE(err, 1e-6);
}

TEST(Wigner, ZeroOperator)
{
    const Grid g(2.0, 32);
    EXPECT_EQ(max_abs(phasespace::wigner(GridOperator(g, 0.1, CMatrix::Zero(32, 32))).values()), 0.0);
}

TEST(Wigner, PlancherelAndTrace)
{
    std::mt19937_64 rng(11);
    const test::SmoothOperators ops(0.1, 128);
    for (int trial = 0; trial < 3; ++trial) {
        const GridOperator op = ops.general(rng);
        const PhaseField f = phasespace::wigner(op);
        const double lhs = op.h() * (op.weighted().adjoint() * op.weighted()).trace().real();
        EXPECT_LE(test::relative(f.values().squaredNorm() * f.cell(), lhs), 1e-6);
        const Complex tr = op.h() * op.trace();
        EXPECT_LE(std::abs(f.integral() - tr) / std::abs(tr), 1e-8);
    }
}

TEST(Wigner, WeylRoundTrip)
{
    std::mt19937_64 rng(12);
    const test::SmoothOperators ops(0.1, 128);
    for (int trial = 0; trial < 3; ++trial) {
        const GridOperator op = trial == 0 ? ops.hermitian(rng) : ops.general(rng);
        const PhaseField f = phasespace::wigner(op);
        const GridOperator q = phasespace::weyl_quantize(f);
        const PhaseField back = phasespace::wigner(q);
        EXPECT_LE(max_abs(back.values() - f.values()), 1e-8 * std::max(1.0, max_abs(f.values())));
        EXPECT_LE(max_abs(q.weighted() - op.weighted()), 1e-8 * max_abs(op.weighted()));
        if (trial == 0) {
            EXPECT_TRUE(q.is_hermitian(1e-10));
        }
    }
}

TEST(Weyl, ConstantSymbolActsAsScaledIdentity)
{
    const double hbar = 0.1;
    const Grid g(4.0, 128);
    const PhaseField c(g, hbar, CMatrix::Constant(128, 128, Complex(2.5)));
    const GridOperator q = phasespace::weyl_quantize(c);
    const CMatrix b = fock::discrete_basis(fock::FockSpace(6, 1, hbar), g);
    EXPECT_LE(max_abs(b.adjoint() * q.weighted() * b - 2.5 * CMatrix::Identity(6, 6)), 1e-8);
}

TEST(Weyl, TraceIdentity)
{
    std::mt19937_64 rng(13);
    const Grid g(4.0, 128);
    const PhaseField f = smooth_field(g, 0.1, rng, false);
    const GridOperator q = phasespace::weyl_quantize(f);
    const Complex lhs = q.h() * q.trace();
    EXPECT_LE(std::abs(lhs - f.integral()) / std::abs(f.integral()), 1e-8);
}

TEST(Weyl, GaussianSymbolGivesGroundState)
{
    const double hbar = 0.1;
    const Grid g(4.0, 256);
    const PhaseField f = PhaseField::sample(g, hbar, [&](const std::vector<double>& x, const std::vector<double>& xi) {
        return Complex(2.0 * std::exp(-(x[0] * x[0] + xi[0] * xi[0]) / hbar), 0.0);
    });
    const CMatrix diff = phasespace::weyl_quantize(f).weighted() - ground_state(g, hbar).weighted();
    EXPECT_LE(norms::singular_values(diff).maxCoeff(), 1e-5);
}

TEST(Translate, ZeroIsIdentityAndNormsArePreserved)
{
    std::mt19937_64 rng(21);
    const test::SmoothOperators ops(0.1, 128);
    const GridOperator op = ops.general(rng);
    EXPECT_EQ(max_abs(phasespace::translate(op, point(0, 0)).kernel() - op.kernel()), 0.0);
    const double dx = ops.g.spacing();
    const double dk = phasespace::compatible_xi_step(ops.g, ops.hbar);
    const GridOperator t = phasespace::translate(op, point(3 * dx, -2 * dk));
    for (double p : {1.0, 2.0, 3.0, infinity})
        EXPECT_LE(test::relative(norms::schatten(t, p).value, norms::schatten(op, p).value), 1e-12);
}

TEST(Translate, Composition)
{
    std::mt19937_64 rng(22);
    const test::SmoothOperators ops(0.1, 128);
    const GridOperator op = ops.hermitian(rng);
    const double dx = ops.g.spacing();
    const double dk = phasespace::compatible_xi_step(ops.g, ops.hbar);
    const PhasePoint z1 = point(2 * dx, 5 * dk), z2 = point(-7 * dx, 3 * dk);
    const GridOperator a = phasespace::translate(phasespace::translate(op, z2), z1);
    const GridOperator b = phasespace::translate(op, z1 + z2);
    EXPECT_LE(max_abs(a.kernel() - b.kernel()), 1e-12 * max_abs(op.kernel()));
}

TEST(Translate, MatchesUnitaryConjugationInBothConventions)
{
    std::mt19937_64 rng(23);
    const test::SmoothOperators ops(0.1, 128);
    const GridOperator op = ops.general(rng);
    const PhasePoint z = point(4 * ops.g.spacing(), 3 * phasespace::compatible_xi_step(ops.g, ops.hbar));
    const CMatrix ref = phasespace::translate(op, z).weighted();
    for (auto conv : {phasespace::PhaseConvention::symmetric, phasespace::PhaseConvention::plain}) {
        const CMatrix w = phasespace::translation_unitary(ops.g, ops.hbar, z, conv);
        EXPECT_LE(max_abs(w * w.adjoint() - CMatrix::Identity(128, 128)), 1e-13);
        EXPECT_LE(max_abs(w * op.weighted() * w.adjoint() - ref), 1e-12 * max_abs(ref));
    }
    // factored operators move their vectors instead of the kernel
    const GridOperator p = ops.projection(rng, 3);
    EXPECT_LE(max_abs(phasespace::translate(p, z).kernel() -
                      phasespace::translate(GridOperator(p.grid(), p.hbar(), p.kernel()), z).kernel()),
              1e-12 * max_abs(p.kernel()));
}

TEST(Translate, IncompatiblePointNamesNearest)
{
    const Grid g(2.0, 32);
    try {
        (void)phasespace::translate(GridOperator::identity(g, 0.1), point(0.3 * g.spacing(), 0.0));
        FAIL() << "expected IncompatibleTranslation";
    } catch (const IncompatibleTranslation& e) {
        EXPECT_NE(std::string(e.what()).find("nearest compatible point"), std::string::npos);
    }
}

TEST(Translate, PureMomentumShiftIsCommutator)
{
    std::mt19937_64 rng(24);
    const test::SmoothOperators ops(0.1, 128);
    const GridOperator op = ops.general(rng);
    const double xi0 = 5 * phasespace::compatible_xi_step(ops.g, ops.hbar);
    CVector e(128);
    for (long j = 0; j < 128; ++j)
        e[j] = std::polar(1.0, ops.g.node(j) * xi0 / ops.hbar);
    const CMatrix a = op.weighted();
    const CMatrix comm = e.asDiagonal() * a - a * e.asDiagonal();
    const RVector s1 = norms::singular_values(phasespace::translate(op, point(0, xi0)).weighted() - a);
    const RVector s2 = norms::singular_values(comm);
    EXPECT_LE((s1 - s2).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Translate, WignerCovariance)
{
    std::mt19937_64 rng(25);
    const test::SmoothOperators ops(0.1, 128);
    const GridOperator op = ops.hermitian(rng);
    const PhasePoint z = point(6 * ops.g.spacing(), -4 * phasespace::compatible_xi_step(ops.g, ops.hbar));
    const PhaseField lhs = phasespace::wigner(phasespace::translate(op, z));
    const PhaseField rhs = phasespace::translate_field(phasespace::wigner(op), z);
    EXPECT_LE(max_abs(lhs.values() - rhs.values()), 1e-10 * max_abs(rhs.values()));
}

TEST(Gradient, IntertwinesWithWigner)
{
    std::mt19937_64 rng(31);
    const test::SmoothOperators ops(0.1, 128);
    for (int trial = 0; trial < 3; ++trial) {
        const GridOperator op = ops.general(rng);
        const PhaseField f = phasespace::wigner(op);
        for (auto kind : {GradientKind::x, GradientKind::xi}) {
            const PhaseField lhs = phasespace::wigner(grid::quantum_gradient(op, kind, 1));
            const PhaseField rhs = phasespace::field_derivative(f, kind, 1);
            EXPECT_LE(max_abs(lhs.values() - rhs.values()), 1e-5 * max_abs(rhs.values()))
                << (kind == GradientKind::x ? "x" : "xi");
        }
    }
}

TEST(Convolve, DeltaLeavesOperatorUnchanged)
{
    std::mt19937_64 rng(41);
    const test::SmoothOperators ops(0.1, 128);
    const GridOperator op = ops.general(rng);
    PhaseField delta = PhaseField::zeros(ops.g, ops.hbar);
    delta.values()(64, 64) = 1.0 / (2.0 * ops.g.spacing() * delta.dxi());
    EXPECT_LE(max_abs(phasespace::semiclassical_convolve(delta, op).kernel() - op.kernel()), 1e-12 * max_abs(op.kernel()));
}

TEST(Convolve, FastPathMatchesPointList)
{
    std::mt19937_64 rng(42);
    const test::SmoothOperators ops(0.2, 64, 4, 4.0);
    const GridOperator op = ops.general(rng);
    const PhaseField f = smooth_field(ops.g, ops.hbar, rng, false);
    const GridOperator fast = phasespace::semiclassical_convolve(f, op);
    const GridOperator slow = phasespace::semiclassical_convolve(phasespace::compatible_samples(f), op);
    EXPECT_LE(max_abs(fast.kernel() - slow.kernel()), 1e-12 * max_abs(slow.kernel()));
}

TEST(Convolve, GaussianContractsTraceNorm)
{
    std::mt19937_64 rng(43);
    const test::SmoothOperators ops(0.1, 128);
    const GridOperator op = ops.projection(rng, 3);
    const PhaseField gh = PhaseField::sample(ops.g, ops.hbar, [&](const std::vector<double>& x, const std::vector<double>& xi) {
        return Complex(phasespace::gaussian_gh(x, xi, ops.hbar), 0.0);
    });
    const GridOperator s = phasespace::semiclassical_convolve(gh, op);
    EXPECT_LE(norms::schatten(s, 1.0).value, norms::schatten(op, 1.0).value * (1 + 1e-6));
}

TEST(Husimi, GroundStateAndPositivity)
{
    const double hbar = 0.1;
    const Grid g(4.0, 256);
    const GridOperator p = ground_state(g, hbar);
    const PhaseField f = phasespace::husimi(p);
    double err = 0.0;
    for (long r = 0; r < g.size(); ++r)
        for (long c = 0; c < g.size(); ++c) {
            const double x = g.node(r), xi = f.xi(c);
            err = std::max(err, std::abs(f.values()(r, c).real() - std::exp(-(x * x + xi * xi) / (2 * hbar))));
        }
    EXPECT_LE(err, 1e-5);
    EXPECT_GE(f.values().real().minCoeff(), -1e-8);
    EXPECT_LE(f.lp_norm(1.0), norms::schatten(p, 1.0).value * (1 + 1e-6));
}

TEST(Husimi, ZeroAndRandomPositive)
{
    std::mt19937_64 rng(51);
    const test::SmoothOperators ops(0.1, 128);
    EXPECT_EQ(max_abs(phasespace::husimi(GridOperator(ops.g, ops.hbar, CMatrix::Zero(128, 128))).values()), 0.0);
    const GridOperator p = ops.projection(rng, 4);
    const PhaseField f = phasespace::husimi(p);
    EXPECT_GE(f.values().real().minCoeff(), -1e-8);
    for (double q : {1.0, 2.0, infinity})
        EXPECT_LE(f.lp_norm(q), norms::schatten(p, q).value * (1 + 1e-6));
}

TEST(Wick, UnitSymbolIsIdentityOnInterior)
{
    const double hbar = 0.1;
    const Grid g(4.0, 128);
    const PhaseField one(g, hbar, CMatrix::Ones(128, 128));
    const CMatrix w = phasespace::wick_quantize(one).weighted();
    const CMatrix b = fock::discrete_basis(fock::FockSpace(6, 1, hbar), g);
    EXPECT_LE(max_abs(b.adjoint() * w * b - CMatrix::Identity(6, 6)), 1e-6);
}

TEST(Wick, PositivityAndContraction)
{
    std::mt19937_64 rng(52);
    const Grid g(4.0, 64);
    const double hbar = 0.1;
    for (int trial = 0; trial < 2; ++trial) {
        const PhaseField f = smooth_field(g, hbar, rng, true);
        const GridOperator w = phasespace::wick_quantize(f);
        Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (w.weighted() + w.weighted().adjoint()), Eigen::EigenvaluesOnly);
        EXPECT_GE(es.eigenvalues().minCoeff(), -1e-8);
        const PhaseField s = smooth_field(g, hbar, rng, false);
        const GridOperator ws = phasespace::wick_quantize(s);
        for (double p : {1.0, 2.0, infinity})
            EXPECT_LE(norms::schatten(ws, p).value, s.lp_norm(p) * (1 + 1e-6)) << p;
    }
}

TEST(Wick, EqualsWeylOfSmoothedSymbol)
{
    std::mt19937_64 rng(53);
    const Grid g(4.0, 256);
    const PhaseField f = smooth_field(g, 0.1, rng, false);
    const CMatrix a = phasespace::wick_quantize(f).weighted();
    const CMatrix b = phasespace::weyl_quantize(phasespace::smooth_gaussian(f)).weighted();
    EXPECT_LE((a - b).norm() / b.norm(), 1e-4);
}

TEST(Wick, ProductDefect)
{
    std::mt19937_64 rng(54);
    const Grid g(4.0, 64);
    const double hbar = 0.1;
    const PhaseField f = smooth_field(g, hbar, rng, false);
    const PhaseField h = smooth_field(g, hbar, rng, false);
    const GridOperator wf = phasespace::wick_quantize(f);
    const GridOperator wh = phasespace::wick_quantize(h);
    const GridOperator wfh = phasespace::wick_quantize(PhaseField(g, hbar, f.values().cwiseProduct(h.values())));
    const GridOperator defect = Complex(0.5) * (wf * wh + wh * wf) - wfh;
    for (double p : {2.0, 4.0}) {
        const double lhs = norms::schatten(defect, 0.5 * p).value;
        const double rhs = 4.0 * hbar * phasespace::gradient_magnitude(f).lp_norm(p) * phasespace::gradient_magnitude(h).lp_norm(p);
        EXPECT_LE(lhs, rhs) << p;
    }
}

TEST(Export, CsvAndBinaryRoundTrip)
{
    const Grid g(2.0, 16);
    const PhaseField f = PhaseField::sample(g, 0.2, [](const std::vector<double>& x, const std::vector<double>& xi) {
        return Complex(x[0] + 10 * xi[0], 0.0);
    });
    const auto dir = std::filesystem::temp_directory_path() / "srl_phasespace_export";
    std::filesystem::create_directories(dir);
    phasespace::write_csv(f, (dir / "f.csv").string());
    std::ifstream in(dir / "f.csv");
    std::string header, first;
    std::getline(in, header);
    std::getline(in, first);
    EXPECT_EQ(header, "# columns: x xi value");
    EXPECT_EQ(std::count(first.begin(), first.end(), ','), 2);

    phasespace::write_binary(f, (dir / "f.bin").string());
    const PhaseField back = phasespace::read_field_binary((dir / "f.bin").string());
    EXPECT_EQ(back.grid(), g);
    EXPECT_EQ(back.hbar(), 0.2);
    EXPECT_EQ(max_abs(back.values() - f.values()), 0.0);

    const GridOperator op = ground_state(Grid(3.0, 32), 0.2);
    phasespace::write_operator_binary(op, (dir / "op.bin").string());
    EXPECT_EQ(max_abs(phasespace::read_operator_binary((dir / "op.bin").string()).kernel() - op.kernel()), 0.0);
    std::filesystem::remove_all(dir);
}
