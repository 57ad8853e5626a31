#include "doctest.h"

#include "qbirkhoff/error.hpp"
#include "qbirkhoff/qpvi.hpp"
#include "qbirkhoff/rng.hpp"

#include <cmath>
#include <vector>

using namespace qb;

namespace {

double rel(cplx a, cplx b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

CMatrix zeros2() { return CMatrix(2, 2); }

CMatrix genA0() { return CMatrix(2, 2, {cplx(0.3), cplx(0.1), cplx(0.05), cplx(-0.2)}); }
CMatrix genA1() { return CMatrix(2, 2, {cplx(0.05), cplx(-0.2), cplx(0.1), cplx(0.15)}); }
CMatrix genAt() { return CMatrix(2, 2, {cplx(0.05), cplx(0.1), cplx(-0.15), cplx(-0.1)}); }

JimboSakaiInstance degenerate() {
    return build_jimbo_sakai(QContext(2.0, 1.0), zeros2(), zeros2(), zeros2(), cplx(0, 1));
}

JimboSakaiInstance generic() {
    return build_jimbo_sakai(QContext(2.0, 1.0), genA0(), genA1(), genAt(), cplx(0, 0.6));
}

// probes clear of both connection matrices' spirals and the comparison factors
std::vector<cplx> comparisonProbes(const JimboSakaiInstance& inst, int n = 8) {
    ProbeSampler smp(505);
    std::vector<cplx> probes;
    for (int i = 0; i < n; ++i)
        probes.push_back(smp.annulusPointAvoiding(inst.ctx, inst.probeAvoidSet(), 1e-3, 0.8, 1.6));
    return probes;
}

std::vector<cplx> criterionProbes() {
    ProbeSampler smp(606);
    std::vector<cplx> probes;
    for (int i = 0; i < 6; ++i) probes.push_back(smp.annulusPoint(0.9, 1.7));
    return probes;
}

std::size_t countNear(const std::vector<cplx>& vals, cplx target, double tol) {
    std::size_t n = 0;
    for (cplx v : vals)
        if (std::abs(v - target) < tol) ++n;
    return n;
}

} // namespace

TEST_SUITE("qpvi") {

TEST_CASE("scalar solutions satisfy sigma_p y = (z - alpha) y") {
    const QContext ctx(2.0, 1.0);
    const cplx alpha{1.0, 0.5};
    for (cplx z : {cplx(0.83, 0.41), cplx(1.3, -0.4), cplx(-0.5, 0.9)}) {
        for (auto f : {&scalar_y0, &scalar_yinf}) {
            const cplx ypz = (*f)(ctx, alpha, ctx.p * z, 1e-14, 1e-8).value();
            const cplx yz = (*f)(ctx, alpha, z, 1e-14, 1e-8).value();
            CHECK(rel(ypz, (z - alpha) * yz) < 1e-11);
        }
    }
}

TEST_CASE("scalar connection is the solution ratio and is elliptic") {
    const QContext ctx(2.0, 1.0);
    const cplx alpha{1.0, 0.5};
    for (cplx z : {cplx(0.83, 0.41), cplx(-0.6, 1.1)}) {
        const cplx conn = scalar_connection(ctx, alpha, z).value();
        const cplx ratio =
            (scalar_yinf(ctx, alpha, z).inverse() * scalar_y0(ctx, alpha, z)).value();
        CHECK(rel(conn, ratio) < 1e-12);
        CHECK(rel(conn, scalar_connection(ctx, alpha, ctx.q * z).value()) < 1e-12);
    }
    // alpha on the -q^Z spiral is outside the hypotheses
    CHECK_THROWS_AS(scalar_connection(ctx, cplx(-2, 0), cplx(0.83, 0.41)), Error);
}

TEST_CASE("builder: degenerate instance collapses to scalar data") {
    const JimboSakaiInstance inst = degenerate();
    for (cplx e : inst.thetaEig) CHECK(std::abs(e - 1.0) < 1e-12);
    for (cplx e : inst.cEig) CHECK(std::abs(e - 1.0) < 1e-12);
    REQUIRE(inst.detRoots.size() == 4);
    CHECK(countNear(inst.detRoots, cplx(1, 0), 1e-6) == 2);
    CHECK(countNear(inst.detRoots, cplx(0, 1), 1e-6) == 2);
}

TEST_CASE("builder: generic instance spectra") {
    const JimboSakaiInstance inst = generic();
    // B0 = I - calA0/2: eigenvalues 1 - (0.1 +- sqrt(0.27))/4
    std::vector<cplx> th = inst.thetaEig;
    CHECK(countNear(th, cplx(0.84509618943233421, 0), 1e-10) == 1);
    CHECK(countNear(th, cplx(1.1049038105676658, 0), 1e-10) == 1);
    // A2 diagonal entries and C = I - A2/2
    CHECK(std::abs(inst.kappa1 - 0.4) < 1e-12);
    CHECK(std::abs(inst.kappa2 - (-0.15)) < 1e-12);
    CHECK(countNear(inst.cEig, cplx(0.8, 0), 1e-12) == 1);
    CHECK(countNear(inst.cEig, cplx(1.075, 0), 1e-12) == 1);
    REQUIRE(inst.detRoots.size() == 4);
    for (cplx r : inst.detRoots) CHECK(std::abs(r) > 1e-3);
}

TEST_CASE("comparison identity on the degenerate instance") {
    const JimboSakaiInstance inst = degenerate();
    const std::vector<cplx> probes = comparisonProbes(inst);
    CHECK(comparison_residual(inst, probes) < 1e-10);
    CHECK(series_ratio_residual(inst, probes) < 1e-10);
    // negative controls; DropA2Square and DropLambdaB0Inverse are inert here
    // because C = B0 = I, so only the five live corruptions are asserted
    CHECK(comparison_residual(inst, probes, ComparisonCorruption::DropQPower) > 0.3);
    CHECK(comparison_residual(inst, probes, ComparisonCorruption::AltQPowerMinus3) > 0.3);
    CHECK(comparison_residual(inst, probes, ComparisonCorruption::DropLambdaTB0) > 0.3);
    CHECK(comparison_residual(inst, probes, ComparisonCorruption::ThetaNumOnce) > 0.3);
    CHECK(comparison_residual(inst, probes, ComparisonCorruption::ThetaDenWrongArg) > 0.3);
}

TEST_CASE("comparison identity on the generic instance") {
    const JimboSakaiInstance inst = generic();
    const std::vector<cplx> probes = comparisonProbes(inst);
    CHECK(comparison_residual(inst, probes) < 1e-10);
    CHECK(series_ratio_residual(inst, probes) < 1e-10);
    // every corruption is live here (measured residuals range 0.30 - 1.66)
    CHECK(comparison_residual(inst, probes, ComparisonCorruption::DropQPower) > 0.1);
    CHECK(comparison_residual(inst, probes, ComparisonCorruption::AltQPowerMinus3) > 0.1);
    CHECK(comparison_residual(inst, probes, ComparisonCorruption::DropA2Square) > 0.1);
    CHECK(comparison_residual(inst, probes, ComparisonCorruption::DropLambdaB0Inverse) > 0.1);
    CHECK(comparison_residual(inst, probes, ComparisonCorruption::DropLambdaTB0) > 0.1);
    CHECK(comparison_residual(inst, probes, ComparisonCorruption::ThetaNumOnce) > 0.1);
    CHECK(comparison_residual(inst, probes, ComparisonCorruption::ThetaDenWrongArg) > 0.1);
}

TEST_CASE("pseudo-constancy criterion: booleans agree in all regimes") {
    const QContext ctx(2.0, 1.0);
    const std::vector<cplx> probes = criterionProbes();

    // zero residues: Q is pseudo-constant for the self-dual t = i
    CriterionReport deg =
        criterion_check(ctx, zeros2(), zeros2(), zeros2(), cplx(0, 1), probes);
    CHECK(deg.qPseudoConstant);
    CHECK(deg.pCriterion);
    CHECK(deg.qResidual < 1e-10);
    CHECK(deg.pResidual < 1e-10);

    // generic residues: fails at every tested t, and the two sides agree
    for (cplx t : {cplx(0, 1), cplx(0, 0.7), cplx(0, 0.6)}) {
        CriterionReport rep = criterion_check(ctx, genA0(), genA1(), genAt(), t, probes);
        CHECK_FALSE(rep.qPseudoConstant);
        CHECK_FALSE(rep.pCriterion);
        CHECK(rep.qResidual > 0.1);
        CHECK(rep.pResidual > 0.1);
        CHECK(rep.qPseudoConstant == rep.pCriterion);
    }
}

TEST_CASE("builder rejects a non-diagonal A2") {
    const CMatrix offDiag(2, 2, {cplx(0), cplx(0.3), cplx(0), cplx(0)});
    try {
        build_jimbo_sakai(QContext(2.0, 1.0), zeros2(), offDiag, zeros2(), cplx(0, 0.6));
        FAIL("expected an assumption violation");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::AssumptionViolated);
    }
}

} // TEST_SUITE
