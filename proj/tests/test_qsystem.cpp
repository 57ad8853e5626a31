#include "doctest.h"

#include "qbirkhoff/description.hpp"
#include "qbirkhoff/error.hpp"
#include "qbirkhoff/qpvi.hpp"
#include "qbirkhoff/qsystem.hpp"
#include "qbirkhoff/rng.hpp"

#include <cstdlib>
#include <string>

using namespace qb;

namespace {

std::string dataPath(const char* file) {
    const char* d = std::getenv("QBIRKHOFF_DATA");
    return std::string(d ? d : "data") + "/" + file;
}

CRationalFunction ratio(std::vector<cplx> num, std::vector<cplx> den) {
    return CRationalFunction(CPolynomial(std::move(num)), CPolynomial(std::move(den)));
}

// A 2x2 coefficient analytic and invertible at 0 and infinity, with
// eigenvalue ratios off q^Z at both ends for q = 2.
RationalQSystem generic2x2() {
    RationalMatrix A(2);
    A(0, 0) = ratio({1, 2}, {5, 1});
    A(0, 1) = CRationalFunction::constant(0.3);
    A(1, 0) = ratio({0.1}, {2, 1});
    A(1, 1) = ratio({-4, 1}, {3, 3});
    return RationalQSystem(QContext(2.0, 1.0), CRationalFunction::constant(1.0), A);
}

// scale-matched relative difference of two scaled matrices
double scaledRelDiff(const ScaledCMatrix& a, const ScaledCMatrix& b) {
    return relDiff(a.m, b.m * std::exp(cplx(b.logScale - a.logScale, 0)));
}

double scaledRelC(const ScaledCMatrix& a, const ScaledComplex& b) {
    REQUIRE(a.m.rows() == 1);
    const cplx lhs = a.m(0, 0);
    const cplx rhs = b.m * std::exp(cplx(b.logs - a.logScale, 0));
    return std::abs(lhs - rhs) / std::max(std::abs(lhs), std::abs(rhs));
}

} // namespace

TEST_SUITE("qsystem") {

TEST_CASE("sigma_q y = z y is solved by theta itself, both sides") {
    SystemDescription d = load_description(dataPath("theta-1x1.json"));
    RationalQSystem sys = instantiate_system(d);
    CHECK(sys.data().mu0 == 1);
    CHECK(sys.data().muInf == 1);
    const LocalSolution y0 = local_series(sys, Side::Origin);
    const LocalSolution yi = local_series(sys, Side::Infinity);
    ProbeSampler smp(5);
    for (int i = 0; i < 12; ++i) {
        const cplx z = smp.annulusPoint(0.2, 6.0);
        if (spiral_locate(sys.ctx(), cplx(-1.0), z).distance < 0.05) continue;
        const ScaledComplex th = theta_scaled(sys.ctx(), z);
        CHECK(scaledRelC(eval_solution(sys, y0, z), th) < 1e-12);
        CHECK(scaledRelC(eval_solution(sys, yi, z), th) < 1e-12);
    }
}

TEST_CASE("local solutions satisfy the system, inside and beyond the disc") {
    RationalQSystem sys = generic2x2();
    for (Side side : {Side::Origin, Side::Infinity}) {
        const LocalSolution sol = local_series(sys, side);
        REQUIRE(!sol.H.empty());
        CHECK(relDiff(sol.H[0], CMatrix::identity(2)) < 1e-14);
        ProbeSampler smp(side == Side::Origin ? 31 : 32);
        int tested = 0;
        for (int i = 0; i < 40 && tested < 10; ++i) {
            // radii force propagation for at least part of the range
            const cplx z = smp.annulusPoint(0.05, 25.0);
            if (sol.poleRegistry.distance(sys.ctx(), z) < 0.05) continue;
            if (sol.poleRegistry.distance(sys.ctx(), sys.ctx().q * z) < 0.05) continue;
            const ScaledCMatrix lhs = eval_solution(sys, sol, sys.ctx().q * z);
            ScaledCMatrix rhs = eval_solution(sys, sol, z);
            rhs.m = sys.evalRA(z) * rhs.m;
            CHECK(scaledRelDiff(lhs, rhs) < 1e-10);
            ++tested;
        }
        CHECK(tested >= 8);
    }
}

TEST_CASE("series part matches its own truncated sum near the center") {
    RationalQSystem sys = generic2x2();
    const LocalSolution sol = local_series(sys, Side::Origin);
    const cplx z = 0.04 * sol.seriesRadius * std::exp(cplx(0, 0.9));
    CMatrix direct(2, 2);
    cplx zp = 1.0;
    for (const CMatrix& Hk : sol.H) {
        direct += Hk * zp;
        zp *= z;
    }
    CHECK(relDiff(series_part_eval(sys, sol, z), direct) < 1e-12);
}

TEST_CASE("sigma_p ingestion matches the closed-form rank-1 solutions") {
    // sigma_p y = (z - alpha) y  ==>  sigma_q y = y / (qz - alpha)
    const cplx alpha{1.0, 0.5};
    QContext ctx(2.0, 1.0);
    RationalMatrix one = RationalMatrix::identity(1);
    RationalQSystem sys = RationalQSystem::fromSigmaP(
        ctx, ratio({-alpha, 1}, {1}), one);
    ProbeSampler smp(41);
    for (int i = 0; i < 8; ++i) {
        const cplx z = smp.annulusPoint(0.3, 3.0);
        CHECK(std::abs(sys.evalRA(z)(0, 0) - 1.0 / (ctx.q * z - alpha)) < 1e-13);
    }
    const LocalSolution y0 = local_series(sys, Side::Origin);
    const LocalSolution yi = local_series(sys, Side::Infinity);
    const SpiralSet& reg0 = y0.poleRegistry;
    const SpiralSet& regI = yi.poleRegistry;
    int tested = 0;
    for (int i = 0; i < 40 && tested < 10; ++i) {
        const cplx z = smp.annulusPoint(0.2, 5.0);
        if (reg0.distance(ctx, z) < 0.05 || regI.distance(ctx, z) < 0.05) continue;
        if (spiral_locate(ctx, -alpha, z).distance < 0.05) continue;
        if (spiral_locate(ctx, cplx(-1.0), z).distance < 0.05) continue;
        CHECK(scaledRelC(eval_solution(sys, y0, z), scalar_y0(ctx, alpha, z)) < 1e-10);
        CHECK(scaledRelC(eval_solution(sys, yi, z), scalar_yinf(ctx, alpha, z)) < 1e-10);
        ++tested;
    }
    CHECK(tested >= 8);
}

TEST_CASE("resonant spectrum at the origin is refused") {
    // eigenvalues 1 and 4 = q^2 for q = 2
    SystemDescription d = load_description(dataPath("resonant.json"));
    try {
        instantiate_system(d);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.exitCode() == 3);
    }
}

TEST_CASE("coefficient with a pole at the origin is refused") {
    SystemDescription d = load_description(dataPath("pole-at-zero.json"));
    try {
        instantiate_system(d);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::PoleAtZeroOrInfinity);
        CHECK(e.exitCode() == 3);
    }
}

TEST_CASE("singular A(0) is refused") {
    RationalMatrix A(1);
    A(0, 0) = ratio({0, 1}, {1, 1}); // z/(z+1): vanishes at 0
    try {
        RationalQSystem(QContext(2.0, 1.0), CRationalFunction::constant(1.0), A);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SingularLeadingMatrix);
        CHECK(e.exitCode() == 3);
    }
}

TEST_CASE("evaluation on a registered pole spiral is refused") {
    const cplx alpha{1.0, 0.5};
    QContext ctx(2.0, 1.0);
    RationalQSystem sys = RationalQSystem::fromSigmaP(
        ctx, ratio({-alpha, 1}, {1}), RationalMatrix::identity(1));
    const LocalSolution y0 = local_series(sys, Side::Origin);
    REQUIRE(!y0.poleRegistry.empty());
    const Spiral sp = y0.poleRegistry.spirals()[0];
    const cplx zBad = sp.base * ctx.qPow(1);
    CHECK_THROWS_AS(eval_solution(sys, y0, zBad), Error);
}

} // TEST_SUITE
