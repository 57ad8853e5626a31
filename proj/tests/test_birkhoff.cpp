#include "doctest.h"

#include "qbirkhoff/birkhoff.hpp"
#include "qbirkhoff/description.hpp"
#include "qbirkhoff/qpvi.hpp"
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

RationalQSystem generic2x2() {
    RationalMatrix A(2);
    A(0, 0) = ratio({1, 2}, {5, 1});
    A(0, 1) = CRationalFunction::constant(0.3);
    A(1, 0) = ratio({0.1}, {2, 1});
    A(1, 1) = ratio({-4, 1}, {3, 3});
    return RationalQSystem(QContext(2.0, 1.0), CRationalFunction::constant(1.0), A);
}

} // namespace

TEST_SUITE("birkhoff") {

TEST_CASE("sigma_q y = z y has connection matrix identically 1") {
    SystemDescription d = load_description(dataPath("theta-1x1.json"));
    RationalQSystem sys = instantiate_system(d);
    const ConnectionData conn = make_connection(sys);
    ProbeSampler smp(9);
    for (int i = 0; i < 15; ++i) {
        const cplx z = smp.annulusPoint(0.3, 4.0);
        if (conn.registry.distance(sys.ctx(), z) < 0.05) continue;
        const CMatrix P = connection_eval(sys, conn, z);
        CHECK(std::abs(P(0, 0) - 1.0) < 1e-12);
    }
    CHECK(ellipticity_residual(sys, conn, 0.8, 40, 12345) < 1e-12);
}

TEST_CASE("rank-1 connection matches the closed form") {
    SystemDescription d = load_description(dataPath("rank1-alpha.json"));
    RationalQSystem sys = instantiate_system(d);
    const cplx alpha{1.0, 0.5}; // R = z - alpha in the description
    const ConnectionData conn = make_connection(sys);
    const QContext& ctx = sys.ctx();
    ProbeSampler smp(13);
    int tested = 0;
    for (int i = 0; i < 60 && tested < 12; ++i) {
        const cplx z = smp.annulusPoint(0.4, 2.5);
        if (conn.registry.distance(ctx, z) < 0.05) continue;
        if (spiral_locate(ctx, -alpha, z).distance < 0.05) continue;
        if (spiral_locate(ctx, -alpha * ctx.p, z).distance < 0.05) continue;
        if (spiral_locate(ctx, cplx(-1.0), z).distance < 0.05) continue;
        const cplx got = connection_eval(sys, conn, z)(0, 0);
        const cplx want = scalar_connection(ctx, alpha, z).value();
        CHECK(std::abs(got - want) / std::abs(want) < 1e-10);
        ++tested;
    }
    CHECK(tested >= 10);
    CHECK(ellipticity_residual(sys, conn, 0.8, 40, 777) < 1e-10);
}

TEST_CASE("connection of a generic 2x2 system is elliptic") {
    RationalQSystem sys = generic2x2();
    const ConnectionData conn = make_connection(sys);
    CHECK(ellipticity_residual(sys, conn, 0.9, 40, 4242) < 1e-9);
    // definition: P = Yinf^{-1} Y0 pointwise
    ProbeSampler smp(99);
    int tested = 0;
    for (int i = 0; i < 30 && tested < 5; ++i) {
        const cplx z = smp.annulusPoint(0.7, 1.8);
        if (conn.registry.distance(sys.ctx(), z) < 0.08) continue;
        const ScaledCMatrix yi = eval_solution(sys, conn.yInf, z);
        const ScaledCMatrix y0 = eval_solution(sys, conn.y0, z);
        const CMatrix want =
            yi.m.solve(y0.m) * std::exp(cplx(y0.logScale - yi.logScale, 0));
        CHECK(relDiff(connection_eval(sys, conn, z), want) < 1e-11);
        ++tested;
    }
    CHECK(tested == 5);
}

TEST_CASE("every connection blow-up sits on a registry spiral") {
    RationalQSystem sys = generic2x2();
    const ConnectionData conn = make_connection(sys);
    const PoleScanResult scan = pole_scan(sys, conn, 20, 72, 1e5);
    CHECK(scan.unmatchedCount == 0);
    // a grid fine enough to push past the elliptic plateau actually detects
    // the poles, and every detection is attributed to a registry spiral
    SystemDescription d = load_description(dataPath("rank1-alpha.json"));
    RationalQSystem r1 = instantiate_system(d);
    const ConnectionData c1 = make_connection(r1);
    const PoleScanResult s1 = pole_scan(r1, c1, 48, 512, 1e5);
    CHECK(s1.hits.size() >= 10);
    CHECK(s1.unmatchedCount == 0);
    CHECK(s1.detected.spirals().size() == 2);
    CHECK(s1.maxMatchedDistance < 0.042);
    for (const auto& h : s1.hits) CHECK(h.matched);
}

} // TEST_SUITE
