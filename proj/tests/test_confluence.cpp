#include "doctest.h"

#include "qbirkhoff/confluence.hpp"
#include "qbirkhoff/error.hpp"

#include <cmath>

using namespace qb;

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// the scalar test family: delta Y = (alpha z / (z-1)) Y in the limit
RationalMatrix scalarCalA(cplx alpha) {
    RationalMatrix m(1);
    m(0, 0) = CRationalFunction(CPolynomial({cplx(0, 0), alpha}),
                                CPolynomial({cplx(-1, 0), cplx(1, 0)}));
    return m;
}

const cplx kAlpha{0.3, 0.2};

// monodromy of the limit ODE around z = 1 in closed form
cplx expectedLoop() { return std::exp(cplx(0, 1) * kTwoPi * kAlpha); }

// numerical delta-derivative of a Frobenius solution
CMatrix deltaOf(const FrobeniusSolution& f, cplx z, double h = 1e-6) {
    const CMatrix up = frobenius_eval(f, z * std::exp(cplx(h, 0)));
    const CMatrix dn = frobenius_eval(f, z * std::exp(cplx(-h, 0)));
    return (up - dn) * cplx(1.0 / (2.0 * h), 0);
}

} // namespace

TEST_SUITE("confluence") {

TEST_CASE("Frobenius series solves the limit ODE at both ends") {
    const ConfluenceFamily fam = make_confluence_delta(2.0, scalarCalA(kAlpha));
    REQUIRE(fam.odePoles.size() == 1);
    CHECK(std::abs(fam.odePoles[0] - cplx(1, 0)) < 1e-12);

    const FrobeniusSolution f0 = frobenius_series(fam.tildeA, Side::Origin);
    const cplx z0{0.2, 0.15};
    CHECK(relDiff(deltaOf(f0, z0), fam.tildeA.eval(z0) * frobenius_eval(f0, z0)) < 1e-7);

    const FrobeniusSolution fi = frobenius_series(fam.tildeA, Side::Infinity);
    const cplx zi{3.0, -2.0};
    CHECK(relDiff(deltaOf(fi, zi), fam.tildeA.eval(zi) * frobenius_eval(fi, zi)) < 1e-7);
    // exponent at infinity is tildeA(inf) = alpha
    CHECK(std::abs(fi.exponent(0, 0) - kAlpha) < 1e-12);
}

TEST_CASE("integration around nothing returns to the start") {
    const ConfluenceFamily fam = make_confluence_delta(2.0, scalarCalA(kAlpha));
    std::vector<PathSeg> loop(1);
    loop[0].kind = PathSeg::Kind::Arc;
    loop[0].center = cplx(0.3, 0.1);
    loop[0].radius = 0.15;
    loop[0].theta0 = 0.0;
    loop[0].theta1 = kTwoPi;
    const CMatrix W = integrate_ode(fam.tildeA, loop, CMatrix::identity(1));
    CHECK(std::abs(W(0, 0) - 1.0) < 1e-10);
}

TEST_CASE("loop around the regular singular point picks up e^{2 pi i alpha}") {
    const ConfluenceFamily fam = make_confluence_delta(2.0, scalarCalA(kAlpha));
    std::vector<PathSeg> loop(1);
    loop[0].kind = PathSeg::Kind::Arc;
    loop[0].center = cplx(1, 0);
    loop[0].radius = 0.35;
    loop[0].theta0 = 0.0;
    loop[0].theta1 = kTwoPi;
    const CMatrix W = integrate_ode(fam.tildeA, loop, CMatrix::identity(1));
    CHECK(std::abs(W(0, 0) - expectedLoop()) < 1e-10);
}

TEST_CASE("monodromy oracle matches the closed form") {
    const ConfluenceFamily fam = make_confluence_delta(2.0, scalarCalA(kAlpha));
    const MonodromyOracle mo = ode_monodromy_oracle(fam, 0);
    CHECK(std::abs(mo.M(0, 0) - expectedLoop()) < 1e-10);
    CHECK(mo.detResidual < 1e-10);
}

TEST_CASE("sector partition and ray guard") {
    SectorPartition part = sector_partition({cplx(1, 0), cplx(0, 2)});
    REQUIRE(part.sectorCount() == 3);
    CHECK(part.rays[0].angle == doctest::Approx(kTwoPi / 2).epsilon(1e-12));
    CHECK(part.rays[0].poleIndex == -1);
    // angles lift to [pi, 3 pi): pole at angle 0 -> 2 pi, pole at pi/2 -> 5 pi/2
    CHECK(part.rays[1].angle == doctest::Approx(kTwoPi).epsilon(1e-12));
    CHECK(part.rays[1].poleIndex == 0);
    CHECK(part.rays[2].angle == doctest::Approx(1.25 * kTwoPi).epsilon(1e-12));
    CHECK(part.rays[2].poleIndex == 1);
    // psi = 1.8 + pi lies between pi and 2 pi: sector 0
    const std::size_t s = part.sectorOf(std::polar(1.0, 1.8 + kTwoPi / 2));
    CHECK(s == 0);
    CHECK(part.sectorOf(std::polar(1.0, 0.3)) == 1);
    CHECK(part.sectorOf(std::polar(1.0, 1.9)) == 2);
    CHECK_THROWS_AS(part.sectorOf(std::polar(1.0, 3.14159265358979)), Error);
    CHECK_THROWS_AS(sector_partition({cplx(-1, 1e-12)}), Error);
}

TEST_CASE("epsilon sweep bookkeeping") {
    const ConfluenceFamily fam = make_confluence_delta(2.0, scalarCalA(kAlpha));
    const SectorPartition part = sector_partition(fam.odePoles);
    const std::vector<double> grid{0.5, 0.25, 0.125};
    const SweepResult sw = epsilon_sweep(fam, part, grid);
    REQUIRE(sw.epsGrid == grid);
    REQUIRE(sw.value.size() == grid.size());
    REQUIRE(sw.increment.size() == grid.size());
    CHECK(sw.increment[0].empty()); // no predecessor for the first row
    REQUIRE(sw.probes.size() == 2 * part.sectorCount());
    for (std::size_t e = 1; e < grid.size(); ++e)
        CHECK(sw.increment[e].size() == sw.probes.size());
    for (std::size_t p = 0; p < sw.probes.size(); ++p) {
        CHECK(relDiff(sw.sectorLimit[p], sw.value.back()[p]) == 0.0);
        CHECK(sw.errorBar[p] == sw.increment.back()[p]);
        // first-order confluence: increments shrink with eps
        CHECK(sw.increment[2][p] < sw.increment[1][p]);
    }
}

TEST_CASE("sector limits cross by the ODE monodromy (scalar family)") {
    const ConfluenceFamily fam = make_confluence_delta(2.0, scalarCalA(kAlpha));
    const CrossingReport rep = crossing_check(
        fam, {0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625, 0.0078125});
    REQUIRE(rep.crossings.size() == 1);
    const auto& c = rep.crossings[0];
    CHECK(std::abs(c.oracle(0, 0) - expectedLoop()) < 1e-10);
    CHECK(c.residual <= 1.5 * c.errorBar);
    CHECK(std::abs(c.empirical(0, 0) - expectedLoop()) < 0.02);
    CHECK(c.oracleDetResidual < 1e-8);
}

TEST_CASE("sector limits cross by the ODE monodromy (2x2 family)") {
    const CMatrix R0(2, 2, {cplx(0.3, 0), cplx(0.1, 0), cplx(0.05, 0), cplx(-0.2, 0)});
    const CMatrix R1(2, 2, {cplx(0.05, 0), cplx(-0.2, 0), cplx(0.1, 0), cplx(0.15, 0)});
    const CMatrix Rt(2, 2, {cplx(0.05, 0), cplx(0.1, 0), cplx(-0.15, 0), cplx(-0.1, 0)});
    const ConfluenceFamily fam = make_confluence_fuchsian(2.0, R0, R1, Rt, cplx(0, 0.6));
    const CrossingReport rep =
        crossing_check(fam, {0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625});
    REQUIRE(rep.crossings.size() == 2);
    for (const auto& c : rep.crossings) {
        CHECK(c.residual <= 1.5 * c.errorBar);
        CHECK(c.oracleDetResidual < 1e-8);
    }
}

} // TEST_SUITE
