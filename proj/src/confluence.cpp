#include "qbirkhoff/confluence.hpp"

#include "qbirkhoff/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace qb {

namespace {

const double kPi = 3.1415926535897932384626433832795;
const double kTwoPi = 2.0 * kPi;

CRationalFunction zOverZMinus(cplx a) {
    // z / (z - a)
    return CRationalFunction(CPolynomial({cplx(0.0), cplx(1.0)}),
                             CPolynomial({-a, cplx(1.0)}));
}

void checkQ0(double q0) {
    if (!(q0 > 1.0 + kQMarginMin))
        fail(ErrorCode::SchemaError,
             "confluence family needs a real base q0 > 1");
}

} // namespace

ConfluenceFamily make_confluence_delta(double q0, const RationalMatrix& calA) {
    checkQ0(q0);
    ConfluenceFamily fam;
    fam.q0 = q0;
    fam.tildeA = calA;
    fam.odePoles = calA.poles();
    fam.builder = [q0, calA](double eps) {
        QContext ctx(cplx(q0), eps);
        RationalMatrix A = RationalMatrix::identity(calA.size()) +
                           calA.scalarMul(CRationalFunction::constant(ctx.q - 1.0));
        return RationalQSystem(ctx, CRationalFunction::constant(1.0), A);
    };
    return fam;
}

ConfluenceFamily make_confluence_fuchsian(double q0, const CMatrix& R0,
                                     const CMatrix& R1, const CMatrix& Rt,
                                     cplx t) {
    checkQ0(q0);
    if (!R0.isSquare() || !R0.sameShape(R1) || !R0.sameShape(Rt))
        fail(ErrorCode::SchemaError, "residue matrices must share one square shape");
    if (std::abs(t) < 1e-12 || std::abs(t - 1.0) < 1e-12)
        fail(ErrorCode::SchemaError, "the third pole t must avoid 0 and 1");

    RationalMatrix tilde = RationalMatrix::fromConstant(R0) +
                           RationalMatrix::fromConstant(R1).scalarMul(zOverZMinus(1.0)) +
                           RationalMatrix::fromConstant(Rt).scalarMul(zOverZMinus(t));

    ConfluenceFamily fam;
    fam.q0 = q0;
    fam.tildeA = tilde;
    fam.odePoles = tilde.poles();
    fam.builder = [q0, tilde](double eps) {
        QContext ctx(cplx(q0), eps);
        RationalMatrix N = RationalMatrix::identity(tilde.size()) +
                           tilde.scalarMul(CRationalFunction::constant(ctx.p - 1.0));
        return RationalQSystem::fromSigmaP(ctx, CRationalFunction::constant(1.0), N);
    };
    return fam;
}

// ---- Frobenius solutions ----------------------------------------------------

namespace {

// Lazily expanded Taylor coefficient matrices of a rational matrix at 0
// (coefficient of z^j) or at infinity (coefficient of z^{-j}).
class TaylorProvider {
public:
    TaylorProvider(const RationalMatrix& m, Side side) : m_(m), side_(side) {
        const std::size_t n = m.size();
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                const CRationalFunction& e = m(i, j);
                if (e.isZero()) continue;
                if (side_ == Side::Origin && e.valuationAt0() < 0)
                    fail(ErrorCode::PoleAtZeroOrInfinity,
                         "ODE coefficient is not analytic at 0");
                if (side_ == Side::Infinity && e.degreeAtInf() > 0)
                    fail(ErrorCode::PoleAtZeroOrInfinity,
                         "ODE coefficient is not analytic at infinity");
            }
        }
    }

    const CMatrix& coeff(std::size_t j) {
        ensure(j);
        return cache_[j];
    }

private:
    void ensure(std::size_t j) {
        if (j < cache_.size()) return;
        const std::size_t n = m_.size();
        std::size_t terms = std::max<std::size_t>(2 * cache_.size(), j + 17);
        ld_.assign(n * n, LaurentData{});
        std::vector<bool> zero(n * n, false);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < n; ++k) {
                const CRationalFunction& e = m_(i, k);
                if (e.isZero()) { zero[i * n + k] = true; continue; }
                ld_[i * n + k] = (side_ == Side::Origin) ? e.laurentAt0(terms)
                                                         : e.laurentAtInf(terms);
            }
        }
        cache_.assign(terms, CMatrix(n, n));
        for (std::size_t jj = 0; jj < terms; ++jj) {
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t k = 0; k < n; ++k) {
                    if (zero[i * n + k]) continue;
                    const LaurentData& ld = ld_[i * n + k];
                    // origin: coefficient of z^jj sits at index jj - lead;
                    // infinity: f = sum c_m z^{lead-m}, so z^{-jj} is m = lead+jj
                    long idx = (side_ == Side::Origin)
                                   ? static_cast<long>(jj) - ld.leadExponent
                                   : ld.leadExponent + static_cast<long>(jj);
                    if (idx >= 0 && idx < static_cast<long>(ld.coeff.size()))
                        cache_[jj](i, k) = ld.coeff[static_cast<std::size_t>(idx)];
                }
            }
        }
    }

    const RationalMatrix& m_;
    Side side_;
    std::vector<LaurentData> ld_;
    std::vector<CMatrix> cache_;
};

void checkOdeNonResonance(const std::vector<cplx>& eig) {
    double scale = 1.0;
    for (cplx l : eig) scale = std::max(scale, std::abs(l));
    for (std::size_t i = 0; i < eig.size(); ++i) {
        for (std::size_t j = 0; j < eig.size(); ++j) {
            if (i == j) continue;
            cplx diff = eig[i] - eig[j];
            double r = std::round(diff.real());
            if (r != 0.0 && std::abs(diff - r) <= 1e-10 * scale)
                fail(ErrorCode::ResonantExponents,
                     "exponents of the limit ODE differ by a nonzero integer");
        }
    }
}

} // namespace

FrobeniusSolution frobenius_series(const RationalMatrix& tildeA, Side side,
                                   double tol, std::size_t maxTerms) {
    TaylorProvider taylor(tildeA, side);
    const std::size_t n = tildeA.size();

    std::vector<cplx> poles = tildeA.poles();
    double radius = 1.0;
    if (!poles.empty()) {
        radius = (side == Side::Origin)
                     ? std::numeric_limits<double>::infinity()
                     : 0.0;
        for (cplx s : poles)
            radius = (side == Side::Origin) ? std::min(radius, std::abs(s))
                                            : std::max(radius, std::abs(s));
    }

    FrobeniusSolution f;
    f.side = side;
    f.exponent = taylor.coeff(0);
    f.eigExponent = eigenvalues(f.exponent);
    checkOdeNonResonance(f.eigExponent);
    f.radius = radius;
    f.H.push_back(CMatrix::identity(n));

    // geometric decay probe: |z| at 0.75*radius (origin) or radius/0.75 (inf)
    const double decay = 0.75 * ((side == Side::Origin) ? radius : 1.0 / radius);
    double scalePow = 1.0;
    int quiet = 0;
    for (std::size_t k = 1; k <= maxTerms; ++k) {
        CMatrix rhs(n, n);
        for (std::size_t j = 1; j <= k; ++j)
            rhs += taylor.coeff(j) * f.H[k - j];
        double sgn = (side == Side::Origin) ? 1.0 : -1.0;
        f.H.push_back(sylvester_frobenius(f.exponent, f.eigExponent,
                                          sgn * static_cast<double>(k), rhs));
        scalePow *= decay;
        double contrib = f.H.back().frobeniusNorm() * scalePow;
        quiet = (contrib < tol / 10.0) ? quiet + 1 : 0;
        if (quiet >= 3 && k >= 4) break;
        if (k == maxTerms)
            fail(ErrorCode::NoConvergence,
                 "Frobenius series did not reach the requested tolerance");
    }
    return f;
}

CMatrix frobenius_eval(const FrobeniusSolution& f, cplx z) {
    if (z == cplx(0.0))
        fail(ErrorCode::ZeroArgument, "Frobenius evaluation needs z != 0");
    cplx step = (f.side == Side::Origin) ? z : 1.0 / z;
    CMatrix series = f.H[0];
    cplx zp = 1.0;
    for (std::size_t k = 1; k < f.H.size(); ++k) {
        zp *= step;
        series += zp * f.H[k];
    }
    CMatrix zE = matrix_exp(std::log(z) * f.exponent);
    return series * zE;
}

// ---- path integration -------------------------------------------------------

namespace {

cplx segPoint(const PathSeg& s, double u) {
    if (s.kind == PathSeg::Kind::Line) return s.z0 + u * (s.z1 - s.z0);
    double th = s.theta0 + u * (s.theta1 - s.theta0);
    return s.center + s.radius * cplx(std::cos(th), std::sin(th));
}

cplx segVelocity(const PathSeg& s, double u) {
    if (s.kind == PathSeg::Kind::Line) return s.z1 - s.z0;
    double th = s.theta0 + u * (s.theta1 - s.theta0);
    return cplx(0.0, 1.0) * s.radius * (s.theta1 - s.theta0) *
           cplx(std::cos(th), std::sin(th));
}

} // namespace

CMatrix integrate_ode(const RationalMatrix& tildeA,
                      const std::vector<PathSeg>& path, CMatrix W0,
                      double rtol) {
    // Dormand-Prince 5(4)
    static const double a21 = 1.0 / 5;
    static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                        a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                        a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                        a65 = -5103.0 / 18656;
    static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                        b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static const double d1 = 71.0 / 57600, d3 = -71.0 / 16695, d4 = 71.0 / 1920,
                        d5 = -17253.0 / 339200, d6 = 22.0 / 525, d7 = -1.0 / 40;
    static const double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;

    const double atol = 1e-15;
    CMatrix W = std::move(W0);
    for (const PathSeg& seg : path) {
        auto rhs = [&](double u, const CMatrix& Y) {
            cplx z = segPoint(seg, u);
            if (std::abs(z) < 1e-14)
                fail(ErrorCode::PathTooCloseToSingularity,
                     "integration path crosses the origin");
            return (segVelocity(seg, u) / z) * (tildeA.eval(z) * Y);
        };
        double s = 0.0, h = 0.05;
        long steps = 0;
        while (s < 1.0) {
            h = std::min(h, 1.0 - s);
            CMatrix k1 = rhs(s, W);
            CMatrix k2 = rhs(s + c2 * h, W + (h * a21) * k1);
            CMatrix k3 = rhs(s + c3 * h, W + (h * a31) * k1 + (h * a32) * k2);
            CMatrix k4 = rhs(s + c4 * h,
                             W + (h * a41) * k1 + (h * a42) * k2 + (h * a43) * k3);
            CMatrix k5 = rhs(s + c5 * h, W + (h * a51) * k1 + (h * a52) * k2 +
                                             (h * a53) * k3 + (h * a54) * k4);
            CMatrix k6 = rhs(s + h, W + (h * a61) * k1 + (h * a62) * k2 +
                                        (h * a63) * k3 + (h * a64) * k4 +
                                        (h * a65) * k5);
            CMatrix y5 = W + (h * b1) * k1 + (h * b3) * k3 + (h * b4) * k4 +
                         (h * b5) * k5 + (h * b6) * k6;
            CMatrix k7 = rhs(s + h, y5);
            CMatrix errMat = (h * d1) * k1 + (h * d3) * k3 + (h * d4) * k4 +
                             (h * d5) * k5 + (h * d6) * k6 + (h * d7) * k7;
            double scale = atol + rtol * std::max(W.maxAbs(), y5.maxAbs());
            double errn = errMat.maxAbs() / scale;
            if (errn <= 1.0) {
                s += h;
                W = std::move(y5);
            }
            double fac = 0.9 * std::pow(std::max(errn, 1e-16), -0.2);
            h *= std::clamp(fac, 0.2, 5.0);
            if (h < 1e-12)
                fail(ErrorCode::NoConvergence, "ODE step size underflow");
            if (++steps > 200000)
                fail(ErrorCode::NoConvergence, "ODE integration exceeded step budget");
        }
    }
    return W;
}

namespace {

double segmentDistance(cplx p0, cplx p1, cplx x) {
    cplx d = p1 - p0;
    double len2 = std::norm(d);
    if (len2 == 0.0) return std::abs(x - p0);
    double u = std::clamp(((x - p0) * std::conj(d)).real() / len2, 0.0, 1.0);
    return std::abs(x - (p0 + u * d));
}

} // namespace

MonodromyOracle ode_monodromy_oracle(const ConfluenceFamily& fam,
                                     std::size_t poleIndex, double rtol) {
    if (poleIndex >= fam.odePoles.size())
        fail(ErrorCode::SchemaError, "pole index out of range");
    cplx a = fam.odePoles[poleIndex];

    double minDist = std::abs(a);
    for (std::size_t i = 0; i < fam.odePoles.size(); ++i)
        if (i != poleIndex)
            minDist = std::min(minDist, std::abs(a - fam.odePoles[i]));
    double rho = 0.4 * minDist;

    FrobeniusSolution frob = frobenius_series(fam.tildeA, Side::Origin);
    cplx dir = a / std::abs(a);
    cplx seed = 0.7 * frob.radius * dir;
    cplx entry = a - rho * dir;
    for (std::size_t i = 0; i < fam.odePoles.size(); ++i) {
        if (i == poleIndex) continue;
        if (segmentDistance(seed, entry, fam.odePoles[i]) < 0.35 * minDist)
            fail(ErrorCode::PathTooCloseToSingularity,
                 "radial approach passes too close to another singularity");
    }

    PathSeg radial;
    radial.kind = PathSeg::Kind::Line;
    radial.z0 = seed;
    radial.z1 = entry;
    CMatrix v1 = integrate_ode(fam.tildeA, {radial}, frobenius_eval(frob, seed), rtol);

    PathSeg loop;
    loop.kind = PathSeg::Kind::Arc;
    loop.center = a;
    loop.radius = rho;
    loop.theta0 = std::arg(entry - a);
    loop.theta1 = loop.theta0 + kTwoPi;
    CMatrix v2 = integrate_ode(fam.tildeA, {loop}, v1, rtol);

    MonodromyOracle out;
    out.M = v1.solve(v2);

    // residue of tildeA(z)/z at the simple pole a, by a symmetric 4-point
    // average of (z-a)*tildeA(z)/z (cancels the analytic part to O(delta^4))
    double delta = 0.01 * rho;
    CMatrix res(out.M.rows(), out.M.cols());
    for (int k = 0; k < 4; ++k) {
        cplx off = delta * cplx(std::cos(k * kPi / 2.0), std::sin(k * kPi / 2.0));
        cplx z = a + off;
        res += (off / z) * fam.tildeA.eval(z);
    }
    res *= cplx(0.25);
    cplx expected = std::exp(cplx(0.0, kTwoPi) * res.trace());
    out.detResidual = std::abs(out.M.det() - expected) / std::abs(expected);
    return out;
}

// ---- sectors ----------------------------------------------------------------

double SectorPartition::midAngle(std::size_t j, double offsetFraction) const {
    double lo = rays[j].angle;
    double hi = (j + 1 < rays.size()) ? rays[j + 1].angle : rays[0].angle + kTwoPi;
    return 0.5 * (lo + hi) + offsetFraction * (hi - lo);
}

double SectorPartition::width(std::size_t j) const {
    double lo = rays[j].angle;
    double hi = (j + 1 < rays.size()) ? rays[j + 1].angle : rays[0].angle + kTwoPi;
    return hi - lo;
}

std::size_t SectorPartition::sectorOf(cplx z, double guardAngle) const {
    if (z == cplx(0.0))
        fail(ErrorCode::ZeroArgument, "sector lookup needs z != 0");
    double psi = std::arg(z) + kTwoPi; // in (pi, 3*pi]
    if (psi >= 3.0 * kPi - 1e-15) psi -= kTwoPi;
    for (const SectorRay& r : rays) {
        double d = std::abs(psi - r.angle);
        d = std::min(d, kTwoPi - d);
        if (d < guardAngle)
            fail(ErrorCode::OnSpiralRay,
                 "probe point sits on a sector boundary ray");
    }
    std::size_t j = 0;
    while (j + 1 < rays.size() && rays[j + 1].angle <= psi) ++j;
    return j;
}

SectorPartition sector_partition(const std::vector<cplx>& odePoles) {
    SectorPartition part;
    part.rays.push_back(SectorRay{kPi, -1});
    for (std::size_t i = 0; i < odePoles.size(); ++i) {
        cplx a = odePoles[i];
        if (std::abs(a) < 1e-12)
            fail(ErrorCode::SchemaError, "singularities must lie in C^*");
        double phi = std::arg(a);
        if (std::abs(std::abs(phi) - kPi) < 1e-9)
            fail(ErrorCode::AssumptionViolated,
                 "a singularity lies on the ray through -1; the sector "
                 "partition is not defined");
        part.rays.push_back(SectorRay{phi + kTwoPi, static_cast<int>(i)});
    }
    std::sort(part.rays.begin(), part.rays.end(),
              [](const SectorRay& a, const SectorRay& b) { return a.angle < b.angle; });
    for (std::size_t j = 1; j < part.rays.size(); ++j)
        if (part.rays[j].angle - part.rays[j - 1].angle < 1e-9)
            fail(ErrorCode::UnsupportedSpiralGeometry,
                 "two singular rays coincide; separate the arguments of the "
                 "singularities");
    return part;
}

// ---- eps sweep and crossing check ------------------------------------

SweepResult epsilon_sweep(const ConfluenceFamily& fam, const SectorPartition& part,
                          const std::vector<double>& epsGrid, double probeRadius,
                          double tol) {
    if (epsGrid.size() < 2)
        fail(ErrorCode::SchemaError, "eps sweep needs at least two grid points");
    for (std::size_t e = 1; e < epsGrid.size(); ++e)
        if (!(epsGrid[e] < epsGrid[e - 1]) || !(epsGrid[e] > 0.0))
            fail(ErrorCode::SchemaError, "eps grid must be positive and decreasing");

    std::vector<RationalQSystem> systems;
    std::vector<ConnectionData> conns;
    systems.reserve(epsGrid.size());
    for (double eps : epsGrid) {
        systems.push_back(fam.builder(eps));
        conns.push_back(make_connection(systems.back(), tol));
    }

    SweepResult res;
    res.epsGrid = epsGrid;
    const std::size_t nSec = part.sectorCount();
    res.value.assign(epsGrid.size(), {});
    res.increment.assign(epsGrid.size(), {});

    for (std::size_t j = 0; j < nSec; ++j) {
        for (int which = 0; which < 2; ++which) {
            double ang = part.midAngle(j, which == 0 ? 0.0 : 0.17);
            double rad = probeRadius * (which == 0 ? 1.0 : 1.23);
            bool placed = false;
            for (int attempt = 0; attempt < 10 && !placed; ++attempt) {
                cplx z = rad * std::pow(1.0337, attempt) *
                         cplx(std::cos(ang), std::sin(ang));
                std::vector<CMatrix> column;
                try {
                    for (std::size_t e = 0; e < epsGrid.size(); ++e)
                        column.push_back(connection_eval(systems[e], conns[e], z));
                } catch (const Error& err) {
                    switch (err.code()) {
                    case ErrorCode::OnPoleSpiral:
                    case ErrorCode::OnSpiralRay:
                    case ErrorCode::PropagationThroughPole:
                    case ErrorCode::IllConditionedInversion:
                    case ErrorCode::Overflow:
                        continue; // nudge the probe outward and retry
                    default:
                        throw;
                    }
                }
                placed = true;
                res.probes.push_back(z);
                res.probeSector.push_back(j);
                for (std::size_t e = 0; e < epsGrid.size(); ++e)
                    res.value[e].push_back(column[e]);
            }
            if (!placed)
                fail(ErrorCode::NoConvergence,
                     "could not place a probe clear of all registry spirals");
        }
    }

    const std::size_t nProbe = res.probes.size();
    for (std::size_t e = 1; e < epsGrid.size(); ++e) {
        res.increment[e].resize(nProbe);
        for (std::size_t pIdx = 0; pIdx < nProbe; ++pIdx)
            res.increment[e][pIdx] = relDiff(res.value[e][pIdx], res.value[e - 1][pIdx]);
    }
    res.sectorLimit = res.value.back();
    res.errorBar = res.increment.back();
    return res;
}

CrossingReport crossing_check(const ConfluenceFamily& fam,
                              const std::vector<double>& epsGrid,
                              double probeRadius) {
    CrossingReport rep;
    rep.partition = sector_partition(fam.odePoles);
    rep.sweep = epsilon_sweep(fam, rep.partition, epsGrid, probeRadius);

    for (std::size_t rj = 1; rj < rep.partition.rays.size(); ++rj) {
        CrossingReport::Crossing c;
        c.rayIndex = rj;
        c.poleIndex = static_cast<std::size_t>(rep.partition.rays[rj].poleIndex);
        const CMatrix& below = rep.sweep.sectorLimit[2 * (rj - 1)];
        const CMatrix& above = rep.sweep.sectorLimit[2 * rj];
        c.empirical = above.solve(below); // P_j^{-1} P_{j-1}
        MonodromyOracle orc = ode_monodromy_oracle(fam, c.poleIndex);
        c.oracle = orc.M;
        c.oracleDetResidual = orc.detResidual;
        c.residual = relDiff(c.empirical, c.oracle);
        c.errorBar = rep.sweep.errorBar[2 * rj] + rep.sweep.errorBar[2 * (rj - 1)];
        rep.crossings.push_back(c);
    }
    return rep;
}

} // namespace qb
