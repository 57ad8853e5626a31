#include "qbirkhoff/qsystem.hpp"
#include "qbirkhoff/error.hpp"
#include "qbirkhoff/jordan.hpp"

#include <algorithm>
#include <cmath>

namespace qb {

namespace {

// value of a rational function at 0 / infinity given analyticity there
cplx valueAt0(const CRationalFunction& f) {
    const LaurentData ld = f.laurentAt0(1);
    if (ld.coeff.empty() || f.isZero()) return 0.0;
    if (ld.leadExponent > 0) return 0.0;
    if (ld.leadExponent < 0)
        fail(ErrorCode::PoleAtZeroOrInfinity, "entry has a pole at z = 0");
    return ld.coeff[0];
}

cplx valueAtInf(const CRationalFunction& f) {
    const LaurentData ld = f.laurentAtInf(1);
    if (ld.coeff.empty() || f.isZero()) return 0.0;
    if (ld.leadExponent < 0) return 0.0;
    if (ld.leadExponent > 0)
        fail(ErrorCode::PoleAtZeroOrInfinity, "entry has a pole at z = infinity");
    return ld.coeff[0];
}

} // namespace

RationalQSystem::RationalQSystem(QContext ctx, CRationalFunction R, RationalMatrix A)
    : ctx_(std::move(ctx)), R_(std::move(R)), A_(std::move(A)) {
    analyze();
}

RationalQSystem RationalQSystem::fromSigmaP(QContext ctx, CRationalFunction Rp,
                                            RationalMatrix Ap) {
    // sigma_p Y = Rp A p Y  <=>  Y(z) = Rp(qz) Ap(qz) Y(qz)
    //                        <=>  sigma_q Y = [Rp(qz) Ap(qz)]^{-1} Y
    const cplx q = ctx.q;
    CRationalFunction Rq = Rp.scaleArgument(q).reciprocal();
    RationalMatrix Aq = Ap.scaleArgument(q).inverse();
    return RationalQSystem(std::move(ctx), std::move(Rq), std::move(Aq));
}

CMatrix RationalQSystem::evalRA(cplx z) const {
    return R_.eval(z) * A_.eval(z);
}

void RationalQSystem::analyze() {
    const std::size_t n = A_.size();
    if (n == 0) fail(ErrorCode::SchemaError, "empty system matrix");
    if (R_.isZero()) fail(ErrorCode::SchemaError, "R must be a nonzero rational function");

    // R local data
    {
        const LaurentData l0 = R_.laurentAt0(1);
        data_.mu0 = l0.leadExponent;
        data_.r0 = l0.coeff[0];
        const LaurentData li = R_.laurentAtInf(1);
        data_.muInf = li.leadExponent;
        data_.rInf = li.coeff[0];
    }

    // A analytic and invertible at 0 and infinity
    data_.A0 = CMatrix(n, n);
    data_.AInf = CMatrix(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const auto& f = A_(i, j);
            if (!f.isZero() && f.valuationAt0() < 0)
                fail(ErrorCode::PoleAtZeroOrInfinity,
                     "hypothesis violated: A(z) must be analytic at z = 0 "
                     "(entry has negative valuation)");
            if (!f.isZero() && f.degreeAtInf() > 0)
                fail(ErrorCode::PoleAtZeroOrInfinity,
                     "hypothesis violated: A(z) must be analytic at z = infinity "
                     "(entry grows at infinity)");
            data_.A0(i, j) = valueAt0(f);
            data_.AInf(i, j) = valueAtInf(f);
        }
    const double s0 = std::max(data_.A0.maxAbs(), 1e-300);
    const double si = std::max(data_.AInf.maxAbs(), 1e-300);
    if (std::abs(data_.A0.det()) <= 1e-12 * std::pow(s0, double(n)))
        fail(ErrorCode::SingularLeadingMatrix,
             "hypothesis violated: A(0) must be invertible (Fuchsian at 0)");
    if (std::abs(data_.AInf.det()) <= 1e-12 * std::pow(si, double(n)))
        fail(ErrorCode::SingularLeadingMatrix,
             "hypothesis violated: A(infinity) must be invertible (Fuchsian at "
             "infinity)");

    data_.eigA0 = eigenvalues(data_.A0);
    data_.eigAInf = eigenvalues(data_.AInf);

    // non-resonance: eigenvalues pairwise distinct modulo q^Z
    auto checkResonance = [&](const std::vector<cplx>& eig, const char* where) {
        for (std::size_t i = 0; i < eig.size(); ++i)
            for (std::size_t j = 0; j < eig.size(); ++j) {
                if (i == j) continue;
                const double scale = std::max({1.0, std::abs(eig[i]), std::abs(eig[j])});
                if (std::abs(eig[i] - eig[j]) <= 1e-10 * scale) continue; // equal: allowed
                if (std::abs(eig[i]) < 1e-300 || std::abs(eig[j]) < 1e-300) continue;
                const SpiralHit h = spiral_locate(ctx_, eig[j], eig[i]);
                if (h.distance <= 1e-10 && h.nearestIndex != 0)
                    fail(ErrorCode::Resonant,
                         std::string("hypothesis violated: eigenvalues of ") + where +
                             " must be pairwise distinct modulo q^Z (resonant pair "
                             "found)");
            }
    };
    checkResonance(data_.eigA0, "A(0)");
    checkResonance(data_.eigAInf, "A(infinity)");

    // singular points of the coefficient in C^*
    RationalMatrix RA = A_.scalarMul(R_);
    std::vector<cplx> poles;
    for (cplx s : RA.poles())
        if (std::abs(s) > 1e-12) poles.push_back(s);
    data_.polesRA = poles;

    CRationalFunction detRA = A_.det();
    for (std::size_t k = 0; k < n; ++k) detRA *= R_;
    std::vector<cplx> zeros;
    for (cplx s : detRA.reciprocal().poles())
        if (std::abs(s) > 1e-12) zeros.push_back(s);
    data_.detZeros = zeros;

    double rmin = std::numeric_limits<double>::infinity(), rmax = 0.0;
    for (cplx s : data_.polesRA) {
        rmin = std::min(rmin, std::abs(s));
        rmax = std::max(rmax, std::abs(s));
    }
    data_.workingRadius0 = std::isfinite(rmin) ? 0.5 * rmin : 1.0;
    data_.workingRadiusInf = (rmax > 0.0) ? 2.0 * rmax : 1.0;
}

LocalSolution local_series(const RationalQSystem& sys, Side side, double tol,
                           std::size_t maxTerms) {
    const SystemData& sd = sys.data();
    const std::size_t n = sys.nu();
    LocalSolution sol;
    sol.side = side;
    sol.tolerance = tol;

    const bool origin = (side == Side::Origin);
    const CMatrix B = origin ? (sd.r0 * sd.A0) : (sd.rInf * sd.AInf);
    sol.character = make_character(B);
    sol.thetaPower = origin ? sd.mu0 : sd.muInf;
    sol.seriesRadius = origin ? sd.workingRadius0 : sd.workingRadiusInf;

    // Laurent data of z^{-mu} R A about the relevant point, grown on demand
    const int mu = sol.thetaPower;
    std::vector<CMatrix> M; // M[j]: coefficient of z^j (resp (1/z)^j)
    auto growM = [&](std::size_t upTo) {
        if (M.size() > upTo) return;
        const std::size_t want = std::max<std::size_t>(upTo + 1, M.empty() ? 16 : 2 * M.size());
        std::vector<CMatrix> fresh(want, CMatrix(n, n));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                CRationalFunction f = sys.A()(i, j) * sys.R();
                if (f.isZero()) continue;
                const LaurentData ld =
                    origin ? f.laurentAt0(want) : f.laurentAtInf(want);
                // shift: we need coefficients of z^{-mu} f
                const int lead = ld.leadExponent - mu;
                for (std::size_t k = 0; k < ld.coeff.size(); ++k) {
                    const long idx = origin ? (lead + long(k)) : (long(k) - lead);
                    if (idx >= 0 && idx < long(want))
                        fresh[idx](i, j) = ld.coeff[k];
                }
            }
        M = std::move(fresh);
    };
    growM(8);

    // sanity: leading coefficient equals B
    if (relDiff(M[0], B) > 1e-9)
        fail(ErrorCode::IllConditioned,
             "leading Laurent coefficient disagrees with r*A(0/inf)");

    std::vector<cplx> eigB;
    for (std::size_t k = 0; k < sol.character.jordan.blockEig.size(); ++k)
        for (std::size_t r = 0; r < sol.character.jordan.blockSize[k]; ++r)
            eigB.push_back(sol.character.jordan.blockEig[k]);

    sol.H.push_back(CMatrix::identity(n));
    const double rho = origin ? sol.seriesRadius : 1.0 / sol.seriesRadius;
    int quietRuns = 0;
    for (std::size_t k = 1; k <= maxTerms; ++k) {
        growM(k);
        CMatrix C(n, n);
        for (std::size_t j = 1; j <= k; ++j) {
            if (M[j].maxAbs() == 0.0) continue;
            C += M[j] * sol.H[k - j];
        }
        const cplx c = origin ? sys.ctx().qPow(long(k)) : sys.ctx().qPow(-long(k));
        sol.H.push_back(sylvester_shifted(B, eigB, c, C));
        const double contrib = sol.H.back().maxAbs() * std::pow(rho, double(k));
        if (contrib < tol / 10.0) {
            if (++quietRuns >= 3 && k >= 4) break;
        } else {
            quietRuns = 0;
        }
        if (k == maxTerms)
            fail(ErrorCode::NoConvergence,
                 "local series did not reach the truncation criterion within the "
                 "term budget");
    }

    // pole registry of this solution
    sol.poleRegistry = character_pole_spirals(sol.character);
    if (sol.thetaPower < 0) sol.poleRegistry.add(cplx(-1.0));
    if (origin) {
        for (cplx s : sd.polesRA) {
            Spiral sp;
            sp.base = s;
            sp.minExp = 1;
            sol.poleRegistry.add(sp);
        }
    } else {
        auto addDown = [&](cplx s) {
            Spiral sp;
            sp.base = s;
            sp.maxExp = 0;
            sol.poleRegistry.add(sp);
        };
        for (cplx s : sd.polesRA) addDown(s);
        for (cplx s : sd.detZeros) addDown(s);
    }
    return sol;
}

namespace {

CMatrix seriesValue(const LocalSolution& sol, cplx w) {
    // w is z (origin) or 1/z (infinity)
    const std::size_t n = sol.H[0].rows();
    CMatrix acc(n, n);
    for (std::size_t k = sol.H.size(); k-- > 0;) {
        acc = acc * w;
        acc += sol.H[k];
    }
    return acc;
}

} // namespace

ScaledCMatrix eval_solution(const RationalQSystem& sys, const LocalSolution& sol,
                            cplx z, double poleTol) {
    if (z == cplx(0.0))
        fail(ErrorCode::ZeroArgument, "eval_solution requires z in C^*");
    const QContext& ctx = sys.ctx();
    if (auto hit = sol.poleRegistry.contains(ctx, z, poleTol))
        fail(ErrorCode::OnPoleSpiral,
             "solution evaluated on a registered pole spiral");

    const bool origin = (sol.side == Side::Origin);
    const double za = std::abs(z);
    long steps = 0;
    const double lq = std::log(std::abs(ctx.q));
    if (origin && za > sol.seriesRadius)
        steps = long(std::ceil(std::log(za / sol.seriesRadius) / lq - 1e-12));
    if (!origin && za < sol.seriesRadius)
        steps = long(std::ceil(std::log(sol.seriesRadius / za) / lq - 1e-12));

    const cplx w = origin ? z * std::exp(-double(steps) * ctx.logq)
                          : z * std::exp(double(steps) * ctx.logq);

    // local value at the reduced point
    ScaledCMatrix Y = matrix_char_eval(ctx, sol.character, w, sol.tolerance, poleTol);
    Y.m = seriesValue(sol, origin ? w : 1.0 / w) * Y.m;
    if (sol.thetaPower != 0) {
        const ScaledComplex th =
            theta_scaled(ctx, w, sol.tolerance).powInt(sol.thetaPower);
        Y.m = Y.m * th.m;
        Y.logScale += th.logs;
    }
    Y.normalize();
    if (steps == 0) return Y;

    // propagation cocycle
    ScaledCMatrix T{CMatrix::identity(sys.nu()), 0.0};
    const SystemData& sd = sys.data();
    auto guardPoint = [&](cplx x, const std::vector<cplx>& bad) {
        for (cplx s : bad)
            if (std::abs(x - s) <= 1e-12 * std::max(1.0, std::abs(s)))
                fail(ErrorCode::PropagationThroughPole,
                     "propagation step hits a singular point of the coefficient");
    };
    if (origin) {
        for (long j = 1; j <= steps; ++j) {
            const cplx x = z * std::exp(-double(j) * ctx.logq);
            guardPoint(x, sd.polesRA);
            T.m = T.m * sys.evalRA(x);
            if (j % 8 == 0) T.normalize();
        }
    } else {
        for (long j = 0; j < steps; ++j) {
            const cplx x = z * std::exp(double(j) * ctx.logq);
            guardPoint(x, sd.polesRA);
            guardPoint(x, sd.detZeros);
            T.m = T.m * sys.evalRA(x).inverse();
            if (j % 8 == 0) T.normalize();
        }
    }
    T.normalize();
    ScaledCMatrix out;
    out.m = T.m * Y.m;
    out.logScale = T.logScale + Y.logScale;
    out.normalize();
    return out;
}

CMatrix series_part_eval(const RationalQSystem& sys, const LocalSolution& sol,
                         cplx z, double poleTol) {
    const QContext& ctx = sys.ctx();
    const ScaledCMatrix Y = eval_solution(sys, sol, z, poleTol);
    const ScaledCMatrix L = matrix_char_eval(ctx, sol.character, z, sol.tolerance, poleTol);
    ScaledComplex th{1.0, 0.0};
    if (sol.thetaPower != 0)
        th = theta_scaled(ctx, z, sol.tolerance).powInt(-sol.thetaPower);
    ScaledCMatrix out;
    out.m = Y.m * L.m.inverse() * th.m;
    out.logScale = Y.logScale - L.logScale + th.logs;
    out.normalize();
    return out.value();
}

} // namespace qb
