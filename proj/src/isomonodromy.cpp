#include "qbirkhoff/isomonodromy.hpp"

#include "qbirkhoff/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace qb {

namespace {

// relative distance of s to the nearest point of pts
double nearestRelDist(cplx s, const std::vector<cplx>& pts) {
    double best = std::numeric_limits<double>::infinity();
    for (cplx p : pts) {
        double d = std::abs(s - p) / std::max({1e-300, std::abs(s), std::abs(p)});
        best = std::min(best, d);
    }
    return best;
}

void checkRQuotient(const QContext& ctx, cplx rT, cplx rQT, const char* which) {
    if (rT == cplx(0.0) || rQT == cplx(0.0))
        fail(ErrorCode::RFamilyHypothesis,
             std::string("leading coefficient ") + which + " vanishes in the family");
    SpiralHit hit = spiral_locate(ctx, cplx(1.0), rQT / rT);
    if (hit.distance > 1e-8)
        fail(ErrorCode::RFamilyHypothesis,
             std::string("r-family hypothesis fails: ") + which +
                 "(qt)/" + which + "(t) is not an integer power of q");
}

} // namespace

DeformationFamily make_deformation_family(
    const QContext& ctx, std::function<RationalQSystem(cplx)> builder,
    std::vector<cplx> tSamples, double tol) {
    if (tSamples.empty())
        fail(ErrorCode::SchemaError, "deformation family needs at least one t sample");
    for (cplx t : tSamples)
        if (std::abs(t) < 1e-12)
            fail(ErrorCode::SchemaError, "deformation parameter t must be nonzero");

    DeformationFamily fam;
    fam.ctx = ctx;
    fam.builder = builder;
    fam.tSamples = tSamples;

    RationalQSystem ref = builder(tSamples[0]);
    const SystemData& rd = ref.data();

    for (std::size_t si = 0; si < tSamples.size(); ++si) {
        cplx t = tSamples[si];
        RationalQSystem sysT = (si == 0) ? ref : builder(t);
        RationalQSystem sysQT = builder(ctx.q * t);
        const SystemData& dt = sysT.data();
        const SystemData& dq = sysQT.data();

        if (dt.mu0 != rd.mu0 || dt.muInf != rd.muInf ||
            dq.mu0 != rd.mu0 || dq.muInf != rd.muInf)
            fail(ErrorCode::AssumptionViolated,
                 "deformation family: the orders of R at 0/infinity vary with t");
        if (relDiff(dt.A0, rd.A0) > tol || relDiff(dq.A0, rd.A0) > tol)
            fail(ErrorCode::AssumptionViolated,
                 "deformation family: A(0) is not independent of t");
        if (relDiff(dt.AInf, rd.AInf) > tol || relDiff(dq.AInf, rd.AInf) > tol)
            fail(ErrorCode::AssumptionViolated,
                 "deformation family: A(infinity) is not independent of t");

        checkRQuotient(ctx, dt.r0, dq.r0, "r0");
        checkRQuotient(ctx, dt.rInf, dq.rInf, "rInf");

        if (si == 0) {
            fam.polesAtFirstT = dt.polesRA;
            const std::vector<cplx>& polesQT = dq.polesRA;
            for (cplx s : fam.polesAtFirstT) {
                double dConst = nearestRelDist(s, polesQT);
                double dProp = nearestRelDist(ctx.q * s, polesQT);
                bool isConst = dConst <= 1e-8;
                bool isProp = dProp <= 1e-8;
                if (isConst && isProp) {
                    fam.poleClasses.push_back(PoleClass::Mixed);
                    fam.classificationClean = false;
                } else if (isProp) {
                    fam.poleClasses.push_back(PoleClass::ProportionalToT);
                    ++fam.proportionalCount;
                } else if (isConst) {
                    fam.poleClasses.push_back(PoleClass::Constant);
                } else {
                    fail(ErrorCode::FamilyNotClosed,
                         "deformation family: a pole of the coefficient moves with t "
                         "but not proportionally to it");
                }
            }
        }
    }
    return fam;
}

DeformationEvaluator::DeformationEvaluator(const DeformationFamily& fam, cplx t,
                                           double tol)
    : fam_(fam), t_(t) {
    sysT_ = std::make_unique<RationalQSystem>(fam.builder(t));
    sysQT_ = std::make_unique<RationalQSystem>(fam.builder(fam.ctx.q * t));
    connT_ = make_connection(*sysT_, tol);
    connQT_ = make_connection(*sysQT_, tol);
    y0T_ = connT_.y0;
    yInfT_ = connT_.yInf;
    y0QT_ = connQT_.y0;
    yInfQT_ = connQT_.yInf;
}

CMatrix DeformationEvaluator::deformationMatrix(cplx z, Side side,
                                                double poleTol) const {
    const LocalSolution& st = (side == Side::Origin) ? y0T_ : yInfT_;
    const LocalSolution& sq = (side == Side::Origin) ? y0QT_ : yInfQT_;
    ScaledCMatrix yq = eval_solution(*sysQT_, sq, z, poleTol);
    ScaledCMatrix yt = eval_solution(*sysT_, st, z, poleTol);
    ScaledCMatrix out{yq.m * yt.m.inverse(), yq.logScale - yt.logScale};
    return out.value();
}

CMatrix DeformationEvaluator::connectionAtT(cplx z, double poleTol) const {
    return connection_eval(*sysT_, connT_, z, poleTol);
}

CMatrix DeformationEvaluator::connectionAtQT(cplx z, double poleTol) const {
    return connection_eval(*sysQT_, connQT_, z, poleTol);
}

SpiralSet DeformationEvaluator::avoidSet() const {
    SpiralSet s = connT_.registry;
    s.merge(connQT_.registry);
    return s;
}

double pseudo_constancy_test(const DeformationEvaluator& ev,
                             const std::vector<cplx>& zProbes, double poleTol) {
    double worst = 0.0;
    for (cplx z : zProbes) {
        CMatrix pt = ev.connectionAtT(z, poleTol);
        CMatrix pq = ev.connectionAtQT(z, poleTol);
        worst = std::max(worst, relDiff(pq, pt));
    }
    return worst;
}

double lax_residual(const DeformationEvaluator& ev, Side side,
                    const std::vector<cplx>& zProbes, double poleTol) {
    const cplx q = ev.sysT().ctx().q;
    double worst = 0.0;
    for (cplx z : zProbes) {
        CMatrix bz = ev.deformationMatrix(z, side, poleTol);
        CMatrix bqz = ev.deformationMatrix(q * z, side, poleTol);
        CMatrix mT = ev.sysT().evalRA(z);
        CMatrix mQT = ev.sysQT().evalRA(z);
        worst = std::max(worst, relDiff(mQT * bz, bqz * mT));
    }
    return worst;
}

RationalityReport rationality_check(const std::function<CMatrix(cplx)>& F,
                                    std::size_t nu, int degreeBound,
                                    double fitRadius, int samples,
                                    double acceptTol) {
    const int dMax = degreeBound;
    if (samples <= 0) samples = std::max(4 * (2 * dMax + 1), 48);

    const double twoPi = 6.283185307179586476925286766559;
    std::vector<cplx> w(samples), wv(samples); // fit / validation abscissae, |w| = 1
    std::vector<CMatrix> fVals(samples), vVals(samples);
    double scale = 0.0;
    for (int k = 0; k < samples; ++k) {
        double ang = twoPi * (k + 0.31) / samples;
        double angv = twoPi * (k + 0.81) / samples;
        w[k] = cplx(std::cos(ang), std::sin(ang));
        wv[k] = cplx(std::cos(angv), std::sin(angv));
        fVals[k] = F(fitRadius * w[k]);
        vVals[k] = F(fitRadius * wv[k]);
        scale = std::max({scale, fVals[k].maxAbs(), vVals[k].maxAbs()});
    }
    if (scale == 0.0) scale = 1.0;

    RationalityReport rep;
    rep.degreeBound = dMax;

    // Fit each entry at the smallest degree whose out-of-sample validation
    // passes. Attempting the full bound directly would leave the linear
    // system rank-deficient whenever the true degree is lower (numerator and
    // denominator may be multiplied by any common factor).
    double err = 0.0;
    bool allOk = true;
    std::vector<CPolynomial> nums(nu * nu), dens(nu * nu);
    for (std::size_t i = 0; i < nu; ++i) {
        for (std::size_t j = 0; j < nu; ++j) {
            double bestErr = std::numeric_limits<double>::infinity();
            CPolynomial bestNum, bestDen = CPolynomial::constant(1.0);
            bool accepted = false;
            for (int d = 0; d <= dMax && !accepted; ++d) {
                const int unknowns = 2 * d + 1; // a_0..a_d, monic-den b_0..b_{d-1}
                // rows: sum_k a_k w^k - f(w) sum_{l<d} b_l w^l = f(w) w^d
                CMatrix design(samples, unknowns);
                CMatrix rhs(samples, 1);
                for (int s = 0; s < samples; ++s) {
                    cplx f = fVals[s](i, j) / scale;
                    cplx wp = 1.0;
                    for (int k = 0; k <= d; ++k) {
                        design(s, k) = wp;
                        if (k < d) design(s, d + 1 + k) = -f * wp;
                        wp *= w[s];
                    }
                    rhs(s, 0) = f * wp / w[s]; // f * w^d
                }
                // normal equations
                CMatrix dh = design.transpose();
                for (std::size_t r = 0; r < dh.rows(); ++r)
                    for (std::size_t c = 0; c < dh.cols(); ++c)
                        dh(r, c) = std::conj(dh(r, c));
                CMatrix sol;
                try {
                    sol = (dh * design).solve(dh * rhs);
                } catch (const Error&) {
                    continue; // rank-deficient at this degree; try the next
                }
                std::vector<cplx> nc(d + 1), dc(d + 1);
                for (int k = 0; k <= d; ++k) nc[k] = sol(k, 0);
                for (int k = 0; k < d; ++k) dc[k] = sol(d + 1 + k, 0);
                dc[d] = 1.0;
                CPolynomial numFit(nc), denFit(dc);

                // out-of-sample validation on the interleaved angles
                double e = 0.0;
                for (int k = 0; k < samples; ++k) {
                    cplx den = denFit.eval(wv[k]);
                    if (std::abs(den) < 1e-13) {
                        e = std::numeric_limits<double>::infinity();
                        break;
                    }
                    cplx fit = scale * numFit.eval(wv[k]) / den;
                    e = std::max(e, std::abs(fit - vVals[k](i, j)) / scale);
                }
                if (e < bestErr) {
                    bestErr = e;
                    bestNum = numFit;
                    bestDen = denFit;
                }
                if (e <= acceptTol) accepted = true;
            }
            if (!std::isfinite(bestErr))
                fail(ErrorCode::DegenerateFit,
                     "rational fit failed at every degree up to the bound; "
                     "move the fit circle away from singularities");
            nums[i * nu + j] = bestNum;
            dens[i * nu + j] = bestDen;
            err = std::max(err, bestErr);
            if (!accepted) allOk = false;
        }
    }
    rep.fitResidual = err;
    rep.isRational = allOk;

    if (rep.isRational) {
        std::vector<cplx> poles;
        for (std::size_t e = 0; e < nu * nu; ++e) {
            if (dens[e].degree() < 1) continue;
            CPolynomial dden = dens[e].derivative();
            for (cplx wr : dens[e].roots()) {
                cplx dp = dden.eval(wr);
                if (dp == cplx(0.0)) continue;
                cplx residue = nums[e].eval(wr) / dp;
                if (std::abs(residue) <= 1e-6 * std::max(1.0, std::abs(wr)))
                    continue; // spurious fit pole (tiny residue)
                cplx zr = fitRadius * wr;
                if (std::abs(zr) > 1e-10 && std::abs(zr) < 1e10)
                    poles.push_back(zr);
            }
        }
        rep.poles = dedupPoints(std::move(poles), 1e-4);
    }
    return rep;
}

} // namespace qb
