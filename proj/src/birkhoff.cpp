#include "qbirkhoff/birkhoff.hpp"
#include "qbirkhoff/error.hpp"

#include <algorithm>
#include <cmath>

namespace qb {

ConnectionData make_connection(const RationalQSystem& sys, double tol) {
    ConnectionData conn;
    conn.y0 = local_series(sys, Side::Origin, tol);
    conn.yInf = local_series(sys, Side::Infinity, tol);

    // P inherits every pole spiral of Y_0 plus the theta-zero spiral -q^Z
    // (zeros of the Lambda part of Y_inf become poles of Y_inf^{-1}); the
    // coefficient's singular points enter through propagation on both sides.
    conn.registry.add(cplx(-1.0));
    conn.registry.merge(character_pole_spirals(conn.y0.character));
    conn.registry.merge(character_pole_spirals(conn.yInf.character));
    const SystemData& sd = sys.data();
    for (cplx s : sd.polesRA) conn.registry.add(s);
    for (cplx s : sd.detZeros) conn.registry.add(s);
    return conn;
}

CMatrix connection_eval(const RationalQSystem& sys, const ConnectionData& conn,
                        cplx z, double poleTol) {
    if (auto hit = conn.registry.contains(sys.ctx(), z, poleTol))
        fail(ErrorCode::OnPoleSpiral,
             "connection matrix evaluated on a registry spiral");
    const ScaledCMatrix yInf = eval_solution(sys, conn.yInf, z, poleTol);
    const ScaledCMatrix y0 = eval_solution(sys, conn.y0, z, poleTol);
    if (yInf.m.conditionEstimate() > conn.condLimit)
        fail(ErrorCode::IllConditionedInversion,
             "Y_inf is too ill-conditioned to invert at this point");
    const double scale = y0.logScale - yInf.logScale;
    if (std::abs(scale) > 690.0)
        fail(ErrorCode::Overflow, "connection matrix scale exceeds double range");
    return yInf.m.inverse() * y0.m * cplx(std::exp(scale), 0.0);
}

double ellipticity_residual(const RationalQSystem& sys, const ConnectionData& conn,
                            double rmin, int samples, std::uint64_t seed,
                            double guard, double poleTol) {
    const QContext& ctx = sys.ctx();
    ProbeSampler sampler(seed);
    const double rmax = rmin * std::abs(ctx.q);
    std::vector<cplx> pts(samples);
    for (int i = 0; i < samples; ++i)
        pts[i] = sampler.annulusPointAvoiding(ctx, conn.registry, guard, rmin, rmax);
    std::vector<double> res(samples, 0.0);
    parallel_for(std::size_t(samples), [&](std::size_t i) {
        const CMatrix p = connection_eval(sys, conn, pts[i], poleTol);
        const CMatrix pq = connection_eval(sys, conn, ctx.q * pts[i], poleTol);
        res[i] = (pq - p).frobeniusNorm() / std::max(p.frobeniusNorm(), 1e-300);
    });
    double worst = 0.0;
    for (double r : res) worst = std::max(worst, r);
    return worst;
}

PoleScanResult pole_scan(const RationalQSystem& sys, const ConnectionData& conn,
                         int radialSteps, int angularSteps, double threshold,
                         double matchTol) {
    const QContext& ctx = sys.ctx();
    PoleScanResult out;
    const double lq = std::log(std::abs(ctx.q));
    const double twoPi = 6.283185307179586476925286766559;
    // grid spacing in spiral coordinates: radial step is 1/radialSteps of a
    // q-step; angular step converts via the log map
    const double spacing =
        std::max(1.0 / double(radialSteps), (twoPi / double(angularSteps)) / lq);
    if (matchTol <= 0.0) matchTol = 2.0 * spacing;

    const double rmin = 1.0; // fundamental annulus representative [1, |q|)
    std::vector<cplx> pts;
    std::vector<double> vals;
    for (int i = 0; i < radialSteps; ++i) {
        const double r = rmin * std::exp(lq * (double(i) + 0.5) / double(radialSteps));
        for (int j = 0; j < angularSteps; ++j) {
            const double th = twoPi * (double(j) + 0.5) / double(angularSteps);
            pts.push_back(std::polar(r, th));
            vals.push_back(0.0);
        }
    }
    parallel_for(pts.size(), [&](std::size_t k) {
        try {
            vals[k] = connection_eval(sys, conn, pts[k], 1e-12).maxAbs();
        } catch (const Error&) {
            vals[k] = std::numeric_limits<double>::infinity();
        }
    });

    std::vector<double> finite;
    for (double v : vals)
        if (std::isfinite(v)) finite.push_back(v);
    if (finite.empty())
        fail(ErrorCode::NoConvergence, "pole scan could not evaluate P anywhere");
    std::nth_element(finite.begin(), finite.begin() + finite.size() / 2, finite.end());
    out.medianValue = finite[finite.size() / 2];

    std::vector<bool> used(conn.registry.spirals().size(), false);
    for (std::size_t k = 0; k < pts.size(); ++k) {
        const bool blown =
            !std::isfinite(vals[k]) || vals[k] > threshold * std::max(out.medianValue, 1e-300);
        if (!blown) continue;
        PoleScanResult::Hit hit;
        hit.z = pts[k];
        hit.value = vals[k];
        double bestD = std::numeric_limits<double>::infinity();
        std::size_t bestI = 0;
        const auto& spirals = conn.registry.spirals();
        for (std::size_t s = 0; s < spirals.size(); ++s) {
            const SpiralHit h = spiral_locate(ctx, spirals[s].base, pts[k]);
            if (h.nearestIndex < spirals[s].minExp || h.nearestIndex > spirals[s].maxExp)
                continue;
            if (h.distance < bestD) {
                bestD = h.distance;
                bestI = s;
            }
        }
        hit.matchDistance = bestD;
        hit.matched = bestD <= matchTol;
        hit.registryIndex = bestI;
        if (hit.matched) {
            out.maxMatchedDistance = std::max(out.maxMatchedDistance, bestD);
            if (!used[bestI]) {
                used[bestI] = true;
                out.detected.add(conn.registry.spirals()[bestI]);
            }
        } else {
            ++out.unmatchedCount;
        }
        out.hits.push_back(hit);
    }
    return out;
}

} // namespace qb
