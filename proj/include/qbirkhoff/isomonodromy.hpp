#pragma once

#include "qbirkhoff/birkhoff.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace qb {

enum class PoleClass { Constant, ProportionalToT, Mixed };

// A t-family of q-systems sigma_q Y(z,t) = R(z,t) A(z,t) Y(z,t). The builder
// must be pure in t. Construction validates the deformation hypotheses:
//   - A(0,t), A(inf,t), mu0, muInf independent of t across the samples,
//   - r0(qt)/r0(t) and rInf(qt)/rInf(t) in q^Z,
// and classifies each pole of A(.,t) against A(.,qt) as constant,
// t-proportional, or mixed.
struct DeformationFamily {
    QContext ctx;
    std::function<RationalQSystem(cplx)> builder;
    std::vector<cplx> tSamples;
    std::vector<cplx> polesAtFirstT; // poles of A(.,t) at tSamples[0]
    std::vector<PoleClass> poleClasses;
    int proportionalCount = 0;
    bool classificationClean = true; // no Mixed entries
};

DeformationFamily make_deformation_family(
    const QContext& ctx, std::function<RationalQSystem(cplx)> builder,
    std::vector<cplx> tSamples, double tol = 1e-10);

// Caches systems/solutions/connections at t and qt for repeated evaluation.
class DeformationEvaluator {
public:
    DeformationEvaluator(const DeformationFamily& fam, cplx t,
                         double tol = 1e-14);

    const RationalQSystem& sysT() const { return *sysT_; }
    const RationalQSystem& sysQT() const { return *sysQT_; }

    // B_side(z,t) = Y_side(z,qt) Y_side(z,t)^{-1}
    CMatrix deformationMatrix(cplx z, Side side, double poleTol = 1e-8) const;
    CMatrix connectionAtT(cplx z, double poleTol = 1e-8) const;
    CMatrix connectionAtQT(cplx z, double poleTol = 1e-8) const;

    // points to keep clear of when probing (registries of both systems)
    SpiralSet avoidSet() const;

private:
    const DeformationFamily& fam_;
    cplx t_;
    std::unique_ptr<RationalQSystem> sysT_, sysQT_;
    LocalSolution y0T_, yInfT_, y0QT_, yInfQT_;
    ConnectionData connT_, connQT_;
};

// max over probes of ||P(z,qt) - P(z,t)|| / ||P(z,t)||
double pseudo_constancy_test(const DeformationEvaluator& ev,
                             const std::vector<cplx>& zProbes,
                             double poleTol = 1e-8);

// Lax pair residual: with M(z,t) = R(z,t) A(z,t) the full coefficient and
// B(z,t) = Y(z,qt) Y(z,t)^{-1}, isomonodromy forces
//   M(z,qt) B(z,t) = B(qz,t) M(z,t).
// Returns the max normalized residual over the probes.
double lax_residual(const DeformationEvaluator& ev, Side side,
                    const std::vector<cplx>& zProbes, double poleTol = 1e-8);

struct RationalityReport {
    bool isRational = false;
    double fitResidual = 0.0;      // out-of-sample relative error of the fit
    std::vector<cplx> poles;       // significant fitted poles in C^*
    int degreeBound = 0;
};

// Least-squares rational fit (entrywise, monic denominator of degree
// degreeBound) of an evaluable matrix function on two circles: one to fit,
// one to validate. Fitted denominator roots are kept as poles only when
// their residue is significant.
RationalityReport rationality_check(const std::function<CMatrix(cplx)>& F,
                                    std::size_t nu, int degreeBound,
                                    double fitRadius, int samples = 0,
                                    double acceptTol = 1e-6);

} // namespace qb
