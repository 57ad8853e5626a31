#pragma once

#include "qbirkhoff/birkhoff.hpp"

#include <functional>
#include <vector>

namespace qb {

// A family of q-systems indexed by eps with q = q0^eps, q0 > 1 real, that
// collapses onto the Fuchsian ODE  delta Y = tildeA(z) Y  (delta = z d/dz)
// as eps -> 0+. tildeA is analytic at 0 and infinity; its poles in C^* are
// the singular directions along which the connection-matrix limit jumps.
struct ConfluenceFamily {
    double q0 = 2.0;
    std::function<RationalQSystem(double)> builder; // eps -> system
    RationalMatrix tildeA;
    std::vector<cplx> odePoles; // singularities of tildeA in C^*
};

// sigma_q Y = (I + (q-1) calA(z)) Y, calA fixed across the family.
ConfluenceFamily make_confluence_delta(double q0, const RationalMatrix& calA);

// The q-Painleve-VI-type discretization: with
//   calA(z) = R0/z + R1/(z-1) + Rt/(z-t),  p = 1/q,
// the family  sigma_p Y = [I + (p-1) z calA(z)] Y  ingested in sigma_q form.
// Limit ODE: Y' = calA(z) Y, i.e. delta Y = z calA(z) Y.
ConfluenceFamily make_confluence_fuchsian(double q0, const CMatrix& R0,
                                     const CMatrix& R1, const CMatrix& Rt,
                                     cplx t);

// ---- ODE side --------------------------------------------------------------

// Frobenius fundamental solution of delta Y = tildeA(z) Y at 0 or infinity:
//   Y(z) = (sum_k H_k z^{+-k}) z^{E},  H_0 = I,  E = tildeA(0) resp. tildeA(inf),
// with recursion  +-k H_k + H_k E - E H_k = sum_{j>=1} A_j H_{k-j}.
// Requires non-resonant exponents: eigenvalue differences of E not in Z\{0}.
struct FrobeniusSolution {
    Side side = Side::Origin;
    std::vector<CMatrix> H;
    CMatrix exponent;
    std::vector<cplx> eigExponent;
    double radius = 1.0; // series trusted for |z| <= 0.75*radius (origin side)
};

FrobeniusSolution frobenius_series(const RationalMatrix& tildeA, Side side,
                                   double tol = 1e-14, std::size_t maxTerms = 400);

// series * z^E with the principal branch of log z.
CMatrix frobenius_eval(const FrobeniusSolution& f, cplx z);

// Piecewise path for analytic continuation.
struct PathSeg {
    enum class Kind { Line, Arc } kind = Kind::Line;
    cplx z0, z1;               // Line: z0 -> z1
    cplx center;               // Arc: center + radius * e^{i theta}
    double radius = 0.0;
    double theta0 = 0.0, theta1 = 0.0; // theta1 > theta0 traverses CCW
};

// Continue W' = (tildeA(z)/z) W along the path from W0 (Dormand-Prince 5(4),
// adaptive). Returns the value at the end of the last segment.
CMatrix integrate_ode(const RationalMatrix& tildeA,
                      const std::vector<PathSeg>& path, CMatrix W0,
                      double rtol = 1e-12);

// Monodromy of the normalized Frobenius solution at 0 continued CCW around
// odePoles[poleIndex]: radial approach along the ray of the pole, one CCW
// circle of radius 0.4 * (distance to the nearest other singularity or 0),
// M = W(entry)^{-1} W(entry after loop).
struct MonodromyOracle {
    CMatrix M;
    double detResidual = 0.0; // |det M - exp(2 pi i tr Res)| / |exp(...)|
};

MonodromyOracle ode_monodromy_oracle(const ConfluenceFamily& fam,
                                     std::size_t poleIndex,
                                     double rtol = 1e-12);

// ---- sectors and the eps sweep ---------------------------------------------

// Angular rays bounding the sectors on which lim P is locally constant:
// the theta ray through -1 (angle pi) plus the ray of each ODE pole, angles
// lifted to [pi, 3*pi).
struct SectorRay {
    double angle = 0.0;
    int poleIndex = -1; // -1 for the theta ray
};

struct SectorPartition {
    std::vector<SectorRay> rays; // sorted ascending, rays[0] = {pi, -1}
    std::size_t sectorCount() const { return rays.size(); }
    // sector j spans (rays[j].angle, rays[j+1].angle), wrapping at the end
    double midAngle(std::size_t j, double offsetFraction = 0.0) const;
    double width(std::size_t j) const;
    // index of the sector containing z; OnSpiralRay within guardAngle of a ray
    std::size_t sectorOf(cplx z, double guardAngle = 1e-6) const;
};

SectorPartition sector_partition(const std::vector<cplx>& odePoles);

struct SweepResult {
    std::vector<double> epsGrid; // decreasing
    std::vector<cplx> probes;
    std::vector<std::size_t> probeSector;
    std::vector<std::vector<CMatrix>> value;    // [eps][probe]
    std::vector<std::vector<double>> increment; // [eps>=1][probe]
    std::vector<CMatrix> sectorLimit;           // value at the smallest eps
    std::vector<double> errorBar;               // last increment per probe
};

// Evaluate the connection matrix of builder(eps) at fixed probes (two per
// sector) across the eps grid. Probes colliding with a registry spiral at
// any eps are nudged outward and the whole column is retried.
SweepResult epsilon_sweep(const ConfluenceFamily& fam,
                          const SectorPartition& part,
                          const std::vector<double>& epsGrid,
                          double probeRadius = 1.0, double tol = 1e-12);

// Full crossing verification: for each pole ray, the empirical jump
// P_j^{-1} P_{j-1} of the swept sector limits against the ODE monodromy.
struct CrossingReport {
    SectorPartition partition;
    SweepResult sweep;
    struct Crossing {
        std::size_t rayIndex = 0;
        std::size_t poleIndex = 0;
        CMatrix empirical;
        CMatrix oracle;
        double residual = 0.0;
        double errorBar = 0.0; // combined sweep bars of the two sectors
        double oracleDetResidual = 0.0;
    };
    std::vector<Crossing> crossings;
};

CrossingReport crossing_check(const ConfluenceFamily& fam,
                              const std::vector<double>& epsGrid,
                              double probeRadius = 1.0);

} // namespace qb
