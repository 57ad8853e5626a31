#pragma once

#include "qbirkhoff/qsystem.hpp"
#include "qbirkhoff/rng.hpp"

#include <vector>

namespace qb {

// Birkhoff connection matrix P(z) = Y_inf(z)^{-1} Y_0(z). Elliptic:
// P(qz) = P(z) (both solutions satisfy the same functional equation), with
// poles confined to the registry spirals -q^Z, -d_i q^Z (character
// eigenvalues of both sides) and the singular points of the coefficient.
struct ConnectionData {
    LocalSolution y0;
    LocalSolution yInf;
    SpiralSet registry;
    double condLimit = 1e12;
};

ConnectionData make_connection(const RationalQSystem& sys, double tol = 1e-14);

CMatrix connection_eval(const RationalQSystem& sys, const ConnectionData& conn,
                        cplx z, double poleTol = 1e-8);

// max over seeded samples of ||P(qz) - P(z)|| / ||P(z)|| on a fundamental
// annulus [rmin, |q| rmin), samples kept clear of the registry.
double ellipticity_residual(const RationalQSystem& sys, const ConnectionData& conn,
                            double rmin, int samples, std::uint64_t seed,
                            double guard = 1e-3, double poleTol = 1e-8);

struct PoleScanResult {
    // grid points whose |P| blew past threshold * median, with the spiral
    // they were attributed to
    struct Hit {
        cplx z;
        double value;              // max |P_ij| there (inf when eval refused)
        bool matched = false;
        std::size_t registryIndex = 0;
        double matchDistance = 0.0; // spiral coordinates
    };
    std::vector<Hit> hits;
    SpiralSet detected; // registry spirals that caught at least one hit
    std::size_t unmatchedCount = 0;
    double maxMatchedDistance = 0.0;
    double medianValue = 0.0;
};

// Grid scan of a fundamental annulus for blow-ups of P. Detected points are
// attributed to the nearest registry spiral; matchTol defaults to twice the
// grid spacing in spiral coordinates.
PoleScanResult pole_scan(const RationalQSystem& sys, const ConnectionData& conn,
                         int radialSteps = 24, int angularSteps = 96,
                         double threshold = 1e6, double matchTol = -1.0);

} // namespace qb
