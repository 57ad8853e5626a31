#pragma once

#include "qbirkhoff/confluence.hpp"
#include "qbirkhoff/isomonodromy.hpp"
#include "qbirkhoff/qpvi.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace qb {

// ---- t-parametrized coefficients ---------------------------------------------
// Description files may declare any z-coefficient as a polynomial in the
// deformation parameter t; instantiation plugs in a concrete t.

struct TPoly {
    std::vector<cplx> c; // ascending powers of t; empty = 0
    cplx eval(cplx t) const;
    bool dependsOnT() const { return c.size() > 1; }
};

struct TRational {
    std::vector<TPoly> num, den; // ascending powers of z
    bool dependsOnT() const;
    CRationalFunction at(cplx t) const;
};

struct TRationalMatrix {
    std::size_t n = 0;
    std::vector<TRational> e;

    TRational& operator()(std::size_t i, std::size_t j) { return e[i * n + j]; }
    const TRational& operator()(std::size_t i, std::size_t j) const {
        return e[i * n + j];
    }
    bool dependsOnT() const;
    RationalMatrix at(cplx t) const;
};

// ---- descriptions -------------------------------------------------------------
// Parsed form of a "qbirkhoff-system/1" JSON document. Parsing performs the
// structural validation (types, shapes, allowed keys per kind); mathematical
// hypotheses are checked later by the objects built from it.

struct SystemDescription {
    std::string path; // provenance for error messages
    std::string name;
    std::string kind = "system"; // system | deformation | jimbo-sakai | confluence
    std::string form = "sigma-q"; // sigma-q | sigma-p (system/deformation)
    cplx q0 = 2.0;
    double eps = 1.0;

    TRational R;      // defaults to 1
    TRationalMatrix A;

    bool hasT = false;
    cplx t = 0.0;

    // jimbo-sakai
    CMatrix calA0, calA1, calAt;

    // confluence
    std::string variant; // delta | fuchsian
    TRationalMatrix calA;  // delta
    CMatrix R0, R1, Rt;    // fuchsian
    std::vector<double> epsGrid;

    // common knobs (overridable from the command line)
    std::uint64_t seed = 7754321;
    int probes = 40;
    double tolerance = 1e-14;
};

// Parse a JSON document (SchemaError on any structural problem).
SystemDescription parse_description(const std::string& jsonText,
                                    const std::string& path = "");
// Read + parse a file (SchemaError when unreadable).
SystemDescription load_description(const std::string& path);

QContext context_of(const SystemDescription& d);

// kind=system, or kind=deformation evaluated at its declared t.
RationalQSystem instantiate_system(const SystemDescription& d);
// kind=deformation at an explicit t.
RationalQSystem instantiate_system_at(const SystemDescription& d, cplx t);
// Pure builder capturing the description by value (kind=deformation).
std::function<RationalQSystem(cplx)> family_builder(const SystemDescription& d);

ConfluenceFamily instantiate_confluence(const SystemDescription& d);
JimboSakaiInstance instantiate_jimbo_sakai(const SystemDescription& d,
                                           double tol = 1e-14);

} // namespace qb
