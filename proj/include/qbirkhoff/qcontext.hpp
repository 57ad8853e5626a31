#pragma once

#include "qbirkhoff/complexmat.hpp"

namespace qb {

// Multiplicative dilation parameter q = q0^eps, |q| > 1, together with the
// fixed branch data everything downstream shares. logq is eps * Log(q0)
// (principal branch), so exp(logq) == q and integer powers q^k computed as
// exp(k*logq) are branch-independent.
struct QContext {
    cplx q0;
    double eps = 1.0;
    cplx q;
    cplx p; // 1/q
    cplx logq;
    double absLogq = 0.0;

    QContext() = default;
    QContext(cplx q0_, double eps_ = 1.0);

    // q^k for integer k, via exp(k*logq)
    cplx qPow(long k) const;

    bool realRay() const { return q0.imag() == 0.0 && q0.real() > 0.0; }
};

// |q| must stay >= 1 + this margin or theta truncation degrades.
inline constexpr double kQMarginMin = 1e-3;

} // namespace qb
