#include "qbirkhoff/theta.hpp"
#include "qbirkhoff/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

namespace qb {

QContext::QContext(cplx q0_, double eps_) : q0(q0_), eps(eps_) {
    if (eps <= 0.0)
        fail(ErrorCode::SchemaError, "QContext requires eps > 0");
    if (std::abs(q0) <= 1.0)
        fail(ErrorCode::QTooCloseToOne, "QContext requires |q0| > 1");
    logq = eps * std::log(q0); // principal branch
    q = std::exp(logq);
    p = 1.0 / q;
    absLogq = std::abs(logq);
    if (std::abs(q) < 1.0 + kQMarginMin)
        fail(ErrorCode::QTooCloseToOne,
             "|q| = |q0^eps| too close to 1 (< 1 + 1e-3); theta series would "
             "need unbounded truncation");
}

cplx QContext::qPow(long k) const { return std::exp(double(k) * logq); }

// ---- ScaledComplex ---------------------------------------------------------

ScaledComplex ScaledComplex::from(cplx v) {
    ScaledComplex s{v, 0.0};
    s.normalize();
    return s;
}

void ScaledComplex::normalize() {
    const double a = std::abs(m);
    if (a > 0.0 && (a < 1e-3 || a > 1e3)) {
        const double l = std::log(a);
        logs += l;
        m *= std::exp(-l);
    }
}

cplx ScaledComplex::value() const {
    if (m == cplx(0.0)) return 0.0;
    if (logs > 690.0)
        fail(ErrorCode::Overflow, "scaled value exceeds double range");
    if (logs < -745.0) return 0.0;
    return m * std::exp(logs);
}

double ScaledComplex::logAbs() const {
    return std::log(std::abs(m)) + logs;
}

ScaledComplex& ScaledComplex::operator*=(const ScaledComplex& rhs) {
    m *= rhs.m;
    logs += rhs.logs;
    normalize();
    return *this;
}

ScaledComplex& ScaledComplex::operator*=(cplx s) {
    m *= s;
    normalize();
    return *this;
}

ScaledComplex ScaledComplex::inverse() const {
    if (m == cplx(0.0))
        fail(ErrorCode::SingularInput, "inverse of zero scaled value");
    ScaledComplex out{1.0 / m, -logs};
    out.normalize();
    return out;
}

ScaledComplex ScaledComplex::powInt(long k) const {
    if (k == 0) return ScaledComplex{1.0, 0.0};
    ScaledComplex base = (k > 0) ? *this : inverse();
    long e = std::labs(k);
    ScaledComplex acc{1.0, 0.0};
    while (e > 0) {
        if (e & 1) acc *= base;
        base *= base;
        e >>= 1;
    }
    return acc;
}

ScaledComplex operator*(ScaledComplex a, const ScaledComplex& b) { a *= b; return a; }
ScaledComplex operator/(ScaledComplex a, const ScaledComplex& b) { a *= b.inverse(); return a; }

// ---- spirals ---------------------------------------------------------------

SpiralHit spiral_locate(const QContext& ctx, cplx base, cplx z) {
    if (z == cplx(0.0) || base == cplx(0.0))
        fail(ErrorCode::ZeroArgument, "spiral location needs z, base in C*");
    const cplx L = std::log(z / base);
    const double lq2 = std::norm(ctx.logq);
    const double sStar = (L.real() * ctx.logq.real() + L.imag() * ctx.logq.imag()) / lq2;
    SpiralHit best;
    best.exponent = sStar;
    best.distance = std::numeric_limits<double>::infinity();
    const long n0 = std::lround(std::floor(sStar));
    for (long n = n0 - 2; n <= n0 + 2; ++n) {
        cplx u = L - double(n) * ctx.logq;
        const double twoPi = 6.283185307179586476925286766559;
        const double mOpt = std::round(u.imag() / twoPi);
        u -= cplx(0.0, twoPi * mOpt);
        const double d = std::abs(u) / ctx.absLogq;
        if (d < best.distance) {
            best.distance = d;
            best.nearestIndex = n;
        }
    }
    return best;
}

void SpiralSet::add(cplx base) { s_.push_back(Spiral{base}); }
void SpiralSet::add(const Spiral& s) { s_.push_back(s); }
void SpiralSet::merge(const SpiralSet& other) {
    s_.insert(s_.end(), other.s_.begin(), other.s_.end());
}

std::optional<SpiralMatch> SpiralSet::contains(const QContext& ctx, cplx z,
                                               double tol) const {
    std::optional<SpiralMatch> best;
    for (std::size_t i = 0; i < s_.size(); ++i) {
        const SpiralHit h = spiral_locate(ctx, s_[i].base, z);
        if (h.distance <= tol && h.nearestIndex >= s_[i].minExp &&
            h.nearestIndex <= s_[i].maxExp) {
            if (!best || h.distance < best->hit.distance)
                best = SpiralMatch{i, h};
        }
    }
    return best;
}

double SpiralSet::distance(const QContext& ctx, cplx z) const {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& sp : s_) {
        const SpiralHit h = spiral_locate(ctx, sp.base, z);
        if (h.nearestIndex >= sp.minExp && h.nearestIndex <= sp.maxExp)
            d = std::min(d, h.distance);
    }
    return d;
}

// ---- theta -----------------------------------------------------------------

namespace {

// Reduce z to the fundamental annulus: z = q^k w with spiral coordinate of w
// in [-1/2, 1/2). Returns k and w.
std::pair<long, cplx> reduceArgument(const QContext& ctx, cplx z) {
    const SpiralHit h = spiral_locate(ctx, cplx(1.0), z);
    const long k = std::lround(h.exponent);
    const cplx w = z * std::exp(-double(k) * ctx.logq);
    return {k, w};
}

// log-prefactor of Theta(q^k w) = q^{k(k-1)/2} w^k Theta(w), as a scaled unit
ScaledComplex reductionPrefactor(const QContext& ctx, long k, cplx w) {
    const double halfK = 0.5 * double(k) * double(k - 1);
    const cplx S = halfK * ctx.logq + double(k) * std::log(w);
    ScaledComplex pre;
    pre.m = std::exp(cplx(0.0, S.imag()));
    pre.logs = S.real();
    return pre;
}

constexpr double kPi = 3.14159265358979323846;

// The bilateral series cancels catastrophically as q -> 1 off the positive
// axis: Theta is exponentially small against its O(1) summands, so double
// precision keeps no digits. Below this |log q| cutoff we evaluate through
// the Jacobi imaginary transformation instead, whose dual series needs a
// couple of O(1) terms with no cancellation. The angle guard keeps the dual
// exponents bounded (see thetaModularCore); outside it the direct series
// still converges.
bool useModularTheta(const QContext& ctx) {
    return ctx.absLogq < 0.5 &&
           std::abs(ctx.logq.imag()) < 8.0 * ctx.logq.real();
}

// Dual sums of the transformed series at w = exp(lw), L = -log q:
//   S0 = sum_{m in Z} (-1)^m exp[(2 pi^2 m^2 + 2 pi i m lw)/L]
//   S1 = sum_{m in Z} m (-1)^m exp[...]
// With |Im lw| <= pi (principal log on the reduced annulus) and the
// useModularTheta angle guard, every term has magnitude <= 1 and the tail
// decays like exp(-2 pi^2 m(m-1)/|L|).
void thetaModularCore(const QContext& ctx, cplx lw, double tol, cplx& s0,
                      cplx* s1) {
    const cplx L = -ctx.logq;
    s0 = 1.0; // m = 0 term
    cplx d = 0.0;
    double sign = -1.0;
    bool converged = false;
    for (int m = 1; m <= 200; ++m) {
        const cplx quad = 2.0 * kPi * kPi * double(m) * double(m) / L;
        const cplx rot = cplx(0.0, 2.0 * kPi * double(m)) * lw / L;
        const cplx ep = std::exp(quad + rot);
        const cplx em = std::exp(quad - rot);
        s0 += sign * (ep + em);
        d += sign * double(m) * (ep - em);
        if (std::abs(ep) + std::abs(em) < 0.01 * tol) { converged = true; break; }
        sign = -sign;
    }
    if (!converged)
        fail(ErrorCode::NoConvergence, "theta dual series failed to converge");
    if (s1) *s1 = d;
}

// Theta on the reduced annulus via the imaginary transformation:
//   Theta(w) = sqrt(2 pi / log q) * exp(-(L/2 + lw)^2 / (2L)) * S0.
// The Gaussian exponent is the part that under- or overflows a plain
// double; it goes into the log-scale channel.
ScaledComplex thetaModularScaled(const QContext& ctx, cplx w, double tol) {
    const cplx L = -ctx.logq;
    const cplx lw = std::log(w);
    cplx s0;
    thetaModularCore(ctx, lw, tol, s0, nullptr);
    const cplx half = 0.5 * L + lw;
    const cplx S = -half * half / (2.0 * L);
    ScaledComplex out;
    out.m = std::sqrt(2.0 * kPi / ctx.logq) *
            std::exp(cplx(0.0, S.imag())) * s0;
    out.logs = S.real();
    out.normalize();
    return out;
}

// Bilateral series on the fundamental annulus. Also returns the l_q
// numerator sum_{n} n t_n when wantDeriv.
void thetaSeriesCore(const QContext& ctx, cplx w, double tol, cplx& sum,
                     cplx* derivSum) {
    sum = 1.0; // n = 0 term
    cplx dsum = 0.0;
    // positive n: t_{n+1} = t_n * w * q^{-(n+1)}
    cplx t = 1.0;
    const cplx invq = ctx.p;
    cplx qpow = 1.0;
    bool converged = false;
    for (int n = 1; n <= 4000; ++n) {
        qpow *= invq;
        t *= w * qpow;
        sum += t;
        dsum += double(n) * t;
        if (std::abs(t) * (double(n) + 2.0) < tol) { converged = true; break; }
    }
    if (!converged)
        fail(ErrorCode::NoConvergence, "theta series failed to converge (positive tail)");
    // negative n: t_{-(m+1)} = t_{-m} * q^{-m} / w
    t = 1.0;
    cplx qm = 1.0;
    converged = false;
    for (int m = 0; m <= 4000; ++m) {
        t *= qm / w;
        sum += t;
        dsum -= double(m + 1) * t;
        if (std::abs(t) * (double(m) + 3.0) < tol) { converged = true; break; }
        qm *= invq;
    }
    if (!converged)
        fail(ErrorCode::NoConvergence, "theta series failed to converge (negative tail)");
    if (derivSum) *derivSum = dsum;
}

} // namespace

ScaledComplex theta_scaled(const QContext& ctx, cplx z, double tol) {
    if (z == cplx(0.0))
        fail(ErrorCode::ZeroArgument, "theta_eval requires z in C*");
    const auto [k, w] = reduceArgument(ctx, z);
    ScaledComplex out = reductionPrefactor(ctx, k, w);
    if (useModularTheta(ctx)) {
        out *= thetaModularScaled(ctx, w, tol);
        return out;
    }
    cplx sum;
    thetaSeriesCore(ctx, w, tol, sum, nullptr);
    out *= sum;
    return out;
}

cplx theta_eval(const QContext& ctx, cplx z, double tol) {
    return theta_scaled(ctx, z, tol).value();
}

ScaledComplex qpochhammer_scaled(const QContext& ctx, cplx x, double tol) {
    ScaledComplex acc{1.0, 0.0};
    cplx factor = x;
    const double pAbs = std::abs(ctx.p);
    // the product needs ~|log tol| / log|q| factors, which grows without
    // bound as q -> 1; the QContext margin |q| >= 1 + 1e-3 caps it at ~4e4
    for (int n = 0; n <= 200000; ++n) {
        acc *= (cplx(1.0) - factor);
        factor *= ctx.p;
        if (std::abs(factor) / (1.0 - pAbs) < tol) return acc;
    }
    fail(ErrorCode::NoConvergence, "q-Pochhammer product failed to converge");
}

cplx qpochhammer(const QContext& ctx, cplx x, double tol) {
    return qpochhammer_scaled(ctx, x, tol).value();
}

ScaledComplex theta_product_scaled(const QContext& ctx, cplx z, double tol) {
    if (z == cplx(0.0))
        fail(ErrorCode::ZeroArgument, "theta product requires z in C*");
    const auto [k, w] = reduceArgument(ctx, z);
    ScaledComplex out = reductionPrefactor(ctx, k, w);
    out *= qpochhammer_scaled(ctx, ctx.p, tol);        // prod (1 - q^{-n-1})
    out *= qpochhammer_scaled(ctx, -ctx.p * w, tol);   // prod (1 + q^{-n-1} w)
    out *= qpochhammer_scaled(ctx, -1.0 / w, tol);     // prod (1 + q^{-n} / w)
    return out;
}

namespace {
std::mutex g_thetaConstMutex;
std::map<std::pair<double, double>, cplx> g_thetaConstCache;
} // namespace

cplx theta_constant(const QContext& ctx, double tol) {
    const std::pair<double, double> key{ctx.q.real(), ctx.q.imag()};
    {
        std::lock_guard<std::mutex> lock(g_thetaConstMutex);
        auto it = g_thetaConstCache.find(key);
        if (it != g_thetaConstCache.end()) return it->second;
    }
    const cplx v = qpochhammer(ctx, ctx.p, tol);
    std::lock_guard<std::mutex> lock(g_thetaConstMutex);
    g_thetaConstCache[key] = v;
    return v;
}

ScaledComplex lambda_char_scaled(const QContext& ctx, cplx a, cplx z,
                                 double tol, double poleTol) {
    if (a == cplx(0.0))
        fail(ErrorCode::ZeroArgument, "Lambda_{q,a} requires a in C*");
    const SpiralHit pole = spiral_locate(ctx, -a, z);
    if (pole.distance <= poleTol)
        fail(ErrorCode::OnPoleSpiral,
             "Lambda_{q,a} evaluated on its pole spiral -a*q^Z");
    return theta_scaled(ctx, z, tol) / theta_scaled(ctx, z / a, tol);
}

cplx lambda_char_eval(const QContext& ctx, cplx a, cplx z, double tol,
                      double poleTol) {
    return lambda_char_scaled(ctx, a, z, tol, poleTol).value();
}

cplx lq_eval(const QContext& ctx, cplx z, double tol, double poleTol) {
    if (z == cplx(0.0))
        fail(ErrorCode::ZeroArgument, "l_q requires z in C*");
    const SpiralHit zero = spiral_locate(ctx, cplx(-1.0), z);
    if (zero.distance <= poleTol)
        fail(ErrorCode::OnPoleSpiral, "l_q evaluated on the theta zero spiral -q^Z");
    const auto [k, w] = reduceArgument(ctx, z);
    if (useModularTheta(ctx)) {
        // l_q(w) = -1/2 - lw/L + (2 pi i / L) S1/S0, the log-derivative of
        // the transformed representation.
        const cplx L = -ctx.logq;
        const cplx lw = std::log(w);
        cplx s0, s1;
        thetaModularCore(ctx, lw, tol, s0, &s1);
        return double(k) +
               (-0.5 - lw / L + cplx(0.0, 2.0 * kPi) / L * s1 / s0);
    }
    cplx sum, dsum;
    thetaSeriesCore(ctx, w, tol, sum, &dsum);
    return double(k) + dsum / sum;
}

CharacterPart make_character(const CMatrix& B, double clusterTol) {
    CharacterPart ch;
    ch.jordan = eigen_jordan(B, clusterTol);
    ch.trivialU = ch.jordan.unipotentTrivial;
    ch.logU = ch.trivialU ? CMatrix(B.rows(), B.cols())
                          : unipotent_log(ch.jordan.U);
    return ch;
}

SpiralSet character_pole_spirals(const CharacterPart& ch) {
    SpiralSet s;
    std::vector<cplx> seen;
    for (cplx d : ch.jordan.blockEig) {
        bool dup = false;
        for (cplx e : seen)
            if (std::abs(d - e) <= 1e-12 * std::max(1.0, std::abs(e))) dup = true;
        if (!dup) {
            seen.push_back(d);
            // Lambda_{q,d} is trivial (== 1) for d == 1: no pole spiral
            if (std::abs(d - cplx(1.0)) > 1e-12) s.add(-d);
        }
    }
    if (!ch.trivialU) s.add(cplx(-1.0));
    return s;
}

ScaledCMatrix matrix_char_eval(const QContext& ctx, const CharacterPart& ch,
                               cplx z, double tol, double poleTol) {
    const std::size_t n = ch.jordan.P.rows();
    // scalar characters per diagonal entry (shared within blocks)
    std::vector<ScaledComplex> lam(n);
    double maxLog = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const cplx d = ch.jordan.d[i];
        if (std::abs(d - cplx(1.0)) <= 1e-14) {
            lam[i] = ScaledComplex{1.0, 0.0};
        } else {
            lam[i] = lambda_char_scaled(ctx, d, z, tol, poleTol);
        }
        if (!lam[i].isZero()) maxLog = std::max(maxLog, lam[i].logAbs());
    }
    if (!std::isfinite(maxLog)) maxLog = 0.0;
    CMatrix D(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        if (lam[i].isZero()) continue;
        const double rel = lam[i].logAbs() - maxLog;
        D(i, i) = (rel < -745.0) ? cplx(0.0)
                                 : (lam[i].m / std::abs(lam[i].m)) * std::exp(rel);
    }
    CMatrix core = D;
    if (!ch.trivialU) {
        const cplx l = lq_eval(ctx, z, tol, poleTol);
        core = D * matrix_exp(ch.logU * l);
    }
    ScaledCMatrix out;
    out.m = ch.jordan.P * core * ch.jordan.P.inverse();
    out.logScale = maxLog;
    out.normalize();
    return out;
}

} // namespace qb
