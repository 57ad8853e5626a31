#include "qbirkhoff/polynomial.hpp"
#include "qbirkhoff/error.hpp"

#include <algorithm>
#include <cmath>

namespace qb {

namespace {
constexpr double kTrimRel = 1e-13;
}

CPolynomial::CPolynomial(std::vector<cplx> coeffs) : c_(std::move(coeffs)) { trim(); }

CPolynomial CPolynomial::constant(cplx c) { return CPolynomial({c}); }

CPolynomial CPolynomial::monomial(cplx c, std::size_t power) {
    std::vector<cplx> v(power + 1, cplx(0.0));
    v[power] = c;
    return CPolynomial(std::move(v));
}

CPolynomial CPolynomial::fromRoots(const std::vector<cplx>& roots, cplx lead) {
    CPolynomial p = constant(lead);
    for (cplx r : roots) p *= CPolynomial({-r, 1.0});
    return p;
}

void CPolynomial::trim() {
    double scale = 0.0;
    for (const auto& v : c_) scale = std::max(scale, std::abs(v));
    const double cut = scale * kTrimRel;
    while (!c_.empty() && std::abs(c_.back()) <= cut) c_.pop_back();
}

int CPolynomial::valuation() const {
    if (c_.empty()) return 0;
    const double cut = maxCoeffAbs() * kTrimRel;
    for (std::size_t k = 0; k < c_.size(); ++k)
        if (std::abs(c_[k]) > cut) return static_cast<int>(k);
    return 0;
}

cplx CPolynomial::eval(cplx z) const {
    cplx acc = 0.0;
    for (std::size_t k = c_.size(); k-- > 0;) acc = acc * z + c_[k];
    return acc;
}

CPolynomial CPolynomial::derivative() const {
    if (c_.size() <= 1) return CPolynomial();
    std::vector<cplx> d(c_.size() - 1);
    for (std::size_t k = 1; k < c_.size(); ++k) d[k - 1] = double(k) * c_[k];
    return CPolynomial(std::move(d));
}

CPolynomial CPolynomial::scaleArgument(cplx s) const {
    std::vector<cplx> v = c_;
    cplx f = 1.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
        v[k] *= f;
        f *= s;
    }
    return CPolynomial(std::move(v));
}

double CPolynomial::maxCoeffAbs() const {
    double s = 0.0;
    for (const auto& v : c_) s = std::max(s, std::abs(v));
    return s;
}

CPolynomial& CPolynomial::operator+=(const CPolynomial& rhs) {
    if (rhs.c_.size() > c_.size()) c_.resize(rhs.c_.size(), cplx(0.0));
    for (std::size_t k = 0; k < rhs.c_.size(); ++k) c_[k] += rhs.c_[k];
    trim();
    return *this;
}

CPolynomial& CPolynomial::operator-=(const CPolynomial& rhs) {
    if (rhs.c_.size() > c_.size()) c_.resize(rhs.c_.size(), cplx(0.0));
    for (std::size_t k = 0; k < rhs.c_.size(); ++k) c_[k] -= rhs.c_[k];
    trim();
    return *this;
}

CPolynomial& CPolynomial::operator*=(const CPolynomial& rhs) {
    if (c_.empty() || rhs.c_.empty()) {
        c_.clear();
        return *this;
    }
    std::vector<cplx> out(c_.size() + rhs.c_.size() - 1, cplx(0.0));
    for (std::size_t i = 0; i < c_.size(); ++i)
        for (std::size_t j = 0; j < rhs.c_.size(); ++j)
            out[i + j] += c_[i] * rhs.c_[j];
    c_ = std::move(out);
    trim();
    return *this;
}

CPolynomial& CPolynomial::operator*=(cplx s) {
    for (auto& v : c_) v *= s;
    trim();
    return *this;
}

std::vector<cplx> CPolynomial::roots() const {
    const int d = degree();
    if (d <= 0) return {};
    if (d == 1) return {-c_[0] / c_[1]};
    if (d == 2) {
        const cplx a = c_[2], b = c_[1], c0 = c_[0];
        const cplx disc = std::sqrt(b * b - 4.0 * a * c0);
        // pick the sign that avoids cancellation in -b -/+ disc
        const cplx s = (std::real(std::conj(b) * disc) >= 0.0) ? disc : -disc;
        const cplx qv = -0.5 * (b + s);
        std::vector<cplx> r;
        if (std::abs(qv) > 0.0) {
            r = {qv / a, c0 / qv};
        } else {
            r = {cplx(0.0), -b / a};
        }
        return r;
    }

    // Durand-Kerner on the monic normalization, deterministic start.
    std::vector<cplx> p(c_.begin(), c_.end());
    const cplx lead = p.back();
    for (auto& v : p) v /= lead;
    const int n = d;
    double radius = 0.0;
    for (int k = 0; k < n; ++k)
        radius = std::max(radius, std::pow(std::abs(p[k]), 1.0 / double(n - k)));
    radius = std::max(radius, 0.5);
    std::vector<cplx> x(n);
    const cplx seed(0.4, 0.9);
    cplx g = 1.0;
    for (int k = 0; k < n; ++k) {
        g *= seed;
        x[k] = radius * g;
    }
    auto evalMonic = [&](cplx z) {
        cplx acc = 1.0;
        for (int k = n - 1; k >= 0; --k) acc = acc * z + p[k];
        return acc;
    };
    for (int iter = 0; iter < 600; ++iter) {
        double move = 0.0;
        for (int k = 0; k < n; ++k) {
            cplx denom = 1.0;
            for (int j = 0; j < n; ++j)
                if (j != k) denom *= (x[k] - x[j]);
            if (std::abs(denom) == 0.0) denom = 1e-30;
            const cplx delta = evalMonic(x[k]) / denom;
            x[k] -= delta;
            move = std::max(move, std::abs(delta));
        }
        if (move < 1e-14 * std::max(1.0, radius)) break;
    }
    // Newton polish (helps simple roots; harmless near multiple roots)
    const CPolynomial dp = derivative();
    for (auto& r : x) {
        for (int it = 0; it < 8; ++it) {
            const cplx f = eval(r);
            const cplx fp = dp.eval(r);
            if (std::abs(fp) < 1e-280) break;
            const cplx step = f / fp;
            r -= step;
            if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(r))) break;
        }
    }
    return x;
}

CPolynomial operator+(CPolynomial lhs, const CPolynomial& rhs) { lhs += rhs; return lhs; }
CPolynomial operator-(CPolynomial lhs, const CPolynomial& rhs) { lhs -= rhs; return lhs; }
CPolynomial operator*(CPolynomial lhs, const CPolynomial& rhs) { lhs *= rhs; return lhs; }
CPolynomial operator*(cplx s, CPolynomial p) { p *= s; return p; }

CRationalFunction::CRationalFunction(CPolynomial num, CPolynomial den)
    : num_(std::move(num)), den_(std::move(den)) {
    if (den_.isZero())
        fail(ErrorCode::SchemaError, "rational function with zero denominator");
}

CRationalFunction CRationalFunction::constant(cplx c) {
    return CRationalFunction(CPolynomial::constant(c), CPolynomial::constant(1.0));
}

CRationalFunction CRationalFunction::fromPoly(CPolynomial p) {
    return CRationalFunction(std::move(p), CPolynomial::constant(1.0));
}

cplx CRationalFunction::eval(cplx z) const { return num_.eval(z) / den_.eval(z); }

int CRationalFunction::valuationAt0() const {
    if (num_.isZero()) return 0;
    return num_.valuation() - den_.valuation();
}

int CRationalFunction::degreeAtInf() const {
    if (num_.isZero()) return 0;
    return num_.degree() - den_.degree();
}

namespace {

// coefficientwise division of num by den (den[0] != 0), `terms` outputs
std::vector<cplx> seriesDivide(const std::vector<cplx>& num,
                               const std::vector<cplx>& den, std::size_t terms) {
    std::vector<cplx> out(terms, cplx(0.0));
    const cplx d0 = den[0];
    for (std::size_t k = 0; k < terms; ++k) {
        cplx acc = k < num.size() ? num[k] : cplx(0.0);
        for (std::size_t j = 1; j <= k && j < den.size(); ++j)
            acc -= den[j] * out[k - j];
        out[k] = acc / d0;
    }
    return out;
}

// p / (z - r) with the remainder discarded (synthetic division)
CPolynomial deflateAt(const CPolynomial& p, cplx r) {
    const std::vector<cplx>& c = p.coeffs();
    if (c.size() <= 1) return CPolynomial();
    std::vector<cplx> out(c.size() - 1);
    cplx acc = 0.0;
    for (std::size_t k = c.size(); k-- > 1;) {
        acc = c[k] + acc * r;
        out[k - 1] = acc;
    }
    return CPolynomial(std::move(out));
}

struct RootCluster {
    cplx center;
    int mult;
};

// Group root approximations that agree to 1e-3 relative (approximations of a
// multiple root scatter like eps^(1/m), worse when the iteration stalls
// early, so the grouping must be generous; the refinement below recovers the
// exact center and multiplicity).
std::vector<RootCluster> clusterRoots(const std::vector<cplx>& roots) {
    std::vector<RootCluster> out;
    std::vector<bool> used(roots.size(), false);
    for (std::size_t i = 0; i < roots.size(); ++i) {
        if (used[i]) continue;
        cplx sum = roots[i];
        int m = 1;
        used[i] = true;
        for (std::size_t j = i + 1; j < roots.size(); ++j) {
            if (used[j]) continue;
            if (std::abs(roots[j] - roots[i]) <=
                1e-3 * std::max(1.0, std::abs(roots[i]))) {
                sum += roots[j];
                ++m;
                used[j] = true;
            }
        }
        out.push_back({sum / double(m), m});
    }
    return out;
}

struct RefinedCluster {
    cplx center;
    int mult;
    bool ok;
};

// Sharpen a root cluster of p near c0 and determine its true multiplicity.
// Raw iterations stall anywhere inside the eps^(1/m) noise disk of a
// multiple root, so neither the approximations nor their count can be
// trusted; but the (m-1)-th derivative has a simple root at a
// multiplicity-m point, where Newton converges quadratically to full
// precision. Try multiplicities downward and accept the largest one whose
// Newton run converges quadratically inside the cluster guard.
RefinedCluster refineCluster(const CPolynomial& p, cplx c0, int multHint) {
    const double guard = 1e-3 * std::max(1.0, std::abs(c0));
    const int mMax = std::min(p.degree(), multHint + 3);
    for (int m = mMax; m >= 1; --m) {
        CPolynomial q = p;
        for (int i = 1; i < m; ++i) q = q.derivative();
        const CPolynomial qd = q.derivative();
        cplx c = c0;
        bool converged = false;
        for (int it = 0; it < 60; ++it) {
            const cplx f = q.eval(c);
            const cplx fd = qd.eval(c);
            if (fd == cplx(0.0)) break;
            const cplx step = f / fd;
            c -= step;
            if (std::abs(c - c0) > 4 * guard) break; // wandered off
            if (std::abs(step) <= 1e-12 * std::max(1.0, std::abs(c))) {
                converged = true;
                break;
            }
        }
        if (converged && std::abs(c - c0) <= guard) return {c, m, true};
    }
    return {c0, multHint, false};
}

// Cancel root clusters shared by numerator and denominator, min multiplicity
// each. Removable factors must be deflated before series division: a shared
// root of modulus rho inside the expansion radius would otherwise amplify
// rounding noise in the Taylor coefficients like rho^{-k}. Expects inputs
// with nonzero constant term (valuation already stripped), so no cluster
// sits at the origin. Candidate pairs are pre-matched at 1e-3 relative and
// cancelled only when the refined centers agree to 1e-6 relative.
void deflateCommonClusters(CPolynomial& num, CPolynomial& den) {
    if (num.isZero() || den.degree() < 1 || num.degree() < 1) return;
    std::vector<RootCluster> ncl = clusterRoots(num.roots());
    std::vector<RootCluster> dcl = clusterRoots(den.roots());
    CPolynomial n = num, d = den;
    bool changed = false;
    for (RootCluster& dc : dcl) {
        for (RootCluster& nc : ncl) {
            if (nc.mult == 0) continue;
            if (std::abs(nc.center - dc.center) >
                1e-3 * std::max(1.0, std::abs(dc.center)))
                continue;
            const RefinedCluster rn = refineCluster(n, nc.center, nc.mult);
            const RefinedCluster rd = refineCluster(d, dc.center, dc.mult);
            if (!rn.ok || !rd.ok) continue;
            if (std::abs(rn.center - rd.center) >
                1e-6 * std::max(1.0, std::abs(rd.center)))
                continue; // zero and pole nearby but genuinely distinct
            const int k = std::min(rn.mult, rd.mult);
            for (int s = 0; s < k; ++s) {
                n = deflateAt(n, rn.center);
                d = deflateAt(d, rd.center);
            }
            nc.mult = rn.mult - k;
            dc.mult = rd.mult - k;
            changed = true;
            break;
        }
    }
    if (changed) {
        num = n;
        den = d;
    }
}

} // namespace

LaurentData CRationalFunction::laurentAt0(std::size_t terms) const {
    LaurentData out;
    if (num_.isZero()) {
        out.coeff.assign(terms, cplx(0.0));
        return out;
    }
    const int vn = num_.valuation(), vd = den_.valuation();
    out.leadExponent = vn - vd;
    CPolynomial np(std::vector<cplx>(num_.coeffs().begin() + vn,
                                     num_.coeffs().end()));
    CPolynomial dp(std::vector<cplx>(den_.coeffs().begin() + vd,
                                     den_.coeffs().end()));
    deflateCommonClusters(np, dp);
    out.coeff = seriesDivide(np.coeffs(), dp.coeffs(), terms);
    return out;
}

LaurentData CRationalFunction::laurentAtInf(std::size_t terms) const {
    LaurentData out;
    if (num_.isZero()) {
        out.coeff.assign(terms, cplx(0.0));
        return out;
    }
    out.leadExponent = num_.degree() - den_.degree();
    // reverse coefficients: z^deg * p(1/z) has the reversed coefficient list
    CPolynomial np(std::vector<cplx>(num_.coeffs().rbegin(),
                                     num_.coeffs().rend()));
    CPolynomial dp(std::vector<cplx>(den_.coeffs().rbegin(),
                                     den_.coeffs().rend()));
    deflateCommonClusters(np, dp);
    out.coeff = seriesDivide(np.coeffs(), dp.coeffs(), terms);
    return out;
}

CRationalFunction& CRationalFunction::operator+=(const CRationalFunction& rhs) {
    num_ = num_ * rhs.den_ + rhs.num_ * den_;
    den_ *= rhs.den_;
    return *this;
}

CRationalFunction& CRationalFunction::operator*=(const CRationalFunction& rhs) {
    num_ *= rhs.num_;
    den_ *= rhs.den_;
    return *this;
}

CRationalFunction& CRationalFunction::operator*=(cplx s) {
    num_ *= s;
    return *this;
}

CRationalFunction CRationalFunction::reciprocal() const {
    if (num_.isZero())
        fail(ErrorCode::SingularInput, "reciprocal of zero rational function");
    return CRationalFunction(den_, num_);
}

CRationalFunction CRationalFunction::scaleArgument(cplx s) const {
    return CRationalFunction(num_.scaleArgument(s), den_.scaleArgument(s));
}

CRationalFunction CRationalFunction::derivative() const {
    return CRationalFunction(num_.derivative() * den_ - num_ * den_.derivative(),
                             den_ * den_);
}

std::vector<cplx> CRationalFunction::poles() const {
    std::vector<cplx> out;
    if (num_.isZero()) return out;
    for (cplx r : den_.roots()) {
        // magnitude probe on a small circle around r; a removable singularity
        // stays bounded by the neighborhood scale
        const double h = 1e-6 * std::max(1.0, std::abs(r));
        double near = 0.0, far = 0.0;
        for (int k = 0; k < 4; ++k) {
            const cplx dir = std::polar(1.0, 0.25 + 1.5707963267948966 * k);
            near = std::max(near, std::abs(eval(r + h * dir)));
            far = std::max(far, std::abs(eval(r + 1e3 * h * dir)));
        }
        if (near > 50.0 * std::max(far, 1e-280)) out.push_back(r);
    }
    return dedupPoints(std::move(out));
}

CRationalFunction operator+(CRationalFunction lhs, const CRationalFunction& rhs) {
    lhs += rhs;
    return lhs;
}
CRationalFunction operator*(CRationalFunction lhs, const CRationalFunction& rhs) {
    lhs *= rhs;
    return lhs;
}
CRationalFunction operator*(cplx s, CRationalFunction f) {
    f *= s;
    return f;
}

RationalMatrix RationalMatrix::identity(std::size_t n) {
    RationalMatrix m(n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = CRationalFunction::constant(1.0);
    return m;
}

RationalMatrix RationalMatrix::fromConstant(const CMatrix& c) {
    RationalMatrix m(c.rows());
    for (std::size_t i = 0; i < c.rows(); ++i)
        for (std::size_t j = 0; j < c.cols(); ++j)
            m(i, j) = CRationalFunction::constant(c(i, j));
    return m;
}

CMatrix RationalMatrix::eval(cplx z) const {
    CMatrix out(n_, n_);
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j) out(i, j) = (*this)(i, j).eval(z);
    return out;
}

RationalMatrix RationalMatrix::scaleArgument(cplx s) const {
    RationalMatrix out(n_);
    for (std::size_t k = 0; k < e_.size(); ++k) out.e_[k] = e_[k].scaleArgument(s);
    return out;
}

RationalMatrix RationalMatrix::operator*(const RationalMatrix& rhs) const {
    RationalMatrix out(n_);
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j) {
            CRationalFunction acc = CRationalFunction::constant(0.0);
            for (std::size_t k = 0; k < n_; ++k)
                acc += (*this)(i, k) * rhs(k, j);
            out(i, j) = acc;
        }
    return out;
}

RationalMatrix RationalMatrix::operator+(const RationalMatrix& rhs) const {
    RationalMatrix out(n_);
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j)
            out(i, j) = (*this)(i, j) + rhs(i, j);
    return out;
}

RationalMatrix RationalMatrix::scalarMul(const CRationalFunction& f) const {
    RationalMatrix out(n_);
    for (std::size_t k = 0; k < e_.size(); ++k) out.e_[k] = e_[k] * f;
    return out;
}

namespace {

// determinant of an n x n polynomial matrix by cofactor expansion along the
// first row (nu <= 4 in practice)
CPolynomial polyDet(const std::vector<CPolynomial>& m, std::size_t n) {
    if (n == 1) return m[0];
    CPolynomial acc;
    for (std::size_t j = 0; j < n; ++j) {
        std::vector<CPolynomial> minor((n - 1) * (n - 1));
        for (std::size_t r = 1; r < n; ++r) {
            std::size_t cc = 0;
            for (std::size_t c = 0; c < n; ++c) {
                if (c == j) continue;
                minor[(r - 1) * (n - 1) + cc++] = m[r * n + c];
            }
        }
        CPolynomial term = m[j] * polyDet(minor, n - 1);
        if (j % 2 == 1) term *= cplx(-1.0);
        acc += term;
    }
    return acc;
}

} // namespace

CRationalFunction RationalMatrix::det() const {
    if (n_ == 0) return CRationalFunction::constant(1.0);
    if (n_ == 1) return (*this)(0, 0);
    if (n_ == 2)
        return (*this)(0, 0) * (*this)(1, 1) +
               cplx(-1.0) * ((*this)(0, 1) * (*this)(1, 0));
    // cofactor expansion along the first row (nu <= 4 in practice)
    CRationalFunction acc = CRationalFunction::constant(0.0);
    for (std::size_t j = 0; j < n_; ++j) {
        RationalMatrix minor(n_ - 1);
        for (std::size_t r = 1; r < n_; ++r) {
            std::size_t cc = 0;
            for (std::size_t c = 0; c < n_; ++c) {
                if (c == j) continue;
                minor(r - 1, cc++) = (*this)(r, c);
            }
        }
        const cplx sign = (j % 2 == 0) ? 1.0 : -1.0;
        acc += sign * ((*this)(0, j) * minor.det());
    }
    return acc;
}

RationalMatrix RationalMatrix::inverse() const {
    // fast path: every nonzero entry over one shared denominator (bitwise
    // equal coefficient lists). Inverting P/D as D*adj(P)/det(P) keeps the
    // cancellation structure shallow enough for the Laurent-expansion
    // deflation to remove reliably; the generic cross-multiplied adjugate
    // would stack the shared factor to multiplicity ~2n.
    if (n_ >= 1) {
        const std::vector<cplx>* dref = nullptr;
        bool commonDen = true;
        for (const auto& f : e_) {
            if (f.num().isZero()) continue;
            const std::vector<cplx>& dk = f.den().coeffs();
            if (!dref)
                dref = &dk;
            else if (dk != *dref) {
                commonDen = false;
                break;
            }
        }
        if (commonDen && dref) {
            std::vector<CPolynomial> P(n_ * n_);
            for (std::size_t k = 0; k < n_ * n_; ++k)
                if (!e_[k].num().isZero()) P[k] = e_[k].num();
            const CPolynomial dp = polyDet(P, n_);
            if (dp.isZero())
                fail(ErrorCode::SingularInput,
                     "rational matrix is identically singular");
            const CPolynomial D(*dref);
            RationalMatrix out(n_);
            if (n_ == 1) {
                out(0, 0) = CRationalFunction(D, dp);
                return out;
            }
            for (std::size_t i = 0; i < n_; ++i)
                for (std::size_t j = 0; j < n_; ++j) {
                    std::vector<CPolynomial> minor((n_ - 1) * (n_ - 1));
                    std::size_t rr = 0;
                    for (std::size_t r = 0; r < n_; ++r) {
                        if (r == i) continue;
                        std::size_t cc = 0;
                        for (std::size_t c = 0; c < n_; ++c) {
                            if (c == j) continue;
                            minor[rr * (n_ - 1) + cc++] = P[r * n_ + c];
                        }
                        ++rr;
                    }
                    CPolynomial cof = polyDet(minor, n_ - 1) * D;
                    if ((i + j) % 2 == 1) cof *= cplx(-1.0);
                    out(j, i) = CRationalFunction(cof, dp);
                }
            return out;
        }
    }
    const CRationalFunction d = det();
    if (d.isZero())
        fail(ErrorCode::SingularInput, "rational matrix is identically singular");
    RationalMatrix adj(n_);
    if (n_ == 1) {
        adj(0, 0) = CRationalFunction::constant(1.0);
    } else {
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j) {
                RationalMatrix minor(n_ - 1);
                std::size_t rr = 0;
                for (std::size_t r = 0; r < n_; ++r) {
                    if (r == i) continue;
                    std::size_t cc = 0;
                    for (std::size_t c = 0; c < n_; ++c) {
                        if (c == j) continue;
                        minor(rr, cc++) = (*this)(r, c);
                    }
                    ++rr;
                }
                const cplx sign = ((i + j) % 2 == 0) ? 1.0 : -1.0;
                adj(j, i) = sign * minor.det();
            }
    }
    const CRationalFunction dinv = d.reciprocal();
    return adj.scalarMul(dinv);
}

std::vector<cplx> RationalMatrix::poles() const {
    std::vector<cplx> all;
    for (const auto& f : e_) {
        auto p = f.poles();
        all.insert(all.end(), p.begin(), p.end());
    }
    return dedupPoints(std::move(all));
}

std::vector<cplx> dedupPoints(std::vector<cplx> pts, double relTol) {
    std::vector<cplx> out;
    for (cplx p : pts) {
        bool seen = false;
        for (cplx q : out)
            if (std::abs(p - q) <= relTol * std::max(1.0, std::abs(q))) {
                seen = true;
                break;
            }
        if (!seen) out.push_back(p);
    }
    std::sort(out.begin(), out.end(), [](cplx a, cplx b) {
        if (std::abs(a) != std::abs(b)) return std::abs(a) < std::abs(b);
        return std::arg(a) < std::arg(b);
    });
    return out;
}

} // namespace qb
