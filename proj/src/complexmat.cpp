#include "qbirkhoff/complexmat.hpp"
#include "qbirkhoff/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qb {

CMatrix::CMatrix(std::size_t rows, std::size_t cols, std::initializer_list<cplx> vals)
    : rows_(rows), cols_(cols), a_(vals) {
    if (a_.size() != rows * cols)
        fail(ErrorCode::SchemaError, "CMatrix initializer size mismatch");
}

CMatrix CMatrix::identity(std::size_t n) {
    CMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

CMatrix CMatrix::diagonal(const std::vector<cplx>& d) {
    CMatrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
}

CMatrix& CMatrix::operator+=(const CMatrix& rhs) {
    if (!sameShape(rhs)) fail(ErrorCode::SchemaError, "matrix shape mismatch in +");
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += rhs.a_[k];
    return *this;
}

CMatrix& CMatrix::operator-=(const CMatrix& rhs) {
    if (!sameShape(rhs)) fail(ErrorCode::SchemaError, "matrix shape mismatch in -");
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] -= rhs.a_[k];
    return *this;
}

CMatrix& CMatrix::operator*=(cplx s) {
    for (auto& v : a_) v *= s;
    return *this;
}

CMatrix CMatrix::transpose() const {
    CMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

double CMatrix::frobeniusNorm() const {
    double s = 0.0;
    for (const auto& v : a_) s += std::norm(v);
    return std::sqrt(s);
}

double CMatrix::maxAbs() const {
    double s = 0.0;
    for (const auto& v : a_) s = std::max(s, std::abs(v));
    return s;
}

std::vector<cplx> CMatrix::diagonalVector() const {
    std::vector<cplx> d(std::min(rows_, cols_));
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = (*this)(i, i);
    return d;
}

cplx CMatrix::trace() const {
    cplx t = 0.0;
    for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) t += (*this)(i, i);
    return t;
}

namespace {

// In-place LU factorization with partial pivoting. Returns the permutation
// sign; records row swaps in perm. Throws on pivot collapse.
int luFactor(CMatrix& m, std::vector<std::size_t>& perm, double scale) {
    const std::size_t n = m.rows();
    perm.resize(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    int sign = 1;
    const double tiny = std::max(scale, 1e-300) * 1e-14 * 1e-2;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        double best = std::abs(m(k, k));
        for (std::size_t i = k + 1; i < n; ++i) {
            double v = std::abs(m(i, k));
            if (v > best) { best = v; piv = i; }
        }
        if (best <= tiny)
            fail(ErrorCode::SingularInput, "singular matrix in LU factorization");
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(m(k, j), m(piv, j));
            std::swap(perm[k], perm[piv]);
            sign = -sign;
        }
        const cplx pivot = m(k, k);
        for (std::size_t i = k + 1; i < n; ++i) {
            const cplx f = m(i, k) / pivot;
            m(i, k) = f;
            for (std::size_t j = k + 1; j < n; ++j) m(i, j) -= f * m(k, j);
        }
    }
    return sign;
}

} // namespace

CMatrix CMatrix::solve(const CMatrix& rhs) const {
    if (!isSquare() || rows_ != rhs.rows())
        fail(ErrorCode::SchemaError, "matrix shape mismatch in solve");
    const std::size_t n = rows_, m = rhs.cols();
    CMatrix lu = *this;
    std::vector<std::size_t> perm;
    luFactor(lu, perm, maxAbs());
    CMatrix x(n, m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) x(i, j) = rhs(perm[i], j);
    // forward
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = k + 1; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) x(i, j) -= lu(i, k) * x(k, j);
    // backward
    for (std::size_t k = n; k-- > 0;) {
        for (std::size_t j = 0; j < m; ++j) x(k, j) /= lu(k, k);
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < m; ++j) x(i, j) -= lu(i, k) * x(k, j);
    }
    return x;
}

CMatrix CMatrix::inverse() const {
    return solve(identity(rows_));
}

cplx CMatrix::det() const {
    if (!isSquare()) fail(ErrorCode::SchemaError, "det of non-square matrix");
    if (rows_ == 0) return 1.0;
    if (rows_ == 1) return (*this)(0, 0);
    if (rows_ == 2)
        return (*this)(0, 0) * (*this)(1, 1) - (*this)(0, 1) * (*this)(1, 0);
    CMatrix lu = *this;
    std::vector<std::size_t> perm;
    int sign;
    try {
        sign = luFactor(lu, perm, maxAbs());
    } catch (const Error&) {
        return 0.0; // pivot collapse means det is zero at working precision
    }
    cplx d = sign;
    for (std::size_t i = 0; i < rows_; ++i) d *= lu(i, i);
    return d;
}

double CMatrix::conditionEstimate() const {
    try {
        return frobeniusNorm() * inverse().frobeniusNorm();
    } catch (const Error&) {
        return std::numeric_limits<double>::infinity();
    }
}

CMatrix operator+(CMatrix lhs, const CMatrix& rhs) { lhs += rhs; return lhs; }
CMatrix operator-(CMatrix lhs, const CMatrix& rhs) { lhs -= rhs; return lhs; }

CMatrix operator*(const CMatrix& lhs, const CMatrix& rhs) {
    if (lhs.cols() != rhs.rows())
        fail(ErrorCode::SchemaError, "matrix shape mismatch in *");
    CMatrix out(lhs.rows(), rhs.cols());
    for (std::size_t i = 0; i < lhs.rows(); ++i)
        for (std::size_t k = 0; k < lhs.cols(); ++k) {
            const cplx v = lhs(i, k);
            if (v == cplx(0.0, 0.0)) continue;
            for (std::size_t j = 0; j < rhs.cols(); ++j)
                out(i, j) += v * rhs(k, j);
        }
    return out;
}

CMatrix operator*(cplx s, CMatrix m) { m *= s; return m; }
CMatrix operator*(CMatrix m, cplx s) { m *= s; return m; }

double maxAbsDiff(const CMatrix& a, const CMatrix& b) {
    CMatrix d = a - b;
    return d.maxAbs();
}

double relDiff(const CMatrix& a, const CMatrix& b, double floor) {
    const double denom = std::max({a.frobeniusNorm(), b.frobeniusNorm(), floor});
    return (a - b).frobeniusNorm() / denom;
}

void ScaledCMatrix::normalize() {
    const double s = m.maxAbs();
    if (s > 0.0 && (s < 1e-3 || s > 1e3)) {
        const double ls = std::log(s);
        logScale += ls;
        m *= cplx(std::exp(-ls), 0.0);
    }
}

CMatrix ScaledCMatrix::value() const {
    if (logScale > 690.0 || !std::isfinite(logScale))
        fail(ErrorCode::Overflow, "scaled matrix magnitude exceeds double range");
    return m * cplx(std::exp(logScale), 0.0);
}

} // namespace qb
