#include "qbirkhoff/jordan.hpp"
#include "qbirkhoff/error.hpp"
#include "qbirkhoff/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace qb {

namespace {

// Characteristic polynomial (monic, ascending coefficients) by
// Faddeev-LeVerrier; exact rational arithmetic is unnecessary at nu <= 4.
CPolynomial charPoly(const CMatrix& B) {
    const std::size_t n = B.rows();
    std::vector<cplx> c(n + 1, cplx(0.0));
    c[n] = 1.0;
    CMatrix Mk(n, n); // M_0 = 0
    for (std::size_t k = 1; k <= n; ++k) {
        // M_k = B*M_{k-1} + c_{n-k+1} I ; c_{n-k} = -tr(B*M_k)/k
        Mk = B * Mk;
        const cplx prev = c[n - k + 1];
        for (std::size_t i = 0; i < n; ++i) Mk(i, i) += prev;
        c[n - k] = -(B * Mk).trace() / double(k);
    }
    return CPolynomial(std::move(c));
}

// Orthonormal complement residual: v minus its projection onto span(Q).
std::vector<cplx> projectOut(const std::vector<std::vector<cplx>>& Q,
                             std::vector<cplx> v) {
    for (const auto& q : Q) {
        cplx dot = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) dot += std::conj(q[i]) * v[i];
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= dot * q[i];
    }
    return v;
}

double vecNorm(const std::vector<cplx>& v) {
    double s = 0.0;
    for (const auto& x : v) s += std::norm(x);
    return std::sqrt(s);
}

void pushOrthonormal(std::vector<std::vector<cplx>>& Q, std::vector<cplx> v) {
    v = projectOut(Q, std::move(v));
    v = projectOut(Q, std::move(v)); // second pass for stability
    const double n = vecNorm(v);
    if (n > 0.0) {
        for (auto& x : v) x /= n;
        Q.push_back(std::move(v));
    }
}

// Nullspace basis of M with relative rank threshold, by Gaussian elimination
// with complete pivoting.
std::vector<std::vector<cplx>> nullspace(CMatrix M, double scale, double rankTol) {
    const std::size_t n = M.rows();
    std::vector<std::size_t> colPerm(n);
    std::iota(colPerm.begin(), colPerm.end(), 0);
    const double cut = rankTol * std::max(scale, 1e-300);
    std::size_t rank = 0;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t pi = k, pj = k;
        double best = 0.0;
        for (std::size_t i = k; i < n; ++i)
            for (std::size_t j = k; j < n; ++j)
                if (std::abs(M(i, j)) > best) { best = std::abs(M(i, j)); pi = i; pj = j; }
        if (best <= cut) break;
        if (pi != k)
            for (std::size_t j = 0; j < n; ++j) std::swap(M(k, j), M(pi, j));
        if (pj != k) {
            for (std::size_t i = 0; i < n; ++i) std::swap(M(i, k), M(i, pj));
            std::swap(colPerm[k], colPerm[pj]);
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            const cplx f = M(i, k) / M(k, k);
            for (std::size_t j = k; j < n; ++j) M(i, j) -= f * M(k, j);
        }
        ++rank;
    }
    std::vector<std::vector<cplx>> basis;
    for (std::size_t f = rank; f < n; ++f) {
        std::vector<cplx> xp(n, cplx(0.0)); // solution in permuted coordinates
        xp[f] = 1.0;
        for (std::size_t i = rank; i-- > 0;) {
            cplx acc = -M(i, f);
            for (std::size_t j = i + 1; j < rank; ++j) acc -= M(i, j) * xp[j];
            xp[i] = acc / M(i, i);
        }
        std::vector<cplx> x(n, cplx(0.0));
        for (std::size_t j = 0; j < n; ++j) x[colPerm[j]] = xp[j];
        const double nn = vecNorm(x);
        for (auto& v : x) v /= nn;
        basis.push_back(std::move(x));
    }
    return basis;
}

std::vector<cplx> matVec(const CMatrix& M, const std::vector<cplx>& v) {
    std::vector<cplx> out(M.rows(), cplx(0.0));
    for (std::size_t i = 0; i < M.rows(); ++i)
        for (std::size_t j = 0; j < M.cols(); ++j) out[i] += M(i, j) * v[j];
    return out;
}

} // namespace

std::vector<cplx> eigenvalues(const CMatrix& B) {
    if (!B.isSquare())
        fail(ErrorCode::SchemaError, "eigenvalues of non-square matrix");
    if (B.rows() == 1) return {B(0, 0)};
    return charPoly(B).roots();
}

JordanData eigen_jordan(const CMatrix& B, double clusterTol) {
    if (!B.isSquare())
        fail(ErrorCode::SchemaError, "eigen_jordan of non-square matrix");
    const std::size_t n = B.rows();
    if (std::abs(B.det()) <= clusterTol)
        fail(ErrorCode::SingularInput, "eigen_jordan requires an invertible matrix");

    std::vector<cplx> lam = eigenvalues(B);
    double lscale = 1.0;
    for (cplx l : lam) lscale = std::max(lscale, std::abs(l));
    const double mergeCut = clusterTol * lscale;

    // cluster by union-find
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<std::size_t(std::size_t)> find = [&](std::size_t i) {
        while (parent[i] != i) { parent[i] = parent[parent[i]]; i = parent[i]; }
        return i;
    };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(lam[i] - lam[j]) <= mergeCut) parent[find(i)] = find(j);

    struct Cluster { cplx mean; std::size_t mult; };
    std::vector<Cluster> clusters;
    {
        std::vector<std::size_t> root(n);
        for (std::size_t i = 0; i < n; ++i) root[i] = find(i);
        std::vector<bool> done(n, false);
        for (std::size_t i = 0; i < n; ++i) {
            if (done[root[i]]) continue;
            done[root[i]] = true;
            cplx sum = 0.0;
            std::size_t m = 0;
            for (std::size_t j = 0; j < n; ++j)
                if (root[j] == root[i]) { sum += lam[j]; ++m; }
            clusters.push_back({sum / double(m), m});
        }
    }
    std::sort(clusters.begin(), clusters.end(), [](const Cluster& a, const Cluster& b) {
        if (std::abs(a.mean) != std::abs(b.mean)) return std::abs(a.mean) > std::abs(b.mean);
        return std::arg(a.mean) < std::arg(b.mean);
    });

    JordanData out;
    out.P = CMatrix(n, n);
    out.U = CMatrix::identity(n);
    const double bscale = std::max(B.maxAbs(), 1e-300);
    const double rankTol = 1e-10;
    std::size_t col = 0;

    for (const auto& cl : clusters) {
        CMatrix N = B;
        for (std::size_t i = 0; i < n; ++i) N(i, i) -= cl.mean;

        if (cl.mult == 1) {
            auto ker = nullspace(N, bscale, rankTol);
            if (ker.empty())
                fail(ErrorCode::IllConditioned,
                     "eigen_jordan: no eigenvector at an isolated eigenvalue");
            for (std::size_t i = 0; i < n; ++i) out.P(i, col) = ker[0][i];
            out.d.push_back(cl.mean);
            out.blockEig.push_back(cl.mean);
            out.blockSize.push_back(1);
            ++col;
            continue;
        }

        // kernel filtration K_j = ker(N^j) until it reaches the multiplicity
        std::vector<std::vector<std::vector<cplx>>> K; // K[j-1] = basis of ker N^j
        CMatrix Npow = N;
        std::size_t s = 0;
        for (std::size_t j = 1; j <= cl.mult + 1; ++j) {
            auto ker = nullspace(Npow, bscale, rankTol);
            K.push_back(ker);
            if (ker.size() >= cl.mult) { s = j; break; }
            if (j == cl.mult + 1) break;
            Npow = Npow * N;
        }
        if (s == 0)
            fail(ErrorCode::IllConditioned,
                 "eigen_jordan: eigenvalue cluster cannot be resolved into Jordan "
                 "chains (near-defective input)");

        // choose chain tops from the top of the filtration downward
        struct Chain { std::vector<std::vector<cplx>> vecs; }; // vecs[0]=top
        std::vector<Chain> chains;
        for (std::size_t j = s; j >= 1; --j) {
            std::vector<std::vector<cplx>> Q; // span to be independent of
            if (j >= 2)
                for (const auto& v : K[j - 2]) pushOrthonormal(Q, v);
            for (const auto& ch : chains) {
                // vector of each longer chain at height j
                const std::size_t len = ch.vecs.size();
                if (len >= j) pushOrthonormal(Q, ch.vecs[len - j]);
            }
            for (const auto& cand : K[j - 1]) {
                auto res = projectOut(Q, cand);
                if (vecNorm(res) > 1e-6) {
                    // top found; generate the chain downward: vecs[k] = N^k v
                    Chain ch;
                    std::vector<cplx> v = cand;
                    for (std::size_t kq = 0; kq < j; ++kq) {
                        ch.vecs.push_back(v);
                        if (kq + 1 < j) v = matVec(N, v);
                    }
                    chains.push_back(std::move(ch));
                    pushOrthonormal(Q, cand);
                }
            }
            if (j == 1) break;
        }
        std::size_t total = 0;
        for (const auto& ch : chains) total += ch.vecs.size();
        if (total != cl.mult)
            fail(ErrorCode::IllConditioned,
                 "eigen_jordan: Jordan chain construction failed for a repeated "
                 "eigenvalue cluster");

        for (const auto& ch : chains) {
            const std::size_t L = ch.vecs.size();
            // columns: eigenvector first, i.e. N^{L-1}v, ..., Nv, v
            for (std::size_t k = 0; k < L; ++k) {
                const auto& v = ch.vecs[L - 1 - k]; // vecs[0] = top v
                for (std::size_t i = 0; i < n; ++i) out.P(i, col + k) = v[i];
            }
            for (std::size_t k = 0; k + 1 < L; ++k)
                out.U(col + k, col + k + 1) = 1.0 / cl.mean;
            for (std::size_t k = 0; k < L; ++k) out.d.push_back(cl.mean);
            out.blockEig.push_back(cl.mean);
            out.blockSize.push_back(L);
            if (L > 1) out.unipotentTrivial = false;
            col += L;
        }
    }

    // reconstruction gate: near-defective-but-distinct inputs land here
    const CMatrix recon =
        out.P * CMatrix::diagonal(out.d) * out.U * out.P.inverse();
    if (relDiff(recon, B) > 1e-10)
        fail(ErrorCode::IllConditioned,
             "eigen_jordan: reconstruction residual exceeds 1e-10 (eigenvalues "
             "too close to separate but not defective)");
    return out;
}

namespace {

CMatrix kroneckerSolve(const CMatrix& K, const CMatrix& C) {
    const std::size_t n = C.rows();
    CMatrix rhs(n * n, 1);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) rhs(i * n + j, 0) = C(i, j);
    CMatrix x = K.solve(rhs);
    CMatrix X(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) X(i, j) = x(i * n + j, 0);
    return X;
}

} // namespace

CMatrix sylvester_shifted(const CMatrix& M, const std::vector<cplx>& eigM,
                          cplx c, const CMatrix& C, double resTol) {
    const std::size_t n = M.rows();
    for (cplx mi : eigM)
        for (cplx mj : eigM) {
            const double gap = std::abs(c * mi - mj);
            const double scale = std::max({1.0, std::abs(c * mi), std::abs(mj)});
            if (gap <= resTol * scale)
                fail(ErrorCode::ResonantSpectrum,
                     "shifted Sylvester operator is resonant: c*mu_i == mu_j");
        }
    // rows of X stacked: row index (i,j); X*M couples within row i, M*X
    // couples within column j
    CMatrix K(n * n, n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t k = 0; k < n; ++k) {
                K(i * n + j, i * n + k) += c * M(k, j);
                K(i * n + j, k * n + j) -= M(i, k);
            }
        }
    CMatrix X = kroneckerSolve(K, C);
    // one step of iterative refinement
    CMatrix resid = C - (c * (X * M) - M * X);
    if (resid.maxAbs() > 1e-15 * std::max(1.0, C.maxAbs()))
        X += kroneckerSolve(K, resid);
    return X;
}

CMatrix sylvester_shifted(const CMatrix& M, cplx c, const CMatrix& C, double resTol) {
    return sylvester_shifted(M, eigenvalues(M), c, C, resTol);
}

CMatrix sylvester_frobenius(const CMatrix& A, const std::vector<cplx>& eigA,
                            double k, const CMatrix& C, double resTol) {
    const std::size_t n = A.rows();
    for (cplx mi : eigA)
        for (cplx mj : eigA) {
            const double gap = std::abs(k + mj - mi);
            const double scale = std::max({1.0, std::abs(mi), std::abs(mj), std::abs(k)});
            if (gap <= resTol * scale)
                fail(ErrorCode::ResonantSpectrum,
                     "Frobenius recursion operator is resonant: k + mu_j == mu_i");
        }
    CMatrix K(n * n, n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            K(i * n + j, i * n + j) += k;
            for (std::size_t kk = 0; kk < n; ++kk) {
                K(i * n + j, i * n + kk) += A(kk, j); // X*A
                K(i * n + j, kk * n + j) -= A(i, kk); // A*X
            }
        }
    CMatrix X = kroneckerSolve(K, C);
    CMatrix resid = C - (k * X + X * A - A * X);
    if (resid.maxAbs() > 1e-15 * std::max(1.0, C.maxAbs()))
        X += kroneckerSolve(K, resid);
    return X;
}

CMatrix unipotent_log(const CMatrix& U) {
    if (!U.isSquare())
        fail(ErrorCode::SchemaError, "unipotent_log of non-square matrix");
    const std::size_t n = U.rows();
    CMatrix N = U - CMatrix::identity(n);
    // verify N^n == 0
    CMatrix Npow = CMatrix::identity(n);
    for (std::size_t k = 0; k < n; ++k) Npow = Npow * N;
    if (Npow.maxAbs() > 1e-12 * std::max(1.0, U.maxAbs()))
        fail(ErrorCode::NotUnipotent, "matrix is not unipotent: (U-I)^n != 0");
    CMatrix acc(n, n);
    CMatrix term = CMatrix::identity(n);
    for (std::size_t k = 1; k < n; ++k) {
        term = term * N;
        const double sign = (k % 2 == 1) ? 1.0 : -1.0;
        acc += (sign / double(k)) * term;
    }
    return acc;
}

CMatrix matrix_exp(const CMatrix& A) {
    const std::size_t n = A.rows();
    const double norm = A.frobeniusNorm();
    int s = 0;
    if (norm > 0.5) s = int(std::ceil(std::log2(norm / 0.5)));
    const double scale = std::ldexp(1.0, -s);
    CMatrix X = A * cplx(scale, 0.0);
    CMatrix acc = CMatrix::identity(n);
    CMatrix term = CMatrix::identity(n);
    for (int k = 1; k <= 40; ++k) {
        term = term * X;
        term *= cplx(1.0 / double(k), 0.0);
        acc += term;
        if (term.maxAbs() < 1e-18 * std::max(1.0, acc.maxAbs())) break;
    }
    for (int k = 0; k < s; ++k) acc = acc * acc;
    return acc;
}

} // namespace qb
