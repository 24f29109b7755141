"""Dense real matrix kernels used throughout the pipeline.

Everything here operates on float64 numpy arrays and is deterministic:
Householder QR with a fixed sign convention, cyclic Jacobi eigendecomposition
for symmetric matrices, the matrix exponential of skew-symmetric matrices
(scaling-and-squaring with a degree-13 Pade approximant), and the principal
logarithm on SO(n) recovered plane-by-plane from the symmetric part.
"""

from __future__ import annotations

import numpy as np

SKEW_SYM_TOL = 1e-12
ORTHO_TOL = 1e-10
DET_TOL = 1e-8
RANK_TOL = 1e-10
JACOBI_MAX_SWEEPS = 50
JACOBI_OFF_TOL = 1e-13
CLUSTER_TOL = 1e-8


class RankDeficientError(ValueError):
    """Some |R_ii| fell below tolerance; the data point is degenerate."""


class NoConvergenceError(RuntimeError):
    """Jacobi sweep cap hit without reaching the off-diagonal tolerance."""


class NotOrthogonalError(ValueError):
    """Input does not satisfy Q^T Q = I within tolerance."""


class NegativeDeterminantError(ValueError):
    """Input is orthogonal but orientation-reversing (det < 0)."""


def frobenius(a):
    return float(np.sqrt(np.sum(np.asarray(a) ** 2)))


def require_finite(a, name="matrix"):
    a = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def as_skew(a):
    """Project onto skew part: A <- (A - A^T)/2. Enforced on construction."""
    a = require_finite(a, "skew matrix")
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"skew matrix must be square, got {a.shape}")
    return (a - a.T) / 2.0


def check_special_orthogonal(q, ortho_tol=ORTHO_TOL, det_tol=DET_TOL):
    """Validate Q^T Q = I (Frobenius) and det Q = +1; returns Q as float64."""
    q = require_finite(q, "orthogonal matrix")
    if q.ndim != 2 or q.shape[0] != q.shape[1]:
        raise ValueError(f"expected a square matrix, got {q.shape}")
    n = q.shape[0]
    drift = frobenius(q.T @ q - np.eye(n))
    if drift > ortho_tol:
        raise NotOrthogonalError(f"||Q^T Q - I||_F = {drift:.3e} exceeds {ortho_tol:.1e}")
    det = float(np.linalg.det(q))
    if det < 0.0:
        raise NegativeDeterminantError(f"det(Q) = {det:.6f} < 0")
    if abs(det - 1.0) > det_tol:
        raise NotOrthogonalError(f"det(Q) = {det:.10f} is not 1 within {det_tol:.1e}")
    return q


def qr_decompose(x, rank_tol=RANK_TOL):
    """Householder QR of an n x k matrix (k <= n) with R_ii >= 0.

    Returns (Q, R) with Q n x n orthogonal and R n x k upper triangular.
    The sign fix (negating matched columns of Q and rows of R) makes the
    first k columns of Q deterministic for full-rank input.

    Raises RankDeficientError when some |R_ii| <= rank_tol * ||X||_F.
    """
    x = require_finite(x, "QR input")
    if x.ndim != 2:
        raise ValueError(f"QR input must be 2-d, got shape {x.shape}")
    n, k = x.shape
    if k > n:
        raise ValueError(f"QR input needs k <= n, got {n} x {k}")

    r = x.astype(float).copy()
    q = np.eye(n)
    for j in range(min(k, n - 1)):
        col = r[j:, j]
        nrm = float(np.sqrt(col @ col))
        if nrm == 0.0:
            continue  # rank check below will reject
        alpha = -nrm if col[0] >= 0.0 else nrm
        v = col.copy()
        v[0] -= alpha
        vsq = float(v @ v)
        if vsq == 0.0:
            continue
        w = (2.0 / vsq) * (v @ r[j:, j:])
        r[j:, j:] -= np.outer(v, w)
        u = (2.0 / vsq) * (q[:, j:] @ v)
        q[:, j:] -= np.outer(u, v)
        r[j + 1:, j] = 0.0

    for i in range(k):
        if r[i, i] < 0.0:
            r[i, :] = -r[i, :]
            q[:, i] = -q[:, i]

    xnorm = frobenius(x)
    small = np.abs(np.diag(r)[:k]) <= rank_tol * xnorm
    if np.any(small):
        bad = int(np.nonzero(small)[0][0])
        raise RankDeficientError(
            f"column {bad}: |R_ii| = {abs(r[bad, bad]):.3e} <= {rank_tol:.1e} * ||X||_F"
        )
    return q, r


def _offdiag_norm(a):
    d = np.diag(np.diag(a))
    return frobenius(a - d)


def symmetric_eigen(s, max_sweeps=JACOBI_MAX_SWEEPS):
    """Cyclic Jacobi eigendecomposition of a symmetric matrix.

    Returns (eigvals ascending, eigvecs orthogonal, columns matching).
    Sweeps run until the off-diagonal Frobenius norm drops below
    1e-13 * ||S||_F; hitting the sweep cap raises NoConvergenceError.
    """
    s = require_finite(s, "symmetric matrix")
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError(f"expected square matrix, got {s.shape}")
    n = s.shape[0]
    snorm = frobenius(s)
    if snorm > 0.0 and frobenius(s - s.T) > 1e-10 * snorm:
        raise ValueError("input is not symmetric within 1e-10 relative Frobenius")

    a = (s + s.T) / 2.0
    v = np.eye(n)
    if n == 1 or snorm == 0.0:
        return np.diag(a).copy(), v

    stop = JACOBI_OFF_TOL * snorm
    skip = stop / (2.0 * n * n)
    converged = False
    for _ in range(max_sweeps):
        if _offdiag_norm(a) < stop:
            converged = True
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= skip:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                sn = t * c
                g = np.array([[c, sn], [-sn, c]])
                a[[p, q], :] = g.T @ a[[p, q], :]
                a[:, [p, q]] = a[:, [p, q]] @ g
                a[p, q] = a[q, p] = 0.0
                v[:, [p, q]] = v[:, [p, q]] @ g
    if not converged and _offdiag_norm(a) >= stop:
        raise NoConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps")

    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


# Pade-13 coefficients and the double-precision scaling threshold theta_13.
_PADE13_B = (
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0, 129060195264000.0, 10559470521600.0,
    670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
    960960.0, 16380.0, 182.0, 1.0,
)
_PADE13_THETA = 5.371920351148152


def _polar_orthogonal_factor(q):
    # Newton iteration X <- (X + X^{-T})/2; quadratic near the orthogonal group.
    x = q
    for _ in range(50):
        xn = 0.5 * (x + np.linalg.inv(x).T)
        if frobenius(xn - x) <= 1e-15 * x.shape[0]:
            return xn
        x = xn
    return x


def skew_exp(a):
    """Matrix exponential of a skew-symmetric matrix; lands in SO(n).

    Scaling-and-squaring with the degree-13 Pade approximant. The result is
    re-orthonormalized by polar projection if the orthogonality drift exceeds
    1e-12 Frobenius.
    """
    a = as_skew(a)
    n = a.shape[0]
    ident = np.eye(n)

    norm1 = float(np.abs(a).sum(axis=0).max()) if n else 0.0
    squarings = 0
    if norm1 > _PADE13_THETA:
        squarings = int(np.ceil(np.log2(norm1 / _PADE13_THETA)))
    x = a / (2.0 ** squarings)

    b = _PADE13_B
    x2 = x @ x
    x4 = x2 @ x2
    x6 = x4 @ x2
    u = x @ (x6 @ (b[13] * x6 + b[11] * x4 + b[9] * x2)
             + b[7] * x6 + b[5] * x4 + b[3] * x2 + b[1] * ident)
    v = (x6 @ (b[12] * x6 + b[10] * x4 + b[8] * x2)
         + b[6] * x6 + b[4] * x4 + b[2] * x2 + b[0] * ident)
    q = np.linalg.solve(v - u, v + u)
    for _ in range(squarings):
        q = q @ q

    if frobenius(q.T @ q - ident) > 1e-12:
        q = _polar_orthogonal_factor(q)
    return q


def _clusters(values, tol):
    """Chain-cluster a sorted 1-d array; yields (lo, hi) index slices."""
    lo = 0
    for i in range(1, len(values)):
        if values[i] - values[i - 1] > tol:
            yield lo, i
            lo = i
    yield lo, len(values)


def so_log(q, cluster_tol=CLUSTER_TOL):
    """Principal logarithm of Q in SO(n); returns skew A with exp(A) = Q.

    Eigendecomposes the symmetric part (Q + Q^T)/2, groups eigenvalues into
    clusters (tolerance 1e-8), and recovers each invariant rotation plane from
    Q restricted to the cluster: within a cluster the skew part of Q equals
    sin(theta) times a complex structure, so the angle comes from
    atan2(sin, cos), which stays accurate near theta = 0 and theta = pi.
    Planes with eigenvalue -1 (theta = pi, where Q restricts to -I and no
    orientation is determined) are paired in ascending eigenvector index
    order. All eigenvalues of the result lie in i*(-pi, pi].
    """
    q = check_special_orthogonal(q)
    n = q.shape[0]
    sym = (q + q.T) / 2.0
    skew = (q - q.T) / 2.0
    w, vec = symmetric_eigen(sym)

    out = np.zeros((n, n))
    for lo, hi in _clusters(w, cluster_tol):
        lam = float(np.mean(w[lo:hi]))
        basis = vec[:, lo:hi]
        d = hi - lo
        if d == 1:
            # Isolated eigenvalue: must be a +1 fixed direction (interior
            # eigenvalues of the symmetric part come in pairs, -1 has even
            # multiplicity for det +1).
            if lam < 0.0:
                raise NotOrthogonalError("isolated -1 eigenvalue; inconsistent input")
            continue
        kc = basis.T @ skew @ basis
        kc = (kc - kc.T) / 2.0
        m = -(kc @ kc)
        s2, u = symmetric_eigen((m + m.T) / 2.0)
        for slo, shi in _clusters(s2, 1e-12):
            sub = basis @ u[:, slo:shi]
            sval = float(np.sqrt(max(np.mean(s2[slo:shi]), 0.0)))
            dsub = shi - slo
            if sval < 1e-9:
                if lam >= 0.0:
                    continue  # identity block
                if dsub % 2 != 0:
                    raise NotOrthogonalError(
                        "odd-dimensional theta=pi block; inconsistent input"
                    )
                for j in range(0, dsub, 2):
                    ea = sub[:, j]
                    eb = sub[:, j + 1]
                    out += np.pi * (np.outer(eb, ea) - np.outer(ea, eb))
            else:
                ksub = u[:, slo:shi].T @ kc @ u[:, slo:shi]
                theta = float(np.arctan2(sval, lam))
                out += sub @ ((theta / sval) * ksub) @ sub.T
    return (out - out.T) / 2.0
