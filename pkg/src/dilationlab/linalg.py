"""Dense and tridiagonal linear algebra kernels.

``eig_dense`` carries its own Hessenberg/shifted-QR implementation, used for
small matrices and as an independent check on LAPACK; large matrices go to
LAPACK.  ``eig_sym_tridiag`` is Sturm-sequence bisection with a compiled
counting kernel.  Linear solves and the inverse iterations for singular
values sit on LAPACK's LU.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numba
import numpy as np
import scipy.linalg

from .errors import ConvergenceError, SingularMatrixError

# Above this size eig_dense(method="auto") hands off to LAPACK.
QR_AUTO_MAX = 96


@dataclass
class EigenResult:
    eigenvalues: np.ndarray
    converged: bool
    iterations: int
    residual_bound: float = float("nan")
    vectors: np.ndarray | None = field(default=None, repr=False)


def _as_square(a) -> np.ndarray:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


# --------------------------------------------------------------------------
# Dense non-Hermitian eigenvalues
# --------------------------------------------------------------------------

def hessenberg(a) -> np.ndarray:
    """Upper Hessenberg form of ``a`` by Householder reflections."""
    h = np.array(a, dtype=complex)
    n = h.shape[0]
    for k in range(n - 2):
        x = h[k + 1:, k]
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x.copy()
        v[0] += phase * alpha
        v /= np.linalg.norm(v)
        h[k + 1:, k:] -= 2.0 * np.outer(v, v.conj() @ h[k + 1:, k:])
        h[:, k + 1:] -= 2.0 * np.outer(h[:, k + 1:] @ v, v.conj())
        h[k + 2:, k] = 0.0
    return h


def _givens(a: complex, b: complex):
    """(c, s) with c real so that [[c, s], [-conj(s), c]] @ [a, b] = [r, 0]."""
    if b == 0:
        return 1.0, 0j
    if a == 0:
        return 0.0, np.conj(b) / abs(b)
    na, nb = abs(a), abs(b)
    r = np.hypot(na, nb)
    c = na / r
    s = (a / na) * np.conj(b) / r
    return c, s


def _wilkinson_shift(h: np.ndarray, hi: int) -> complex:
    a, b = h[hi - 1, hi - 1], h[hi - 1, hi]
    c, d = h[hi, hi - 1], h[hi, hi]
    tr = a + d
    det = a * d - b * c
    disc = np.sqrt(tr * tr / 4 - det)
    mu1, mu2 = tr / 2 + disc, tr / 2 - disc
    return mu1 if abs(mu1 - d) < abs(mu2 - d) else mu2


def _qr_eigenvalues(a: np.ndarray, max_sweeps: int):
    h = hessenberg(a)
    n = h.shape[0]
    eig = np.zeros(n, dtype=complex)
    eps = np.finfo(float).eps
    scale = max(np.abs(h).max(), np.finfo(float).tiny)
    hi = n - 1
    sweeps = 0
    since_deflation = 0
    while hi >= 0:
        if hi == 0:
            eig[0] = h[0, 0]
            break
        lo = hi
        while lo > 0:
            sub = abs(h[lo, lo - 1])
            diag = abs(h[lo, lo]) + abs(h[lo - 1, lo - 1])
            if sub <= eps * (diag if diag > 0 else scale):
                h[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            eig[hi] = h[hi, hi]
            hi -= 1
            since_deflation = 0
            continue
        if sweeps >= max_sweeps:
            eig[:hi + 1] = np.diag(h)[:hi + 1]
            return eig, False, sweeps
        if since_deflation and since_deflation % 10 == 0:
            # exceptional shift to break cycles
            sigma = h[hi, hi] + 0.75 * abs(h[hi, hi - 1]) * np.exp(1j * since_deflation)
        else:
            sigma = _wilkinson_shift(h, hi)
        # explicit shifted QR step on the active block h[lo:hi+1, lo:hi+1]
        m = hi - lo + 1
        blk = h[lo:hi + 1, lo:hi + 1]
        blk[np.arange(m), np.arange(m)] -= sigma
        rots = []
        for k in range(m - 1):
            c, s = _givens(blk[k, k], blk[k + 1, k])
            rows = blk[k:k + 2, k:].copy()
            blk[k, k:] = c * rows[0] + s * rows[1]
            blk[k + 1, k:] = -np.conj(s) * rows[0] + c * rows[1]
            rots.append((c, s))
        for k, (c, s) in enumerate(rots):
            top = min(k + 2, m - 1) + 1
            cols = blk[:top, k:k + 2].copy()
            blk[:top, k] = c * cols[:, 0] + np.conj(s) * cols[:, 1]
            blk[:top, k + 1] = -s * cols[:, 0] + c * cols[:, 1]
        blk[np.arange(m), np.arange(m)] += sigma
        sweeps += 1
        since_deflation += 1
    return eig, True, sweeps


def eig_dense(a, vectors: bool = False, method: str = "auto") -> EigenResult:
    """Eigenvalues of a square complex matrix.

    Parameters
    ----------
    a : array_like
        Square matrix with finite entries.
    vectors : bool
        Also compute right eigenvectors and report the largest relative
        residual ``||A v - lambda v|| / ||A||`` over the pairs.
    method : {"auto", "qr", "lapack"}
        ``"qr"`` forces the in-house Hessenberg/QR iteration (cap of 30 n
        sweeps), ``"lapack"`` calls ``zgeev``; ``"auto"`` picks QR up to
        ``QR_AUTO_MAX`` rows.

    A non-converged QR run returns ``converged=False`` with the current
    diagonal as partial results.
    """
    a = _as_square(a)
    n = a.shape[0]
    if method == "auto":
        method = "qr" if n <= QR_AUTO_MAX else "lapack"
    if method == "qr":
        vals, ok, its = _qr_eigenvalues(a, max_sweeps=30 * n)
    elif method == "lapack":
        vals, ok, its = scipy.linalg.eigvals(a), True, 0
    else:
        raise ValueError(f"unknown method {method!r}")
    result = EigenResult(np.asarray(vals, dtype=complex), ok, its)
    if vectors:
        vals_v, vecs = scipy.linalg.eig(a)
        if method == "qr":
            # pair LAPACK vectors to our eigenvalues
            order = match_indices(result.eigenvalues, vals_v)
            vecs = vecs[:, order]
        result.vectors = vecs
        anorm = max(np.linalg.norm(a, 2), np.finfo(float).tiny)
        res = np.linalg.norm(a @ vecs - vecs * result.eigenvalues, axis=0)
        res /= np.maximum(np.linalg.norm(vecs, axis=0), np.finfo(float).tiny)
        result.residual_bound = float(res.max() / anorm) if n else 0.0
    return result


# --------------------------------------------------------------------------
# Symmetric tridiagonal eigenvalues by bisection
# --------------------------------------------------------------------------

@numba.njit(cache=True)
def _sturm_counts(diag, off2, shifts, pivmin):
    """Number of eigenvalues strictly below each shift."""
    out = np.zeros(shifts.shape[0], dtype=np.int64)
    n = diag.shape[0]
    for j in range(shifts.shape[0]):
        s = shifts[j]
        q = diag[0] - s
        if abs(q) < pivmin:
            q = -pivmin
        cnt = 1 if q < 0 else 0
        for i in range(1, n):
            q = diag[i] - s - off2[i - 1] / q
            if abs(q) < pivmin:
                q = -pivmin
            if q < 0:
                cnt += 1
        out[j] = cnt
    return out


@numba.njit(cache=True)
def _bisect(diag, off2, lo, hi, idx, pivmin, tol):
    """Bisection for eigenvalue ``idx[j]`` inside [lo[j], hi[j]]."""
    n = diag.shape[0]
    out = np.empty(idx.shape[0])
    for j in range(idx.shape[0]):
        a, b = lo[j], hi[j]
        target = idx[j] + 1
        for _ in range(200):
            mid = 0.5 * (a + b)
            if b - a <= tol or mid == a or mid == b:
                break
            q = diag[0] - mid
            if abs(q) < pivmin:
                q = -pivmin
            cnt = 1 if q < 0 else 0
            for i in range(1, n):
                q = diag[i] - mid - off2[i - 1] / q
                if abs(q) < pivmin:
                    q = -pivmin
                if q < 0:
                    cnt += 1
            if cnt >= target:
                b = mid
            else:
                a = mid
        out[j] = 0.5 * (a + b)
    return out


def sturm_count(diag, off, x) -> np.ndarray:
    """Count of eigenvalues of the tridiagonal matrix below each ``x``."""
    diag = np.ascontiguousarray(diag, dtype=float)
    off2 = np.ascontiguousarray(off, dtype=float) ** 2
    norm = _tridiag_norm(diag, np.sqrt(off2))
    pivmin = np.finfo(float).tiny * max(1.0, norm * norm)
    return _sturm_counts(diag, off2, np.atleast_1d(np.asarray(x, dtype=float)), pivmin)


def _tridiag_norm(diag, off) -> float:
    ext = np.zeros(len(diag))
    ext[:-1] += np.abs(off)
    ext[1:] += np.abs(off)
    return float(np.max(np.abs(diag) + ext)) if len(diag) else 0.0


def eig_sym_tridiag(diag, off, k: int | None = None, rtol: float = 1e-13) -> np.ndarray:
    """The ``k`` smallest eigenvalues (ascending) of a real symmetric
    tridiagonal matrix with main diagonal ``diag`` and off-diagonal ``off``.

    Accuracy is ``rtol * ||T||_inf`` in absolute terms.  ``k=None`` returns
    the whole spectrum.
    """
    diag = np.ascontiguousarray(diag, dtype=float)
    off = np.ascontiguousarray(off, dtype=float)
    n = diag.shape[0]
    if n == 0:
        raise ValueError("empty matrix")
    if off.shape[0] != n - 1:
        raise ValueError(f"off-diagonal length {off.shape[0]} != {n - 1}")
    if k is None:
        k = n
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside 1..{n}")
    if n == 1:
        return diag.copy()
    norm = _tridiag_norm(diag, off)
    ext = np.zeros(n)
    ext[:-1] += np.abs(off)
    ext[1:] += np.abs(off)
    g_lo = float(np.min(diag - ext))
    g_hi = float(np.max(diag + ext))
    pad = 2 * np.finfo(float).eps * max(norm, 1.0) * n
    g_lo -= pad
    g_hi += pad
    off2 = off * off
    pivmin = np.finfo(float).tiny * max(1.0, norm * norm)
    tol = max(rtol * norm, 4 * np.finfo(float).eps * max(abs(g_lo), abs(g_hi)))
    idx = np.arange(k)
    lo = np.full(k, g_lo)
    hi = np.full(k, g_hi)
    vals = _bisect(diag, off2, lo, hi, idx, pivmin, tol)
    return np.sort(vals)


def tridiag_to_dense(diag, off) -> np.ndarray:
    return np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)


# --------------------------------------------------------------------------
# Linear solves and singular values
# --------------------------------------------------------------------------

class LU:
    """Partially pivoted LU factorization, reusable for many right-hand sides."""

    def __init__(self, a, rtol: float = 1e-14):
        a = _as_square(a)
        self.n = a.shape[0]
        self.norm = float(np.linalg.norm(a, 1))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            self.factors = scipy.linalg.lu_factor(a, check_finite=False)
        piv = np.abs(np.diag(self.factors[0]))
        self.min_pivot = float(piv.min()) if self.n else 0.0
        self.singular = self.min_pivot <= rtol * self.norm

    def solve(self, b, trans: int = 0) -> np.ndarray:
        if self.singular:
            raise SingularMatrixError(
                f"matrix singular to tolerance (min pivot {self.min_pivot:.3e}, "
                f"norm {self.norm:.3e})")
        return scipy.linalg.lu_solve(self.factors, b, trans=trans, check_finite=False)


def solve_dense(a, b) -> np.ndarray:
    """Solve ``a x = b``; raises SingularMatrixError for singular ``a``."""
    return LU(a).solve(np.asarray(b))


def smallest_singular(a, z: complex = 0.0, tol: float = 1e-10, max_iter: int = 500,
                      seed: int = 0) -> float:
    """sigma_min(A - z I) by inverse iteration on (A - zI)^* (A - zI)."""
    a = _as_square(a)
    n = a.shape[0]
    b = a - z * np.eye(n)
    lu = LU(b, rtol=0.0)
    if lu.min_pivot == 0.0:
        return 0.0
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    x /= np.linalg.norm(x)
    est = np.inf
    for _ in range(max_iter):
        y = lu.solve(x)                  # B^{-1} x
        v = lu.solve(y, trans=2)         # B^{-*} B^{-1} x
        nv = np.linalg.norm(v)
        if not np.isfinite(nv) or nv == 0.0:
            return 0.0
        new = 1.0 / np.sqrt(nv)
        x = v / nv
        if abs(new - est) <= tol * new:
            return float(new)
        est = new
    raise ConvergenceError(f"inverse iteration for sigma_min did not settle in {max_iter} steps")


# --------------------------------------------------------------------------
# Spectrum comparison
# --------------------------------------------------------------------------

def _lex_order(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    return np.lexsort((z.imag, z.real))


def match_indices(a, b) -> np.ndarray:
    """Greedy nearest-neighbour pairing: ``b[out[i]]`` is matched with ``a[i]``.

    Entries of ``a`` are visited in lexicographic (Re, Im) order; each picks
    the closest unused entry of ``b``, ties going to the lexicographically
    smaller candidate.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if len(b) < len(a):
        raise ValueError("second set must be at least as large as the first")
    b_order = _lex_order(b)
    used = np.zeros(len(b), dtype=bool)
    out = np.empty(len(a), dtype=int)
    for i in _lex_order(a):
        d = np.abs(b[b_order] - a[i])
        d[used[b_order]] = np.inf
        j = b_order[int(np.argmin(d))]  # argmin picks the first, i.e. lex-smallest, tie
        used[j] = True
        out[i] = j
    return out


def match_distance(a, b, relative: bool = False) -> float:
    """Largest pairwise distance after greedy matching of ``a`` into ``b``."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if len(a) == 0:
        return 0.0
    idx = match_indices(a, b)
    d = np.abs(a - b[idx])
    if relative:
        d = d / np.maximum(np.abs(a), np.finfo(float).tiny)
    return float(d.max())
