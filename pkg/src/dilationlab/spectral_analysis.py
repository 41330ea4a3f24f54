"""Spectra of the discretized operators and the diagnostics around them:
reliability tagging, isospectrality across dilation angles, numerical range
polygons and pseudospectral fields.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import operator_model as om
from .discretize import Discretization, assemble_dilated
from .errors import ConvergenceError
from .linalg import eig_dense, match_distance, smallest_singular

# eigenvalue is kept only if sigma_min(A - lambda) <= RESOLVENT_TOL * ||A||_1
RESOLVENT_TOL = 1e-6
# and if a refined discretization reproduces it to this relative accuracy
REFINE_RTOL = 1e-3
REFINE_FACTOR = 1.5


def lex_sort(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    return z[np.lexsort((z.imag, z.real))]


def dilation_for(gamma: float, kappa: float, theta: float | None = None) -> complex:
    """Working dilation u + i theta for a spectrum computation.

    e^u = gamma^{-1/(kappa+2)} matches the Hermite basis to the length scale
    of the lowest modes; theta defaults to half the admissible angle.
    """
    u = -math.log(gamma) / (kappa + 2.0) if gamma > 1.0 else 0.0
    if theta is None:
        theta = om.default_theta(kappa)
    return complex(u, theta)


@dataclass
class Spectrum:
    """The ``k`` eigenvalues of smallest real part of one discretized operator."""

    eigenvalues: np.ndarray
    reliable: np.ndarray
    spec: om.OperatorSpec
    disc: Discretization
    norm: float = float("nan")

    @property
    def abscissa(self) -> float:
        return float(self.eigenvalues.real.min())

    @property
    def reliable_count(self) -> int:
        return int(self.reliable.sum())

    @property
    def reliable_abscissa(self) -> float:
        """Smallest real part among reliable eigenvalues (nan if there are none)."""
        if not self.reliable.any():
            return float("nan")
        return float(self.eigenvalues[self.reliable].real.min())

    @property
    def lowest_reliable(self) -> bool:
        return bool(self.reliable[np.argmin(self.eigenvalues.real)])


def _lowest(vals: np.ndarray, k: int) -> np.ndarray:
    idx = np.argsort(vals.real, kind="stable")[:k]
    return lex_sort(vals[idx])


def eigenvalues_of(spec: om.OperatorSpec, disc: Discretization, k: int | None = None) -> np.ndarray:
    """Raw eigenvalues (k smallest in real part) with no reliability screen."""
    a = assemble_dilated(spec, disc)
    res = eig_dense(a)
    if not res.converged:
        raise ConvergenceError(f"eigensolver stopped after {res.iterations} sweeps (n={disc.n})")
    return _lowest(res.eigenvalues, k or disc.n)


def spectrum(spec: om.OperatorSpec, disc: Discretization, k: int,
             reference: "Spectrum | np.ndarray | None" = None,
             check_resolvent: bool = True) -> Spectrum:
    """Eigenvalues of the discretized L_gamma^(w), tagged for reliability.

    An eigenvalue is reliable when sigma_min(A - lambda I) is at most
    ``RESOLVENT_TOL * ||A||`` and a second discretization reproduces it to
    ``REFINE_RTOL`` (relative).  The second discretization is ``reference``
    when given (e.g. the previous level of an adaptive sweep), otherwise the
    same scheme with 1.5 times as many unknowns.
    """
    if not 1 <= k <= disc.n:
        raise ValueError(f"k={k} outside 1..{disc.n}")
    a = assemble_dilated(spec, disc)
    res = eig_dense(a)
    if not res.converged:
        raise ConvergenceError(f"eigensolver stopped after {res.iterations} sweeps (n={disc.n})")
    vals = _lowest(res.eigenvalues, k)
    norm = float(np.linalg.norm(a, 1))

    if reference is None:
        reference = eigenvalues_of(spec, disc.refined(REFINE_FACTOR))
    elif isinstance(reference, Spectrum):
        reference = reference.eigenvalues
    reference = np.asarray(reference, dtype=complex)
    stable = np.array([
        np.min(np.abs(reference - lam)) <= REFINE_RTOL * max(abs(lam), 1.0)
        for lam in vals])

    if check_resolvent:
        small = np.array([smallest_singular(a, lam) <= RESOLVENT_TOL * norm for lam in vals])
    else:
        small = np.ones(k, dtype=bool)
    return Spectrum(vals, stable & small, spec, disc, norm)


# --------------------------------------------------------------------------
# Isospectrality across dilation angles
# --------------------------------------------------------------------------

@dataclass
class IsospectralityReport:
    thetas: list
    distances: np.ndarray        # pairwise relative match distances
    tol: float
    passed: bool
    degraded: bool               # some eigenvalue among the k lowest was unreliable
    spectra: list = field(repr=False, default_factory=list)

    @property
    def max_distance(self) -> float:
        return float(self.distances.max()) if self.distances.size else 0.0


def isospectrality_report(spec: om.OperatorSpec, thetas, k: int, tol: float,
                          disc: Discretization) -> IsospectralityReport:
    """Compare the ``k`` lowest eigenvalues of L^(u + i theta) across ``thetas``.

    ``u`` is taken from ``spec.w``.  Distances are relative, after greedy
    matching.  Unreliable eigenvalues do not fail the report but set
    ``degraded``.
    """
    thetas = [float(t) for t in thetas]
    limit = om.theta_max(spec.kappa)
    for t in thetas:
        if not abs(t) < limit:
            raise ValueError(f"theta={t} outside (-{limit:.6g}, {limit:.6g})")
    spectra = [spectrum(spec.with_w(complex(spec.u, t)), disc, k) for t in thetas]
    m = len(spectra)
    dist = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            d = max(match_distance(spectra[i].eigenvalues, spectra[j].eigenvalues, relative=True),
                    match_distance(spectra[j].eigenvalues, spectra[i].eigenvalues, relative=True))
            dist[i, j] = dist[j, i] = d
    degraded = any(s.reliable_count < k for s in spectra)
    return IsospectralityReport(thetas, dist, tol, bool(np.all(dist <= tol)), degraded, spectra)


# --------------------------------------------------------------------------
# Numerical range
# --------------------------------------------------------------------------

@dataclass
class NumericalRange:
    """Outer polygon of the numerical range from ``n_angles`` support lines.

    Each line is Re(e^{i phi} z) <= mu(phi), with mu(phi) the top eigenvalue
    of the Hermitian part of e^{i phi} A.  ``boundary`` lists the polygon
    vertices counterclockwise; ``tangent_points`` are points of the range
    itself where the lines touch it.
    """

    boundary: np.ndarray
    angles: np.ndarray
    support: np.ndarray
    tangent_points: np.ndarray
    norm: float

    def contains(self, z, tol: float = 0.0) -> np.ndarray:
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        proj = (np.exp(1j * self.angles)[None, :] * z[:, None]).real
        return np.all(proj <= self.support[None, :] + tol, axis=1)

    def is_convex(self, tol: float | None = None) -> bool:
        if tol is None:
            tol = 1e-12 * max(self.norm, 1.0) ** 2
        v = _dedupe(self.boundary, 1e-12 * max(self.norm, 1.0))
        if len(v) < 3:
            return True
        e1 = np.roll(v, -1) - v
        e2 = np.roll(e1, -1)
        cross = (e1.conj() * e2).imag
        return bool(np.all(cross >= -tol))


def _dedupe(v: np.ndarray, tol: float) -> np.ndarray:
    keep = [v[0]]
    for z in v[1:]:
        if abs(z - keep[-1]) > tol:
            keep.append(z)
    if len(keep) > 1 and abs(keep[-1] - keep[0]) <= tol:
        keep.pop()
    return np.array(keep)


def numerical_range(a, n_angles: int = 64) -> NumericalRange:
    if n_angles < 8:
        raise ValueError(f"need at least 8 angles, got {n_angles}")
    a = np.asarray(a, dtype=complex)
    angles = 2 * np.pi * np.arange(n_angles) / n_angles
    support = np.empty(n_angles)
    tangent = np.empty(n_angles, dtype=complex)
    for j, phi in enumerate(angles):
        rot = np.exp(1j * phi) * a
        herm = 0.5 * (rot + rot.conj().T)
        vals, vecs = scipy.linalg.eigh(herm, subset_by_index=[a.shape[0] - 1, a.shape[0] - 1])
        support[j] = vals[-1]
        v = vecs[:, -1]
        tangent[j] = np.vdot(v, a @ v)
    # consecutive support lines x cos(phi) - y sin(phi) = mu intersect at the vertices
    nxt = np.roll(np.arange(n_angles), -1)
    c1, s1 = np.cos(angles), -np.sin(angles)
    c2, s2 = c1[nxt], s1[nxt]
    det = c1 * s2 - s1 * c2
    x = (support * s2 - s1 * support[nxt]) / det
    y = (c1 * support[nxt] - support * c2) / det
    verts = (x + 1j * y)[::-1]  # lines turn clockwise with phi
    return NumericalRange(verts, angles, support, tangent, float(np.linalg.norm(a, 2)))


def containment_check(s: "Spectrum | np.ndarray", r: NumericalRange, rtol: float = 1e-8) -> bool:
    """All eigenvalues inside the polygon inflated by ``rtol * ||A||``."""
    vals = s.eigenvalues if isinstance(s, Spectrum) else np.asarray(s, dtype=complex)
    return bool(np.all(r.contains(vals, tol=rtol * r.norm)))


# --------------------------------------------------------------------------
# Pseudospectra
# --------------------------------------------------------------------------

@dataclass
class PseudospectrumGrid:
    re: np.ndarray
    im: np.ndarray
    sigma: np.ndarray            # sigma[i, j] = sigma_min(A - (re[j] + i im[i]))

    def local_minima(self) -> np.ndarray:
        """Interior grid points whose value is below all 8 neighbours."""
        s = self.sigma
        pad = np.pad(s, 1, constant_values=-np.inf)
        is_min = np.ones_like(s, dtype=bool)
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                if di == 0 and dj == 0:
                    continue
                nb = pad[1 + di:1 + di + s.shape[0], 1 + dj:1 + dj + s.shape[1]]
                is_min &= s < nb
        i, j = np.nonzero(is_min)
        return self.re[j] + 1j * self.im[i]


def _sigma_min_triangular(t: np.ndarray, z: complex, tol: float = 1e-8, max_iter: int = 300) -> float:
    n = t.shape[0]
    b = t - z * np.eye(n)
    d = np.abs(np.diag(b))
    if d.min() == 0.0:
        return 0.0
    x = np.ones(n, dtype=complex) / math.sqrt(n)
    est = np.inf
    for _ in range(max_iter):
        y = scipy.linalg.solve_triangular(b, x, lower=False, check_finite=False)
        v = scipy.linalg.solve_triangular(b, y, lower=False, trans=2, check_finite=False)
        nv = np.linalg.norm(v)
        if not np.isfinite(nv):
            return 0.0
        new = 1.0 / math.sqrt(nv)
        x = v / nv
        if abs(new - est) <= tol * new:
            return new
        est = new
    return est


def pseudospectrum_grid(a, re_range, im_range, resolution=50) -> PseudospectrumGrid:
    """sigma_min(A - z I) over a rectangular grid.

    A complex Schur form is computed once; every grid point then costs a few
    triangular solves of inverse iteration.
    """
    nx, ny = (resolution, resolution) if np.isscalar(resolution) else resolution
    if nx > 200 or ny > 200:
        raise ValueError("resolution is capped at 200 x 200")
    t, _ = scipy.linalg.schur(np.asarray(a, dtype=complex), output="complex")
    re = np.linspace(re_range[0], re_range[1], nx)
    im = np.linspace(im_range[0], im_range[1], ny)
    sigma = np.empty((ny, nx))
    for i, yv in enumerate(im):
        for j, xv in enumerate(re):
            sigma[i, j] = _sigma_min_triangular(t, complex(xv, yv))
    return PseudospectrumGrid(re, im, sigma)
