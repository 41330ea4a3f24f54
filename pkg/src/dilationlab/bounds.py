"""Lower bounds on the spectral abscissa through the rotated real part.

For 0 < theta < theta_max every eigenvalue lambda of L_gamma satisfies
Re lambda >= cos(2 theta) * min spec H_gamma(theta), where
H_gamma(theta) = -d^2/dx^2 + V(x) is self-adjoint.  This module computes
that bound and the ingredients of its large-gamma analysis: the anharmonic
comparison operator K_alpha, the auxiliary function g(y), the IMS partition
identity and the sector inequalities of the rotated quadratic form.

"Certified" values here are exact up to discretization error only.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from . import operator_model as om
from .discretize import (Discretization, Scheme, assemble_anharmonic, assemble_dilated,
                         assemble_real_part, build_cutoffs, default_fd, hermite_kinetic,
                         hermite_position_sq, CutoffProfile)
from .errors import ConvergenceError

BOX_DOUBLINGS = 6
BOX_TOL = 1e-6


def ims_exponent(kappa: float) -> float:
    """nu = 1/(2 + 2 kappa): balances alpha^{1 - 2 kappa nu} against alpha^{2 nu}."""
    return 1.0 / (2.0 + 2.0 * kappa)


def leading_exponent(kappa: float) -> float:
    return 2.0 / (kappa + 2.0)


def correction_exponent(kappa: float) -> float:
    return 1.0 / (1.0 + kappa)


# --------------------------------------------------------------------------
# Ground states of the self-adjoint comparison operators
# --------------------------------------------------------------------------

def ground_state(assemble, disc: Discretization, tol: float = BOX_TOL,
                 max_doublings: int = BOX_DOUBLINGS):
    """Lowest eigenvalue of ``assemble(disc)``, doubling the box at fixed
    spacing until it moves by less than ``tol * max(1, |lambda|)``.

    Returns (lambda0, disc actually used).
    """
    lam = assemble(disc).eigenvalues(1)[0]
    for _ in range(max_doublings):
        wider = disc.doubled_box()
        new = assemble(wider).eigenvalues(1)[0]
        if abs(new - lam) < tol * max(1.0, abs(new)):
            return float(new), wider
        lam, disc = new, wider
    raise ConvergenceError(
        f"ground state still moving after {max_doublings} box doublings "
        f"(box={disc.box:g}, last change {abs(new - lam):.3e})")


@functools.lru_cache(maxsize=32)
def anharmonic_ground(kappa: float, alpha: float = 1.0, n: int | None = None,
                      box: float | None = None) -> float:
    """lambda_0(K_alpha) on an FD grid (default grid from ``default_fd``)."""
    spec = om.AnharmonicSpec(alpha, kappa)
    if n is None or box is None:
        disc = default_fd(kappa, alpha)
        lam, _ = ground_state(lambda d: assemble_anharmonic(spec, d), disc)
        return lam
    return float(assemble_anharmonic(spec, Discretization.fd(n, box)).eigenvalues(1)[0])


@dataclass
class BoundReport:
    gamma: float
    kappa: float
    theta: float
    nu: float
    alpha: float
    lambda0_H: float
    certified: float
    predicted: float
    n: int = 0
    box: float = 0.0

    def as_row(self) -> dict:
        return {k: getattr(self, k) for k in
                ("gamma", "kappa", "theta", "nu", "alpha", "lambda0_H", "certified", "predicted")}


def predicted_bound(kappa: float, theta: float, gamma: float) -> float:
    """cos(2 theta) lambda_0(K_1) alpha^{2/(kappa+2)}: the leading-order value of
    the certified bound, i.e. c * gamma^{2/(kappa+2)}."""
    alpha = om.effective_alpha(om.RealPartSpec(gamma, kappa, theta))
    if alpha <= 0:
        return 0.0
    return math.cos(2 * theta) * anharmonic_ground(kappa) * alpha ** leading_exponent(kappa)


def certified_lower_bound(spec: om.RealPartSpec, disc: Discretization | None = None,
                          tol: float = BOX_TOL) -> BoundReport:
    """cos(2 theta) * lambda_0(H_gamma(theta)) with box auto-doubling."""
    if spec.theta == 0:
        raise ValueError("theta must be nonzero for a certified bound")
    alpha = om.effective_alpha(spec)
    if disc is None:
        disc = default_fd(spec.kappa, alpha)
    if disc.scheme is not Scheme.FD:
        raise ValueError("certified bound needs the FD scheme")
    lam, used = ground_state(lambda d: assemble_real_part(spec, d), disc, tol=tol)
    c2 = math.cos(2 * spec.theta)
    return BoundReport(
        gamma=spec.gamma, kappa=spec.kappa, theta=spec.theta, nu=ims_exponent(spec.kappa),
        alpha=alpha, lambda0_H=lam, certified=c2 * lam,
        predicted=predicted_bound(spec.kappa, spec.theta, spec.gamma),
        n=used.n, box=used.box)


# --------------------------------------------------------------------------
# Anharmonic scaling
# --------------------------------------------------------------------------

@dataclass
class AnharmonicReport:
    kappa: float
    lambda0_K1: float
    alphas: list
    lambda0: list
    deviation: list              # |lambda0(K_a) / (lambda0(K_1) a^{2/(2+kappa)}) - 1|
    tol: float
    n: int
    box: float

    @property
    def max_deviation(self) -> float:
        return max(self.deviation) if self.deviation else 0.0

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tol


def anharmonic_scaling_check(kappa: float, alphas, n: int = 4000, box: float | None = None,
                             tol: float = 1e-3) -> AnharmonicReport:
    """Check lambda_0(K_alpha) = lambda_0(K_1) alpha^{2/(2+kappa)} on one fixed grid.

    The grid is shared by every alpha (and by alpha = 1), so the check sees
    genuine discretization differences rather than an exactly rescaled
    matrix.  ``box`` defaults to 10 widths of the widest ground state.
    """
    alphas = [float(a) for a in alphas]
    if any(a <= 0 for a in alphas):
        raise ValueError("alphas must be positive")
    if any(b <= a for a, b in zip(alphas, alphas[1:])):
        raise ValueError("alphas must be ascending")
    if box is None:
        box = 10.0 * max(1.0, min(alphas + [1.0]) ** (-1.0 / (kappa + 2.0)))
    disc = Discretization.fd(n, box)

    def lam0(a):
        return float(assemble_anharmonic(om.AnharmonicSpec(a, kappa), disc).eigenvalues(1)[0])

    base = lam0(1.0)
    p = leading_exponent(kappa)
    vals = [lam0(a) for a in alphas]
    dev = [abs(v / (base * a ** p) - 1.0) for a, v in zip(alphas, vals)]
    return AnharmonicReport(kappa, base, alphas, vals, dev, tol, n, box)


# --------------------------------------------------------------------------
# g(y) = y^{2/kappa} + alpha y / (1 + y)^2
# --------------------------------------------------------------------------

def g_function(y, alpha: float, kappa: float):
    y = np.asarray(y, dtype=float)
    return y ** (2.0 / kappa) + alpha * y / (1.0 + y) ** 2


def stationarity_residual(y, alpha: float, kappa: float):
    """(2/(kappa alpha)) y^{2/kappa - 1} (1 + y)^3 + 1 - y; zero where g' = 0."""
    y = np.asarray(y, dtype=float)
    return (2.0 / (kappa * alpha)) * y ** (2.0 / kappa - 1.0) * (1.0 + y) ** 3 + 1.0 - y


def _bisect(fn, a: float, b: float, rtol: float = 0.0) -> float:
    """Bisection on a sign-changing bracket; rtol=0 runs to adjacent floats."""
    fa = fn(a)
    for _ in range(300):
        m = 0.5 * (a + b)
        if m in (a, b) or (b - a) <= rtol * abs(m):
            break
        fm = fn(m)
        if fm == 0:
            return m
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


@dataclass
class GAnalysis:
    alpha: float
    kappa: float
    nu: float
    roots: list                  # stationary points found, ascending
    y1: float
    y2: float
    g_y1: float
    g_y2: float
    edge: float                  # alpha^{-kappa nu}
    g_edge: float
    minimizer: float
    g_min: float
    residuals: list = field(default_factory=list)

    @property
    def degenerate(self) -> bool:
        return len(self.roots) < 2


def g_analysis(alpha: float, kappa: float, nu: float | None = None,
               grid_points: int = 600, y_range=(1e-6, 1e6)) -> GAnalysis:
    """Stationary points of g and its minimum over y > alpha^{-kappa nu}.

    Roots are bracketed by sign changes of the stationarity residual on a
    logarithmic grid and refined by bisection.  Fewer than two roots is
    reported (``degenerate``), not raised: it happens legitimately at
    small alpha.
    """
    if nu is None:
        nu = ims_exponent(kappa)
    if not alpha > 1:
        raise ValueError(f"alpha must exceed 1, got {alpha}")
    if not 0 < nu <= leading_exponent(kappa):
        raise ValueError(f"nu must lie in (0, {leading_exponent(kappa):.6g}], got {nu}")
    ys = np.logspace(math.log10(y_range[0]), math.log10(y_range[1]), grid_points)
    r = stationarity_residual(ys, alpha, kappa)

    def res(y):
        return float(stationarity_residual(y, alpha, kappa))

    roots = []
    for i in np.nonzero(np.sign(r[:-1]) != np.sign(r[1:]))[0]:
        roots.append(_bisect(res, float(ys[i]), float(ys[i + 1])))
    y1 = roots[0] if roots else float("nan")
    y2 = roots[1] if len(roots) > 1 else float("nan")
    edge = alpha ** (-kappa * nu)
    g = lambda y: float(g_function(y, alpha, kappa))
    cands = [(g(edge), edge)] + [(g(y), y) for y in roots if y > edge]
    g_min, y_min = min(cands)
    return GAnalysis(alpha=alpha, kappa=kappa, nu=nu, roots=roots, y1=y1, y2=y2,
                     g_y1=g(y1) if roots else float("nan"),
                     g_y2=g(y2) if len(roots) > 1 else float("nan"),
                     edge=edge, g_edge=g(edge), minimizer=y_min, g_min=g_min,
                     residuals=[res(y) for y in roots])


# --------------------------------------------------------------------------
# IMS localization identity on the FD grid
# --------------------------------------------------------------------------

def ims_identity_residual(spec: om.RealPartSpec, disc: Discretization,
                          cut: CutoffProfile) -> float:
    """||M - H||_inf / ||H||_inf with M = J~ H J~ + J H J - (J~')^2 - (J')^2.

    Both operators are tridiagonal on the FD grid, so the norms are exact
    row-sum norms.  The continuum identity is exact; on the grid the
    residual is O(h^2).
    """
    hmat = assemble_real_part(spec, disc)
    if cut.grid.shape != hmat.grid.shape or not np.allclose(cut.grid, hmat.grid, rtol=0, atol=1e-12 * disc.box):
        raise ValueError("cutoff profile was built on a different grid")
    J, Jt = cut.J, cut.Jt
    m_diag = (J * J + Jt * Jt) * hmat.diag - cut.dJ ** 2 - cut.dJt ** 2
    m_off = (J[:-1] * J[1:] + Jt[:-1] * Jt[1:]) * hmat.off
    dd = m_diag - hmat.diag
    do = m_off - hmat.off

    def row_norm(d, o):
        s = np.abs(d).copy()
        s[:-1] += np.abs(o)
        s[1:] += np.abs(o)
        return float(s.max())

    return row_norm(dd, do) / row_norm(hmat.diag, hmat.off)


def ims_refinement(spec: om.RealPartSpec, disc: Discretization, levels: int = 3,
                   nu: float | None = None) -> list:
    """IMS residuals on ``levels + 1`` nested grids, halving h each time."""
    if nu is None:
        nu = ims_exponent(spec.kappa)
    alpha = om.effective_alpha(spec)
    out = []
    for _ in range(levels + 1):
        cut = build_cutoffs(alpha, nu, disc.grid())
        out.append((disc.n, disc.h, ims_identity_residual(spec, disc, cut)))
        disc = disc.refined(2.0)
    return out


# --------------------------------------------------------------------------
# Sector inequalities for the rotated form
# --------------------------------------------------------------------------

@dataclass
class SectorialityReport:
    gamma: float
    kappa: float
    theta: float
    samples: int
    seed: int
    lower_violations: int
    upper_violations: int
    sector_violations: int
    min_slack: float             # smallest margin over all inequalities, relative

    @property
    def violations(self) -> int:
        return self.lower_violations + self.upper_violations + self.sector_violations


def _harmonic_form(disc: Discretization) -> np.ndarray:
    if disc.scheme is Scheme.HERMITE:
        return hermite_kinetic(disc.n) + hermite_position_sq(disc.n)
    x = disc.grid()
    h = disc.h
    return (np.diag(np.full(disc.n, 2.0 / h ** 2) + x * x)
            - np.diag(np.full(disc.n - 1, 1.0 / h ** 2), 1)
            - np.diag(np.full(disc.n - 1, 1.0 / h ** 2), -1))


def sectoriality_check(spec: om.OperatorSpec, disc: Discretization, samples: int = 500,
                       seed: int = 0) -> SectorialityReport:
    """Evaluate Q = psi* A psi on random unit vectors and test

        cos(2t) Q0 - |g| <= Re Q <= cos(2t) Q0 + |g|,
        |Im Q| <= tan(2|t|) Re Q + |g| (1 + 1/cos(2t)),

    with Q0 = psi* (-d^2 + x^2) psi.  A margin of 1e-12 of the terms involved
    absorbs rounding.
    """
    if spec.w.real != 0:
        raise ValueError("sectoriality check needs a purely imaginary dilation w = i theta")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    theta = spec.w.imag
    a = assemble_dilated(spec, disc)
    q0m = _harmonic_form(disc)
    rng = np.random.default_rng(seed)
    psi = rng.standard_normal((samples, disc.n)) + 1j * rng.standard_normal((samples, disc.n))
    psi /= np.linalg.norm(psi, axis=1, keepdims=True)
    q = np.einsum("si,ij,sj->s", psi.conj(), a, psi)
    q0 = np.einsum("si,ij,sj->s", psi.conj(), q0m, psi).real
    g = abs(spec.gamma)
    c2 = math.cos(2 * theta)
    t2 = math.tan(2 * abs(theta))
    scale = q0 + g + 1.0
    eps = 1e-12 * scale
    lower = q.real - (c2 * q0 - g)
    upper = (c2 * q0 + g) - q.real
    sector = t2 * q.real + g * (1 + 1 / c2) - np.abs(q.imag)
    slack = np.minimum(np.minimum(lower, upper), sector) / scale
    return SectorialityReport(
        gamma=spec.gamma, kappa=spec.kappa, theta=theta, samples=samples, seed=seed,
        lower_violations=int(np.sum(lower < -eps)),
        upper_violations=int(np.sum(upper < -eps)),
        sector_violations=int(np.sum(sector < -eps)),
        min_slack=float(slack.min()))


# --------------------------------------------------------------------------
# Bound as a function of gamma
# --------------------------------------------------------------------------

@dataclass
class BoundCurve:
    kappa: float
    theta: float
    leading_exponent: float
    correction_exponent: float
    correction_subordinate: bool  # leading > correction; true for every kappa > 0
    prefactor: float              # least-squares c in certified ~ c gamma^{leading}
    reports: list

    def rows(self) -> list:
        out = []
        for r in self.reports:
            row = r.as_row()
            row["leading"] = self.prefactor * r.gamma ** self.leading_exponent
            out.append(row)
        return out


def analytic_bound_curve(kappa: float, theta: float, gammas) -> BoundCurve:
    """Certified bounds over ``gammas`` and the fitted leading term.

    Both exponents are recorded; ``correction_subordinate`` is their direct
    comparison, 2/(2+kappa) > 1/(1+kappa).
    """
    p, q = leading_exponent(kappa), correction_exponent(kappa)
    reports = [certified_lower_bound(om.RealPartSpec(float(g), kappa, theta)) for g in gammas]
    gp = np.array([r.gamma ** p for r in reports])
    cert = np.array([r.certified for r in reports])
    c = float(gp @ cert / (gp @ gp)) if len(reports) else float("nan")
    return BoundCurve(kappa, theta, p, q, p > q, c, reports)
