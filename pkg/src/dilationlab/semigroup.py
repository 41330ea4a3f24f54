"""Time evolution psi_t = -A psi for the undilated operator and the decay rate of ||psi(t)||."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import operator_model as om
from .discretize import Discretization, Scheme, assemble_dilated
from .linalg import LU

# relative slack allowed before a norm increase counts as a contractivity violation
CONTRACT_RTOL = 1e-12


@dataclass
class EvolutionRun:
    spec: om.OperatorSpec
    disc: Discretization
    psi0: np.ndarray = field(repr=False)
    t_grid: np.ndarray = field(repr=False)
    norms: np.ndarray = field(repr=False)
    dt: float
    contractivity_violations: int
    psi_final: np.ndarray = field(repr=False)
    method: str = "midpoint"

    @property
    def fitted_rate(self) -> float:
        return decay_rate(self)


def gaussian_initial(disc: Discretization) -> np.ndarray:
    """Normalized e^{-x^2/2} in the coordinates of ``disc``."""
    if disc.scheme is Scheme.HERMITE:
        v = np.zeros(disc.n, dtype=complex)
        v[0] = 1.0
        return v
    x = disc.grid()
    v = np.exp(-0.5 * x * x).astype(complex)
    return v / np.linalg.norm(v)


def evolve(spec: om.OperatorSpec, disc: Discretization, psi0=None, t_end: float = 1.0,
           dt: float = 1e-3, method: str = "midpoint") -> EvolutionRun:
    """Integrate psi' = -A psi from 0 to ``t_end``.

    ``method="midpoint"`` applies (I + dt/2 A)^{-1} (I - dt/2 A) each step
    (one LU factorization, reused); it is A-stable and contractive when the
    Hermitian part of A is positive semidefinite.  ``method="eig"`` uses an
    eigendecomposition of A and is exact in time, for long horizons.

    Norms are Euclidean in the Hermite coefficients (the L^2 norm), or the
    discrete L^2 norm on the FD grid up to a constant factor.
    """
    if spec.w != 0:
        raise ValueError("time evolution is defined for the undilated operator (w = 0)")
    if not dt > 0 or not t_end > 0:
        raise ValueError("dt and t_end must be positive")
    a = assemble_dilated(spec, disc)
    psi = gaussian_initial(disc) if psi0 is None else np.asarray(psi0, dtype=complex).copy()
    if psi.shape != (disc.n,):
        raise ValueError(f"psi0 has shape {psi.shape}, expected ({disc.n},)")
    steps = int(round(t_end / dt))
    t_grid = dt * np.arange(steps + 1)
    norms = np.empty(steps + 1)
    norms[0] = np.linalg.norm(psi)
    start = psi.copy()
    violations = 0
    if method == "midpoint":
        eye = np.eye(disc.n)
        lu = LU(eye + 0.5 * dt * a)
        rhs_op = eye - 0.5 * dt * a
        for i in range(1, steps + 1):
            psi = lu.solve(rhs_op @ psi)
            norms[i] = np.linalg.norm(psi)
            if norms[i] > norms[i - 1] * (1 + CONTRACT_RTOL):
                violations += 1
    elif method == "eig":
        vals, vecs = scipy.linalg.eig(a)
        coef = np.linalg.solve(vecs, psi)
        for i, t in enumerate(t_grid[1:], start=1):
            norms[i] = np.linalg.norm(vecs @ (np.exp(-t * vals) * coef))
            if norms[i] > norms[i - 1] * (1 + CONTRACT_RTOL):
                violations += 1
        psi = vecs @ (np.exp(-t_grid[-1] * vals) * coef)
    else:
        raise ValueError(f"unknown method {method!r}")
    return EvolutionRun(spec, disc, start, t_grid, norms, dt, violations, psi, method)


def decay_rate(run: EvolutionRun, window=None) -> float:
    """Least-squares slope of -ln ||psi(t)|| over ``window`` = (t_lo, t_hi).

    The default window is the second half of the run, past the transients
    that non-normality produces at early times.
    """
    t = run.t_grid
    if window is None:
        window = (0.5 * t[-1], t[-1])
    lo, hi = window
    if lo < t[0] or hi > t[-1] + 1e-12 or lo >= hi:
        raise ValueError(f"window {window} not inside [{t[0]}, {t[-1]}]")
    sel = (t >= lo - 1e-12) & (t <= hi + 1e-12)
    if sel.sum() < 10:
        raise ValueError(f"window {window} holds {sel.sum()} samples, need >= 10")
    nrm = run.norms[sel]
    if np.any(nrm < 1e-300):
        raise ValueError("norms underflow inside the fitting window")
    slope, _ = np.polyfit(t[sel], -np.log(nrm), 1)
    return float(slope)
