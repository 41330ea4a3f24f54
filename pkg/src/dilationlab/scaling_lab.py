"""Sweeps of the spectral abscissa over gamma and power-law fits."""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import operator_model as om
from .bounds import certified_lower_bound, leading_exponent
from .discretize import Discretization
from .errors import ReliabilityError
from .spectral_analysis import dilation_for, eigenvalues_of, spectrum

# gamma below this is outside the asymptotic regime and left out of fits
FIT_GAMMA_MIN = 1e2


@dataclass(frozen=True)
class SweepPolicy:
    """Adaptive resolution for one abscissa: n_start, 2 n_start, ... up to
    n_cap Hermite modes, stopping once the abscissa moves by less than
    ``rtol`` (relative) between levels."""

    n_start: int = 100
    n_cap: int = 1200
    rtol: float = 1e-4
    k: int = 6
    theta: float | None = None   # None: half of theta_max(kappa)


@dataclass
class SweepRecord:
    kappa: float
    gamma: float
    abscissa: float
    certified: float
    n_used: int
    reliable: bool
    u: float = 0.0
    theta: float = 0.0
    cert_theta: float = 0.0

    def as_row(self) -> dict:
        d = asdict(self)
        d["reliable"] = int(self.reliable)
        return d


@dataclass
class ScalingFit:
    exponent: float
    prefactor: float
    r_squared: float
    gamma_range: tuple
    count: int
    column: str = "abscissa"


def _levels(policy: SweepPolicy):
    n = policy.n_start
    while n < policy.n_cap:
        yield n
        n *= 2
    yield policy.n_cap


def abscissa_record(kappa: float, gamma: float, policy: SweepPolicy = SweepPolicy()) -> SweepRecord:
    """Converged abscissa and certified bound at one gamma."""
    gamma = float(gamma)
    theta = om.default_theta(kappa) if policy.theta is None else policy.theta
    w = dilation_for(gamma, kappa, theta)
    spec = om.OperatorSpec(gamma, kappa, w)
    prev = None
    converged = False
    for n in _levels(policy):
        vals = eigenvalues_of(spec, Discretization.hermite(n), policy.k)
        if prev is not None:
            a_old, a_new = prev[1].real.min(), vals.real.min()
            if abs(a_new - a_old) < policy.rtol * abs(a_new):
                converged = True
                break
        prev = (n, vals)
    spec_final = spectrum(spec, Discretization.hermite(n), policy.k, reference=prev[1])
    reliable = converged and spec_final.lowest_reliable
    cert_theta = om.default_theta(kappa)
    cert = certified_lower_bound(om.RealPartSpec(gamma, kappa, cert_theta)).certified
    return SweepRecord(kappa=kappa, gamma=gamma, abscissa=spec_final.abscissa, certified=cert,
                       n_used=n, reliable=bool(reliable), u=w.real, theta=w.imag,
                       cert_theta=cert_theta)


def _record_job(args):
    return abscissa_record(*args)


def sweep(kappa: float, gammas, policy: SweepPolicy = SweepPolicy(), jobs: int = 1) -> list:
    """One SweepRecord per gamma, sorted by gamma.  Unreliable records are
    kept (flagged); fits skip them."""
    gammas = [float(g) for g in gammas]
    if any(g < 0 for g in gammas):
        raise ValueError("gammas must be nonnegative")
    work = [(kappa, g, policy) for g in sorted(gammas)]
    if jobs is None:
        jobs = os.cpu_count() or 1
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            out = list(pool.map(_record_job, work))
    else:
        out = [_record_job(wk) for wk in work]
    return sorted(out, key=lambda r: r.gamma)


def parse_gamma_range(text: str) -> list:
    """``lo:hi:Nlog`` (N log-spaced points), ``lo:hi:Nlin``, or a comma list."""
    if ":" not in text:
        return [float(t) for t in text.split(",") if t.strip()]
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"bad range {text!r}; expected lo:hi:Nlog")
    lo, hi, spec = float(parts[0]), float(parts[1]), parts[2].strip().lower()
    if spec.endswith("log"):
        count = int(spec[:-3])
        if lo <= 0 or hi <= 0:
            raise ValueError("log-spaced ranges need positive endpoints")
        return list(np.logspace(math.log10(lo), math.log10(hi), count))
    if spec.endswith("lin"):
        return list(np.linspace(lo, hi, int(spec[:-3])))
    raise ValueError(f"bad range {text!r}; count must end in 'log' or 'lin'")


def fit_exponent(records, window=(FIT_GAMMA_MIN, math.inf), column: str = "abscissa") -> ScalingFit:
    """Least squares of ln(column) against ln(gamma) over reliable records in ``window``."""
    lo, hi = window
    pts = [(r.gamma, getattr(r, column)) for r in records
           if r.reliable and lo <= r.gamma <= hi and r.gamma > 0 and getattr(r, column) > 0]
    if len(pts) < 4:
        raise ReliabilityError(f"need >= 4 reliable records in {window}, have {len(pts)}")
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    slope, icpt = np.polyfit(x, y, 1)
    resid = y - (slope * x + icpt)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    r2 = min(1.0, max(0.0, r2))
    return ScalingFit(float(slope), float(math.exp(icpt)), r2,
                      (min(p[0] for p in pts), max(p[0] for p in pts)), len(pts), column)


def predicted_exponent(kappa: float) -> float:
    return leading_exponent(kappa)
