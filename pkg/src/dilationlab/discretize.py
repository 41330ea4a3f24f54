"""Finite matrices for the operator family.

Two schemes are supported.  The Hermite spectral scheme expands in the
normalized Hermite functions psi_k, where -d^2/dx^2 and x^2 are banded and
exact, and the bounded potential is integrated with Gauss-Hermite
quadrature.  The finite-difference scheme uses the three-point Laplacian on
the interior nodes of [-box, box] with Dirichlet walls.
"""
from __future__ import annotations

import cmath
import enum
import functools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import operator_model as om
from .linalg import eig_sym_tridiag, tridiag_to_dense

PI_QUARTER = math.pi ** -0.25


class Scheme(str, enum.Enum):
    HERMITE = "hermite"
    FD = "fd"


@dataclass(frozen=True)
class Discretization:
    """Basis or grid choice.

    ``n`` is the number of Hermite functions or interior FD nodes.  ``box`` is
    the FD half-width; ``quad_order`` the Gauss-Hermite order (default
    2n + 32, never below 2n).
    """

    scheme: Scheme
    n: int
    box: float | None = None
    quad_order: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"n must be an integer >= 2, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        if self.scheme is Scheme.FD:
            if self.box is None or not self.box > 0:
                raise ValueError("finite differences need box > 0")
        else:
            m = self.quad_order if self.quad_order is not None else 2 * self.n + 32
            if m < 2 * self.n:
                raise ValueError(f"quad_order {m} < 2n = {2 * self.n}")
            object.__setattr__(self, "quad_order", int(m))

    @classmethod
    def hermite(cls, n: int, quad_order: int | None = None) -> "Discretization":
        return cls(Scheme.HERMITE, n, quad_order=quad_order)

    @classmethod
    def fd(cls, n: int, box: float) -> "Discretization":
        return cls(Scheme.FD, n, box=float(box))

    @property
    def h(self) -> float:
        self._require_fd()
        return 2.0 * self.box / (self.n + 1)

    def grid(self) -> np.ndarray:
        """Interior FD nodes -box + j h, j = 1..n."""
        self._require_fd()
        return -self.box + self.h * np.arange(1, self.n + 1)

    def refined(self, factor: float = 2.0) -> "Discretization":
        """Same scheme with ``n`` scaled by ``factor``.

        For FD and factor 2 the grid is nested: n -> 2n + 1 halves h.
        """
        if self.scheme is Scheme.FD:
            if factor == 2.0:
                return Discretization.fd(2 * self.n + 1, self.box)
            return Discretization.fd(int(round(factor * (self.n + 1))) - 1, self.box)
        return Discretization.hermite(int(round(factor * self.n)))

    def doubled_box(self) -> "Discretization":
        """FD grid on [-2 box, 2 box] with the same spacing."""
        self._require_fd()
        return Discretization.fd(2 * self.n + 1, 2 * self.box)

    def _require_fd(self):
        if self.scheme is not Scheme.FD:
            raise ValueError("operation requires the finite-difference scheme")


# --------------------------------------------------------------------------
# Hermite functions and Gauss-Hermite quadrature
# --------------------------------------------------------------------------

def _hermite_scaled(n: int, x: np.ndarray, keep: bool = True):
    """Recurrence for psi_0..psi_{n-1} at ``x`` carried as mantissa * exp(log_scale).

    psi_{k+1} = sqrt(2/(k+1)) x psi_k - sqrt(k/(k+1)) psi_{k-1}.  The running
    rescale keeps far-out nodes (x ~ sqrt(2n)) from underflowing.
    Returns (table or None, p_{n-1}, p_n, log_scale) with psi_k = p_k e^{log_scale}.
    """
    x = np.asarray(x, dtype=float)
    table = np.empty((n, x.size)) if keep else None
    log_scale = -0.5 * x * x
    cur = np.full(x.size, PI_QUARTER)
    prev = np.zeros(x.size)
    for k in range(n):
        if keep:
            table[k] = cur * np.exp(log_scale)
        nxt = math.sqrt(2.0 / (k + 1)) * x * cur - math.sqrt(k / (k + 1)) * prev
        prev, cur = cur, nxt
        big = np.abs(cur) > 1e150
        if big.any():
            s = np.abs(cur[big])
            cur[big] /= s
            prev[big] /= s
            log_scale[big] += np.log(s)
    return table, prev, cur, log_scale


def hermite_functions(n: int, x) -> np.ndarray:
    """Normalized Hermite functions psi_0..psi_{n-1}, shape (n, len(x))."""
    return _hermite_scaled(n, np.atleast_1d(x))[0]


@functools.lru_cache(maxsize=16)
def _gauss_hermite_scaled(m: int):
    """Nodes and weights with the Gaussian absorbed: W_i = w_i exp(x_i^2)."""
    off = np.sqrt(np.arange(1, m) / 2.0)
    x = eig_sym_tridiag(np.zeros(m), off) if m > 1 else np.zeros(1)
    for _ in range(2):
        # Newton on psi_m(x) = 0 with psi_m' = sqrt(2m) psi_{m-1} - x psi_m
        _, p_prev, p_m, _ = _hermite_scaled(m, x, keep=False)
        x = x - p_m / (math.sqrt(2.0 * m) * p_prev - x * p_m)
    x = 0.5 * (x - x[::-1])  # exact symmetry
    _, p_prev, _, log_scale = _hermite_scaled(m, x, keep=False)
    # Christoffel numbers: W_i = 1 / (m psi_{m-1}(x_i)^2)
    log_w = -math.log(m) - 2.0 * (np.log(np.abs(p_prev)) + log_scale)
    scaled = np.exp(log_w)
    x.setflags(write=False)
    scaled.setflags(write=False)
    return x, scaled


def gauss_hermite(m: int):
    """Gauss-Hermite rule of order ``m`` for the weight exp(-x^2).

    Nodes are eigenvalues of the Jacobi matrix of the Hermite polynomials,
    polished by Newton steps; weights come from the Christoffel formula.
    """
    if int(m) != m or m < 1:
        raise ValueError(f"quadrature order must be >= 1, got {m}")
    x, scaled = _gauss_hermite_scaled(int(m))
    w = scaled * np.exp(-x * x)
    if np.any(w == 0.0):
        warnings.warn(f"Gauss-Hermite weights underflow to zero at order {m}",
                      RuntimeWarning, stacklevel=2)
    return x.copy(), w


def hermite_kinetic(n: int) -> np.ndarray:
    """-d^2/dx^2 in the psi_k basis."""
    k = np.arange(n, dtype=float)
    mat = np.diag(k + 0.5)
    off = -0.5 * np.sqrt((k[:-2] + 1) * (k[:-2] + 2))
    mat += np.diag(off, 2) + np.diag(off, -2)
    return mat


def hermite_position_sq(n: int) -> np.ndarray:
    """Multiplication by x^2 in the psi_k basis."""
    k = np.arange(n, dtype=float)
    mat = np.diag(k + 0.5)
    off = 0.5 * np.sqrt((k[:-2] + 1) * (k[:-2] + 2))
    mat += np.diag(off, 2) + np.diag(off, -2)
    return mat


def hermite_multiplication(values_at_nodes, n: int, m: int) -> np.ndarray:
    """Galerkin matrix int g psi_j psi_k dx from samples of g at the order-m nodes."""
    x, scaled = _gauss_hermite_scaled(m)
    psi = hermite_functions(n, x)
    return (psi * (scaled * values_at_nodes)) @ psi.T


def is_smooth_power(kappa: float) -> bool:
    """True when |x|^kappa is analytic at 0 (kappa an even integer)."""
    return float(kappa).is_integer() and int(kappa) % 2 == 0


@functools.lru_cache(maxsize=16)
def halfline_rule(n: int, points_per_panel: int = 16):
    """Composite Gauss-Legendre rule on [0, sqrt(2n+1) + 6].

    Panels are one local wavelength 2 pi / sqrt(2n+1) of psi_{n-1} wide, so
    products psi_j psi_k (j, k < n) are integrated to near machine precision
    whenever the third factor is smooth on the closed half-line.
    """
    reach = math.sqrt(2 * n + 1) + 6.0
    width = 2 * math.pi / math.sqrt(2 * n + 1)
    panels = int(math.ceil(reach / width))
    t, wt = np.polynomial.legendre.leggauss(points_per_panel)
    edges = np.linspace(0.0, reach, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    x = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    w = (half[:, None] * wt[None, :]).ravel()
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def hermite_multiplication_even(g, n: int) -> np.ndarray:
    """Galerkin matrix of an even function ``g`` that is smooth on [0, inf)
    but may have a kink at 0.

    Entries with j + k odd vanish by parity; the rest equal
    2 int_0^inf g psi_j psi_k dx.
    """
    x, w = halfline_rule(n)
    psi = hermite_functions(n, x)
    mat = 2.0 * (psi * (w * g(x))) @ psi.T
    j = np.arange(n)
    mat[(j[:, None] + j[None, :]) % 2 == 1] = 0.0
    return mat


# --------------------------------------------------------------------------
# Operator assembly
# --------------------------------------------------------------------------

def _fd_laplacian(disc: Discretization):
    h = disc.h
    return np.full(disc.n, 2.0 / h ** 2), np.full(disc.n - 1, -1.0 / h ** 2)


def assemble_dilated(spec: om.OperatorSpec, disc: Discretization) -> np.ndarray:
    """Dense matrix of -e^{-2w} d^2 + e^{2w} x^2 + i gamma/(1 + e^{kappa w}|x|^kappa)."""
    w = spec.w
    kin, conf = cmath.exp(-2 * w), cmath.exp(2 * w)
    if disc.scheme is Scheme.HERMITE:
        n, m = disc.n, disc.quad_order
        mat = kin * hermite_kinetic(n) + conf * hermite_position_sq(n)
        mat = mat.astype(complex)
        if spec.gamma != 0 and is_smooth_power(spec.kappa):
            x, _ = _gauss_hermite_scaled(m)
            mat += hermite_multiplication(om.dilated_potential(x, spec), n, m)
        elif spec.gamma != 0:
            mat += hermite_multiplication_even(lambda x: om.dilated_potential(x, spec), n)
    else:
        x = disc.grid()
        d, e = _fd_laplacian(disc)
        mat = kin * tridiag_to_dense(d, e).astype(complex)
        mat[np.diag_indices(disc.n)] += conf * x * x + om.dilated_potential(x, spec)
    if not np.all(np.isfinite(mat)):
        raise ValueError("assembled matrix has non-finite entries")
    return mat


@dataclass(frozen=True)
class Tridiagonal:
    """Real symmetric tridiagonal matrix with the grid it lives on."""

    diag: np.ndarray
    off: np.ndarray
    grid: np.ndarray = field(repr=False)

    def to_dense(self) -> np.ndarray:
        return tridiag_to_dense(self.diag, self.off)

    def eigenvalues(self, k: int | None = None) -> np.ndarray:
        return eig_sym_tridiag(self.diag, self.off, k)

    def matvec(self, v) -> np.ndarray:
        out = self.diag * v
        out[:-1] += self.off * v[1:]
        out[1:] += self.off * v[:-1]
        return out


def _schrodinger_fd(potential, disc: Discretization) -> Tridiagonal:
    if disc.scheme is not Scheme.FD:
        raise ValueError("real-part and anharmonic operators need the FD scheme")
    x = disc.grid()
    d, e = _fd_laplacian(disc)
    return Tridiagonal(d + potential(x), e, x)


def assemble_real_part(spec: om.RealPartSpec, disc: Discretization) -> Tridiagonal:
    """-d^2/dx^2 + V(x) for H_gamma(theta)."""
    return _schrodinger_fd(lambda x: om.real_part_potential(x, spec), disc)


def assemble_anharmonic(spec: om.AnharmonicSpec, disc: Discretization) -> Tridiagonal:
    """-d^2/dx^2 + alpha |x|^kappa."""
    return _schrodinger_fd(lambda x: om.anharmonic_potential(x, spec), disc)


def ground_state_width(kappa: float, alpha: float) -> float:
    """Length scale alpha^{-1/(kappa+2)} of the K_alpha ground state (capped at 1)."""
    if alpha <= 0:
        return 1.0
    return min(1.0, alpha ** (-1.0 / (kappa + 2.0)))


def default_fd(kappa: float, alpha: float, lambda_target: float | None = None,
               points_per_width: int = 100, h_max: float = 0.02) -> Discretization:
    """Starting FD grid for a real-part or anharmonic ground-state solve.

    box = max(8, 40 alpha^{-1/(kappa+2)}, 1.5 sqrt(lambda_target)); the
    spacing resolves the ground-state width with ``points_per_width`` nodes.
    """
    if lambda_target is None:
        lambda_target = 1.0 + max(alpha, 0.0) ** (2.0 / (kappa + 2.0))
    box = 8.0
    if alpha > 0:
        box = max(box, 40.0 * alpha ** (-1.0 / (kappa + 2.0)))
    box = max(box, 1.5 * math.sqrt(lambda_target))
    h = min(h_max, ground_state_width(kappa, alpha) / points_per_width)
    n = int(math.ceil(2 * box / h)) - 1
    return Discretization.fd(n, box)


# --------------------------------------------------------------------------
# IMS cutoffs
# --------------------------------------------------------------------------

def smoothstep(t):
    """Quintic s(t) = 6t^5 - 15t^4 + 10t^3 clipped to [0, 1], and s'(t)."""
    t = np.clip(t, 0.0, 1.0)
    s = t ** 3 * (10.0 + t * (-15.0 + 6.0 * t))
    ds = 30.0 * t * t * (1.0 - t) ** 2
    return s, ds


def phi(x):
    """Cutoff profile: 1 on |x| <= 1, 0 on |x| >= 2, C^2 in between."""
    s, _ = smoothstep(np.abs(x) - 1.0)
    return 1.0 - s


PHI_MAX_SLOPE = 30.0 / 16.0  # max of s' on [0, 1], at t = 1/2


@dataclass(frozen=True)
class CutoffProfile:
    """J(x) = Phi(alpha^nu x) and J~ = sqrt(1 - J^2) sampled on ``grid``."""

    nu: float
    alpha: float
    grid: np.ndarray = field(repr=False)
    J: np.ndarray = field(repr=False)
    Jt: np.ndarray = field(repr=False)
    dJ: np.ndarray = field(repr=False)
    dJt: np.ndarray = field(repr=False)
    phi_kind: str = "quintic_smoothstep"


def build_cutoffs(alpha: float, nu: float, grid) -> CutoffProfile:
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if not nu > 0:
        raise ValueError(f"nu must be positive, got {nu}")
    grid = np.asarray(grid, dtype=float)
    scale = alpha ** nu
    y = scale * grid
    sign = np.sign(y)
    s, ds = smoothstep(np.abs(y) - 1.0)
    J = 1.0 - s
    dJ = -scale * sign * ds
    # 1 - J^2 = s (2 - s); derivative of its square root written to avoid 0/0
    rad = s * (2.0 - s)
    Jt = np.sqrt(rad)
    dJt = np.zeros_like(grid)
    pos = rad > 0
    dJt[pos] = scale * sign[pos] * ds[pos] * (1.0 - s[pos]) / Jt[pos]
    return CutoffProfile(nu=nu, alpha=alpha, grid=grid, J=J, Jt=Jt, dJ=dJ, dJt=dJt)
