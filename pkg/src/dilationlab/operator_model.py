"""Closed-form pieces of the operator family

    L_gamma^(w) = -e^{-2w} d^2/dx^2 + e^{2w} x^2 + i gamma / (1 + e^{kappa w} |x|^kappa)

and of the real part H_gamma(theta) of the rotated operator.  Everything here
is a pure function of its arguments; no discretization happens in this module.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

# Margin subtracted from pi/4 so that cos(2 theta) stays bounded away from 0.
EPS_CLAMP = 1e-2


def abs_pow(x, kappa: float):
    """|x|**kappa evaluated as exp(kappa * log|x|), exactly 0 at x = 0."""
    ax = np.abs(np.asarray(x, dtype=float))
    out = np.zeros_like(ax)
    nz = ax > 0
    out[nz] = np.exp(kappa * np.log(ax[nz]))
    if np.ndim(x) == 0:
        return float(out)
    return out


def eval_f(x, kappa: float):
    """The profile f(x) = 1 / (1 + |x|^kappa); values lie in (0, 1]."""
    if kappa <= 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    return 1.0 / (1.0 + abs_pow(x, kappa))


def theta_max(kappa: float) -> float:
    """Largest admissible dilation angle.

    The analyticity strip has half-width pi*min(1/(2 kappa), 1/2); it is
    intersected with theta < pi/4 - EPS_CLAMP so that cos(2 theta) > 0.
    """
    if kappa <= 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    strip = math.pi * min(1.0 / (2.0 * kappa), 0.5)
    return min(strip, math.pi / 4 - EPS_CLAMP)


@dataclass(frozen=True)
class OperatorSpec:
    """Parameters (gamma, kappa, w) of the dilated operator, w = u + i theta."""

    gamma: float
    kappa: float
    w: complex = 0j

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        object.__setattr__(self, "w", complex(self.w))
        if not abs(self.w.imag) < theta_max(self.kappa):
            raise ValueError(
                f"|Im w| = {abs(self.w.imag):.6g} must be below "
                f"theta_max({self.kappa}) = {theta_max(self.kappa):.6g}")

    @property
    def u(self) -> float:
        return self.w.real

    @property
    def theta(self) -> float:
        return self.w.imag

    def with_w(self, w: complex) -> "OperatorSpec":
        return OperatorSpec(self.gamma, self.kappa, w)


@dataclass(frozen=True)
class RealPartSpec:
    """Parameters of H_gamma(theta).

    Negative couplings are stored as (-gamma, -theta); H is invariant under
    that flip, so every downstream computation sees gamma >= 0.
    """

    gamma: float
    kappa: float
    theta: float

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if not abs(self.theta) < theta_max(self.kappa):
            raise ValueError(
                f"|theta| = {abs(self.theta):.6g} must be below "
                f"theta_max({self.kappa}) = {theta_max(self.kappa):.6g}")
        if self.gamma < 0:
            object.__setattr__(self, "gamma", -self.gamma)
            object.__setattr__(self, "theta", -self.theta)

    @property
    def alpha(self) -> float:
        return effective_alpha(self)


@dataclass(frozen=True)
class AnharmonicSpec:
    """K_alpha = -d^2/dx^2 + alpha |x|^kappa."""

    alpha: float
    kappa: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")


def dilated_potential(x, spec: OperatorSpec):
    """i gamma / (1 + e^{kappa w} |x|^kappa).

    Re e^{kappa w} > 0 inside the strip, so the denominator never vanishes.
    """
    scale = cmath.exp(spec.kappa * spec.w)
    return 1j * spec.gamma / (1.0 + scale * abs_pow(x, spec.kappa))


def effective_alpha(spec: RealPartSpec) -> float:
    """alpha = gamma sin(kappa theta) / cos(2 theta)."""
    return spec.gamma * math.sin(spec.kappa * spec.theta) / math.cos(2 * spec.theta)


def real_part_potential(x, spec: RealPartSpec):
    """V(x) = x^2 + alpha |x|^kappa / |1 + e^{i kappa theta} |x|^kappa|^2."""
    y = abs_pow(x, spec.kappa)
    c = math.cos(spec.kappa * spec.theta)
    # |1 + e^{i k theta} y|^2 expanded; avoids complex arithmetic on the grid
    denom = 1.0 + 2.0 * c * y + y * y
    x = np.asarray(x, dtype=float) if np.ndim(x) else float(x)
    return x * x + effective_alpha(spec) * y / denom


def anharmonic_potential(x, spec: AnharmonicSpec):
    return spec.alpha * abs_pow(x, spec.kappa)


def default_theta(kappa: float) -> float:
    """Fixed working angle: half of theta_max."""
    return 0.5 * theta_max(kappa)
