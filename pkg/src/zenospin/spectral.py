"""Truncated spectral densities of the random detunings.

Three shapes, each cut off at ``+-omega_c`` and normalized on that window:

* Gaussian     ``C exp(-(w - w_m)^2 / (2 Gamma^2))``
* Lorentzian   ``C / ((w - w_m)^2 + Gamma^2)``
* exponential  ``C exp(-|w - w_m| / Gamma)``
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special

from .quadrature import DEFAULT_BUDGET, QuadResult, adaptive_panels, initial_edges

DEFAULT_CUTOFF_FACTOR = 100.0
QUANTILE_XTOL = 1e-12


class DensityKind(enum.Enum):
    GAUSSIAN = "gaussian"
    LORENTZIAN = "lorentzian"
    EXPONENTIAL = "exponential"


def _kernel(kind: DensityKind, z: np.ndarray) -> np.ndarray:
    if kind is DensityKind.GAUSSIAN:
        return np.exp(-0.5 * z * z)
    if kind is DensityKind.LORENTZIAN:
        return 1.0 / (z * z + 1.0)
    return np.exp(-np.abs(z))


def _kernel_scale(kind: DensityKind, gamma: float) -> float:
    # rho = C * scale * kernel(z); the Lorentzian keeps C / ((w - w_m)^2 + Gamma^2)
    return gamma**-2 if kind is DensityKind.LORENTZIAN else 1.0


def _antiderivative(kind: DensityKind, z: np.ndarray) -> np.ndarray:
    # of the kernel in the reduced variable z = (w - w_m) / Gamma
    if kind is DensityKind.GAUSSIAN:
        return math.sqrt(2.0 * math.pi) * special.ndtr(z)
    if kind is DensityKind.LORENTZIAN:
        return np.arctan(z)
    return np.sign(z) * -np.expm1(-np.abs(z))


@dataclass(frozen=True)
class SpectralDensity:
    """An immutable, normalized density; build it with :func:`normalize`."""

    kind: DensityKind
    omega_m: float
    gamma: float
    omega_c: float
    c_norm: float

    def __call__(self, omega) -> np.ndarray:
        return density_at(self, omega)

    @property
    def support(self) -> tuple[float, float]:
        return -self.omega_c, self.omega_c

    def _reduced(self, omega) -> np.ndarray:
        return (np.asarray(omega, dtype=float) - self.omega_m) / self.gamma

    def cdf(self, omega) -> np.ndarray:
        """Truncated CDF, clipped to ``[0, 1]`` outside the support."""
        lo, hi = self.support
        w = np.clip(np.asarray(omega, dtype=float), lo, hi)
        a0 = _antiderivative(self.kind, self._reduced(lo))
        scale = self.c_norm * _kernel_scale(self.kind, self.gamma) * self.gamma
        return np.clip(
            scale * (_antiderivative(self.kind, self._reduced(w)) - a0), 0.0, 1.0
        )

    def label(self) -> str:
        return self.kind.value


def normalize(
    kind: DensityKind | str,
    omega_m: float = 0.0,
    gamma: float = 1.0,
    omega_c: float | None = None,
) -> SpectralDensity:
    """Build a density normalized on ``[-omega_c, omega_c]``.

    ``omega_c`` defaults to ``100 * gamma``.  The constant comes from the
    closed-form antiderivative of each kernel.
    """
    kind = DensityKind(kind)
    if not gamma > 0:
        raise ValueError(f"gamma must be > 0, got {gamma}")
    if omega_c is None:
        omega_c = DEFAULT_CUTOFF_FACTOR * gamma
    if not omega_c > 0:
        raise ValueError(f"omega_c must be > 0, got {omega_c}")
    za = (-omega_c - omega_m) / gamma
    zb = (omega_c - omega_m) / gamma
    mass = _kernel_scale(kind, gamma) * gamma * float(_antiderivative(kind, np.float64(zb)) - _antiderivative(kind, np.float64(za)))
    if not mass > 0:
        raise ValueError("density has no mass inside the cutoff window")
    return SpectralDensity(kind, float(omega_m), float(gamma), float(omega_c), 1.0 / mass)


def density_at(d: SpectralDensity, omega) -> np.ndarray:
    """``C * kernel`` inside ``[-omega_c, omega_c]`` and 0 outside."""
    w = np.asarray(omega, dtype=float)
    inside = np.abs(w) <= d.omega_c
    if d.kind is DensityKind.LORENTZIAN:
        val = d.c_norm / ((w - d.omega_m) ** 2 + d.gamma**2)
    else:
        val = d.c_norm * _kernel(d.kind, d._reduced(w))
    return np.where(inside, val, 0.0)


@dataclass(frozen=True)
class SpectralMoments:
    rho0: float
    b_sq: float


def integrate_expectation(
    d: SpectralDensity,
    f: Callable[[np.ndarray], np.ndarray],
    *,
    rtol: float = 1e-8,
    atol: float = 0.0,
    oscillation_width: float | None = None,
    breakpoints=(),
    budget: int = DEFAULT_BUDGET,
    full_output: bool = False,
):
    """Adaptive quadrature of ``int rho(w) f(w) dw`` over the truncated support.

    ``oscillation_width`` caps the initial panel width so that an integrand
    oscillating on that scale is never straddled by one panel before
    refinement starts.  Panels also break at ``0`` and at the peak.

    Raises :class:`~zenospin.quadrature.QuadratureError` when the evaluation
    budget runs out; callers fall back to a discrete ensemble.
    """
    width = 0.5 * d.gamma
    if oscillation_width is not None and oscillation_width > 0:
        width = min(width, oscillation_width)
    lo, hi = d.support
    edges = initial_edges(lo, hi, (0.0, d.omega_m, *breakpoints), width)
    res: QuadResult = adaptive_panels(
        lambda w: density_at(d, w) * f(w), edges, rtol=rtol, atol=atol, budget=budget
    )
    return res if full_output else res.value


@functools.lru_cache(maxsize=64)
def moments(d: SpectralDensity) -> SpectralMoments:
    """``rho(0)`` and ``b^2 = int w^2 rho(w) dw`` (by quadrature)."""
    b_sq = integrate_expectation(d, lambda w: w * w, rtol=1e-12)
    return SpectralMoments(float(density_at(d, 0.0)), float(b_sq))


@dataclass(frozen=True, eq=False)
class EnsembleSpec:
    """A discrete set of detunings, optionally remembering the density it came from."""

    omegas: np.ndarray
    density: SpectralDensity | None = None

    @property
    def k_count(self) -> int:
        return int(self.omegas.size)

    @classmethod
    def explicit(cls, omegas) -> EnsembleSpec:
        arr = np.asarray(omegas, dtype=float).ravel()
        if arr.size < 1:
            raise ValueError("empty ensemble")
        return cls(arr)

    def mean(self, values) -> float:
        """Exactly rounded ensemble average of per-spin ``values``."""
        return math.fsum(np.asarray(values, dtype=float).ravel().tolist()) / self.k_count

    def b_sq(self) -> float:
        return self.mean(self.omegas**2)


def quantile_points(d: SpectralDensity, u: np.ndarray, xtol: float = QUANTILE_XTOL) -> np.ndarray:
    """Invert the truncated CDF by vectorized bisection to ``xtol``."""
    u = np.asarray(u, dtype=float)
    lo = np.full(u.shape, -d.omega_c)
    hi = np.full(u.shape, d.omega_c)
    iterations = math.ceil(math.log2(2.0 * d.omega_c / xtol))
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        below = d.cdf(mid) < u
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


@functools.lru_cache(maxsize=16)
def quantile_sample(d: SpectralDensity, k_count: int) -> EnsembleSpec:
    """Deterministic ensemble ``w_k = F^-1((k - 1/2) / K)``, ``k = 1..K`` (sorted)."""
    if k_count < 1:
        raise ValueError(f"k_count must be >= 1, got {k_count}")
    u = (np.arange(1, k_count + 1) - 0.5) / k_count
    omegas = quantile_points(d, u)
    omegas.setflags(write=False)
    return EnsembleSpec(omegas, d)
