"""Ensemble-level transition probabilities under the four evolutions.

Each protocol maps to a per-spin transition probability from
:mod:`zenospin.dynamics`; the ensemble value is either a quadrature
expectation over a :class:`~zenospin.spectral.SpectralDensity` or an exact
average over an :class:`~zenospin.spectral.EnsembleSpec`.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from . import dynamics as dyn
from .oracle import evolve_populations, mixed_sequence
from .quadrature import QuadratureError
from .spectral import (
    EnsembleSpec,
    SpectralDensity,
    SpectralMoments,
    integrate_expectation,
    moments,
    quantile_sample,
)

log = logging.getLogger(__name__)

FALLBACK_K = 100_000

Source = Union[SpectralDensity, EnsembleSpec]


class ProtocolKind(enum.Enum):
    FREE = "free"
    MOD = "mod"
    MEAS = "meas"
    MIX = "mix"


@dataclass(frozen=True)
class Protocol:
    """Uniform pulse train: ``n_pulses`` pulses spaced by ``tau``; ``t = n_pulses * tau``.

    ``continuous`` continues the closed forms to real pulse counts (crossing
    searches); otherwise an odd mixed count runs the explicit sequence.
    """

    kind: ProtocolKind
    tau: float
    n_pulses: float
    continuous: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ProtocolKind(self.kind))
        if self.tau < 0 or self.n_pulses < 0:
            raise ValueError("tau and n_pulses must be >= 0")

    @property
    def t(self) -> float:
        return self.n_pulses * self.tau

    @property
    def integral_count(self) -> bool:
        return float(self.n_pulses).is_integer()


@dataclass(frozen=True)
class TransitionResult:
    p_prime: float
    p_free: float
    ratio: float
    method: str


def _mix_odd(spin: dyn.SpinParams, tau: float, n: int) -> np.ndarray:
    # no closed form past an unpaired Z pulse: run the explicit sequence
    return evolve_populations(mixed_sequence(tau, n), spin)[1]


def per_spin_transition(p: Protocol, omega: np.ndarray, g: float) -> np.ndarray:
    """Per-spin transition probability for protocol ``p`` at detunings ``omega``."""
    spin = dyn.SpinParams(omega, g)
    if p.kind is ProtocolKind.FREE:
        return dyn.p0_single(spin, p.t)
    if p.kind is ProtocolKind.MOD:
        return dyn.pmod_single(spin, p.tau, p.n_pulses)
    if p.kind is ProtocolKind.MEAS:
        return dyn.pmeas_single_transition(spin, p.tau, p.n_pulses)
    n = p.n_pulses
    if not p.continuous and p.integral_count and int(n) % 2 == 1:
        return _mix_odd(spin, p.tau, int(n))
    return dyn.pmix_single_transition(spin, p.tau, n, allow_real=p.continuous)


def oscillation_width(p: Protocol) -> float | None:
    """Half an oscillation period of the integrand in ``omega``.

    ``sin^2(n lambda)`` and ``sin^2(Omega t)`` both advance by at most
    ``t/2`` radians per unit detuning, one period being ``2 pi / t``.
    """
    return math.pi / p.t if p.t > 0 else None


def expectation(
    p: Protocol,
    source: Source,
    g: float,
    *,
    rtol: float = 1e-8,
    fallback_k: int = FALLBACK_K,
) -> tuple[float, str]:
    """Ensemble value of ``p`` and the route that produced it."""
    if isinstance(source, EnsembleSpec):
        return source.mean(per_spin_transition(p, source.omegas, g)), f"ensemble({source.k_count})"
    try:
        val = integrate_expectation(
            source,
            lambda w: per_spin_transition(p, w, g),
            rtol=rtol,
            oscillation_width=oscillation_width(p),
        )
        return val, "quadrature"
    except QuadratureError as exc:
        log.warning("quadrature failed for %s (%s); using a %d-spin ensemble", p, exc, fallback_k)
        ens = quantile_sample(source, fallback_k)
        return ens.mean(per_spin_transition(p, ens.omegas, g)), f"ensemble({fallback_k})"


def transition_probability(
    p: Protocol, source: Source, g: float, *, rtol: float = 1e-8, fallback_k: int = FALLBACK_K
) -> TransitionResult:
    """Controlled and free transition probabilities at ``t = n_pulses * tau``.

    The free reference goes through the same route as the controlled value;
    if quadrature falls back to an ensemble for either, both are recomputed on
    that ensemble so the ratio never mixes routes.
    """
    if g <= 0:
        raise ValueError("g must be > 0")
    free = Protocol(ProtocolKind.FREE, p.tau, p.n_pulses)
    p_prime, route = expectation(p, source, g, rtol=rtol, fallback_k=fallback_k)
    p_free, route_free = expectation(free, source, g, rtol=rtol, fallback_k=fallback_k)
    if route != route_free and isinstance(source, SpectralDensity):
        ens = quantile_sample(source, fallback_k)
        p_prime, route = expectation(p, ens, g)
        p_free, _ = expectation(free, ens, g)
    ratio = p_prime / p_free if p_free > 0 else math.nan
    return TransitionResult(p_prime, p_free, ratio, route)


def two_pulse_mod(source: Source, g: float, tau: float) -> float:
    """``<(g^2 w^2 / Omega^4) sin^4(Omega tau)>``: two Z pulses (or one Z then one P)."""
    return _two_pulse(source, g, tau, lambda s: dyn.mix_cycle_transition(s, tau))


def two_pulse_meas(source: Source, g: float, tau: float) -> float:
    """``<x (2 - x)>`` with ``x = (g/Omega)^2 sin^2(Omega tau)``: two projections."""

    def per_spin(s):
        x = dyn.single_delay_transition(s, tau)
        return x * (2.0 - x)

    return _two_pulse(source, g, tau, per_spin)


def _two_pulse(source: Source, g: float, tau: float, per_spin) -> float:
    if g == 0 or tau == 0:
        return 0.0
    if isinstance(source, EnsembleSpec):
        return source.mean(per_spin(dyn.SpinParams(source.omegas, g)))
    return integrate_expectation(
        source, lambda w: per_spin(dyn.SpinParams(w, g)), oscillation_width=math.pi / (2 * tau)
    )


@dataclass(frozen=True)
class AsymptoticRates:
    """Short-delay laws (``tau -> 0``, many pulses).

    ``gamma_mix`` carries the factor 1/2, which the oracle confirms.
    """

    gamma0: float
    gamma_meas: float
    gamma_mix: float
    p_mod_frozen: float
    t_c: float
    tau_c: float
    n_c: float


def asymptotics(g: float, tau: float, t: float, m: SpectralMoments) -> AsymptoticRates:
    if min(g, tau, t, m.b_sq) <= 0:
        raise ValueError("asymptotics need positive g, tau, t and b^2")
    return AsymptoticRates(
        gamma0=2 * math.pi * g * g * m.rho0,
        gamma_meas=g * g * tau,
        gamma_mix=0.5 * m.b_sq * g * g * tau**3,
        p_mod_frozen=0.5 * g * g * tau * tau,
        t_c=1.0 / (m.b_sq * tau),
        tau_c=1.0 / (m.b_sq * t),
        n_c=m.b_sq * t * t,
    )


def small_tau_ratios(tau: float, m: SpectralMoments) -> tuple[float, float]:
    """Predicted ``(p_meas / p0, p_mix / p0)`` for small ``tau``.

    Both use ``p0 = 2 pi g^2 rho(0) t``; the mixed one uses the same 1/2
    convention as :attr:`AsymptoticRates.gamma_mix`.
    """
    if tau <= 0:
        raise ValueError("tau must be > 0")
    meas = tau / (2 * math.pi * m.rho0)
    return meas, 0.5 * m.b_sq * tau * tau * meas


def find_crossings(h: Callable[[float], float], grid: Sequence[float], xtol: float = 1e-6) -> list[float]:
    """Sign changes of ``h`` on ``grid``, each refined by bisection to ``xtol``."""
    grid = np.asarray(grid, dtype=float)
    if grid.size < 2 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing with at least 2 points")
    values = [h(x) for x in grid]
    out = []
    for (a, b), (fa, fb) in zip(zip(grid[:-1], grid[1:]), zip(values[:-1], values[1:])):
        if fa == 0:
            out.append(float(a))
            continue
        if fa * fb > 0 or fb == 0:
            continue
        while b - a > xtol:
            mid = 0.5 * (a + b)
            fm = h(mid)
            if fm == 0:
                a = b = mid
                break
            if (fm > 0) == (fa > 0):
                a, fa = mid, fm
            else:
                b = mid
        out.append(float(0.5 * (a + b)))
    if values[-1] == 0:
        out.append(float(grid[-1]))
    return out


@dataclass(frozen=True)
class Crossing:
    location: float
    nearest_even_n: int | None = None


def crossing_scan(
    methods: tuple[str, str],
    source: Source,
    g: float,
    grid: Sequence[float],
    *,
    axis: str = "tau",
    n_pulses: float | None = None,
    t: float | None = None,
    tau: float | None = None,
    xtol: float = 1e-6,
) -> list[Crossing]:
    """Where ``p'_A = p'_B`` along ``tau`` (fixed ``n_pulses``), ``n`` (fixed
    ``t``) or ``t`` (fixed ``tau``).

    Off the ``tau`` axis the pulse count is continued to real values for root
    finding, and the nearest even integer is reported with each crossing.
    """
    kind_a, kind_b = (ProtocolKind(m) for m in methods)

    if axis == "tau":
        if n_pulses is None:
            raise ValueError("tau scans need n_pulses")

        def make(kind, x):
            return Protocol(kind, x, n_pulses, continuous=True)

    elif axis == "n":
        if t is None:
            raise ValueError("n scans need t")

        def make(kind, x):
            return Protocol(kind, t / x, x, continuous=True)

    elif axis == "t":
        if tau is None:
            raise ValueError("t scans need tau")

        def make(kind, x):
            return Protocol(kind, tau, x / tau, continuous=True)

    else:
        raise ValueError(f"axis must be 'tau', 'n' or 't', not {axis!r}")

    def h(x: float) -> float:
        return expectation(make(kind_a, x), source, g)[0] - expectation(make(kind_b, x), source, g)[0]

    roots = find_crossings(h, grid, xtol)
    if axis == "n":
        return [Crossing(r, 2 * max(1, round(r / 2))) for r in roots]
    if axis == "t":
        return [Crossing(r, 2 * max(1, round(r / tau / 2))) for r in roots]
    return [Crossing(r) for r in roots]


def fit_rate(ts: Sequence[float], ps: Sequence[float]) -> float:
    """Least-squares slope of ``p = rate * t`` through the origin."""
    ts = np.asarray(ts, dtype=float)
    ps = np.asarray(ps, dtype=float)
    return float(ts @ ps / (ts @ ts))


def default_moments(source: Source) -> SpectralMoments:
    if isinstance(source, EnsembleSpec):
        if source.density is None:
            raise ValueError("explicit ensembles have no rho(0); pass moments directly")
        return SpectralMoments(moments(source.density).rho0, source.b_sq())
    return moments(source)
