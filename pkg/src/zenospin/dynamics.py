"""Single-spin closed forms.

One spin with detuning ``omega`` and transverse coupling ``g`` evolves under
``H = (omega/2) sigma_z + g sigma_x``.  Every function here broadcasts over
numpy arrays of ``omega`` so the same code serves one spin, an ensemble, or a
quadrature node set.

Frequencies are in units of the spectral width Gamma, times in 1/Gamma.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

ArrayLike = npt.ArrayLike

Z_PULSE = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
PROJECT_UP = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)


@dataclass(frozen=True)
class SpinParams:
    """Detuning and transverse coupling of one spin (or an array of spins).

    Only ``g**2`` enters any observable, so negative couplings are rejected
    rather than silently folded.
    """

    omega: ArrayLike
    g: ArrayLike

    def __post_init__(self) -> None:
        if np.any(np.asarray(self.g) < 0):
            raise ValueError(f"g must be >= 0, got {self.g}")

    @property
    def rabi(self) -> np.ndarray:
        """Omega = sqrt((omega/2)^2 + g^2), evaluated without squaring overflow."""
        return np.hypot(np.asarray(self.omega, dtype=float) / 2.0, self.g)


@dataclass(frozen=True)
class Propagator2:
    """Entries of a 2x2 complex matrix; each entry may be an array."""

    u11: np.ndarray
    u12: np.ndarray
    u21: np.ndarray
    u22: np.ndarray

    def as_matrix(self) -> np.ndarray:
        """Stack into shape ``(..., 2, 2)``."""
        u11, u12, u21, u22 = np.broadcast_arrays(self.u11, self.u12, self.u21, self.u22)
        top = np.stack([u11, u12], axis=-1)
        bottom = np.stack([u21, u22], axis=-1)
        return np.stack([top, bottom], axis=-2)

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> Propagator2:
        m = np.asarray(m, dtype=complex)
        return cls(m[..., 0, 0], m[..., 0, 1], m[..., 1, 0], m[..., 1, 1])

    def unitarity_defect(self) -> np.ndarray:
        """Max-abs entry of ``U^dagger U - 1``."""
        m = self.as_matrix()
        prod = np.swapaxes(m.conj(), -1, -2) @ m
        return np.abs(prod - np.eye(2)).max(axis=(-2, -1))


def _amplitude(rabi: np.ndarray, g: float, tau: ArrayLike) -> np.ndarray:
    # (g/Omega) sin(Omega tau), finite at Omega = 0
    tau = np.asarray(tau, dtype=float)
    return g * tau * np.sinc(rabi * tau / np.pi)


def _detuning_ratio(spin: SpinParams, rabi: np.ndarray) -> np.ndarray:
    # omega / (2 Omega); zero when Omega = 0 (which forces omega = 0)
    half = np.asarray(spin.omega, dtype=float) / 2.0
    return np.divide(half, rabi, out=np.zeros(np.broadcast(half, rabi).shape), where=rabi > 0)


def one_period_propagator(spin: SpinParams, tau: ArrayLike) -> Propagator2:
    """Free propagator ``U0`` over one delay ``tau``.

    Uses the convention ``U11 = U22* = cos(Omega tau) - i (omega/2Omega) sin(Omega tau)``
    and ``U12 = U21 = i (g/Omega) sin(Omega tau)``.  This equals
    ``expm(-i tau ((omega/2) sigma_z - g sigma_x))``; flipping the sign of ``g``
    is a basis change by ``Z`` and leaves every population unchanged.
    """
    if np.any(np.asarray(tau) < 0):
        raise ValueError("tau must be >= 0")
    rabi = spin.rabi
    phase = rabi * np.asarray(tau, dtype=float)
    u11 = np.cos(phase) - 1j * _detuning_ratio(spin, rabi) * np.sin(phase)
    u12 = 1j * _amplitude(rabi, spin.g, tau)
    return Propagator2(u11, u12, u12, np.conj(u11))


def single_delay_transition(spin: SpinParams, tau: ArrayLike) -> np.ndarray:
    """``x = (g/Omega)^2 sin^2(Omega tau)``, the spin-flip probability in one delay."""
    return _amplitude(spin.rabi, spin.g, tau) ** 2


def p0_single(spin: SpinParams, t: ArrayLike) -> np.ndarray:
    """Free-evolution transition probability ``(g/Omega)^2 sin^2(Omega t)``."""
    return single_delay_transition(spin, t)


def sin2_lambda(spin: SpinParams, tau: ArrayLike) -> np.ndarray:
    """``sin^2(lambda) = 1 - (omega/2Omega)^2 sin^2(Omega tau)``.

    Evaluated as ``cos^2(Omega tau) + x`` so it never cancels; the result lies
    in ``[x, 1]``.
    """
    rabi = spin.rabi
    return np.cos(rabi * np.asarray(tau, dtype=float)) ** 2 + _amplitude(rabi, spin.g, tau) ** 2


def modulation_angle(spin: SpinParams, tau: ArrayLike) -> np.ndarray:
    """Angle ``lambda`` in ``[0, pi]`` with ``cos(lambda) = (omega/2Omega) sin(Omega tau)``."""
    rabi = spin.rabi
    cos_l = _detuning_ratio(spin, rabi) * np.sin(rabi * np.asarray(tau, dtype=float))
    return np.arctan2(np.sqrt(sin2_lambda(spin, tau)), cos_l)


def pmod_single(spin: SpinParams, tau: ArrayLike, n: ArrayLike) -> np.ndarray:
    """Transition probability after ``n`` periods of (delay ``tau``, Z pulse).

    ``x sin^2(n lambda) / sin^2(lambda)``, computed as
    ``[x / sin^2(lambda)] * sin^2(n lambda)``.  The bracket is bounded by 1 and
    vanishes with ``x``, so the removable point ``sin(lambda) -> 0`` needs no
    special branch.  Valid for every integer ``n`` (the Z pulse contributes a
    global phase ``i**n`` to ``(i Z U0)**n``), and for real ``n`` it gives the
    smooth interpolation used in crossing searches.
    """
    n = np.asarray(n, dtype=float)
    if np.any(n < 0):
        raise ValueError("n must be >= 0")
    x = single_delay_transition(spin, tau)
    s2 = sin2_lambda(spin, tau)
    weight = np.divide(x, s2, out=np.zeros(np.broadcast(x, s2).shape), where=s2 > 0)
    lam = modulation_angle(spin, tau)
    return weight * np.sin(n * lam) ** 2


def _power_transition(x: np.ndarray, cycles: ArrayLike) -> np.ndarray:
    # 1 - (1 - x)**cycles without cancellation when cycles * x is tiny
    x = np.asarray(x, dtype=float)
    cycles = np.asarray(cycles, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_keep = np.log1p(-np.minimum(x, 1.0))
        out = -np.expm1(cycles * log_keep)
    return np.where(cycles == 0, 0.0, np.where(x >= 1.0, 1.0, out))


def pmeas_single_transition(spin: SpinParams, tau: ArrayLike, n: ArrayLike) -> np.ndarray:
    """``1 - [1 - x]^n`` for ``n`` periods of (delay ``tau``, projection)."""
    return _power_transition(single_delay_transition(spin, tau), n)


def pmeas_single_survival(spin: SpinParams, tau: ArrayLike, n: ArrayLike) -> np.ndarray:
    """Survival ``[1 - (g/Omega)^2 sin^2(Omega tau)]^n`` under periodic projections."""
    if np.any(np.asarray(n) < 0):
        raise ValueError("n must be >= 0")
    return 1.0 - pmeas_single_transition(spin, tau, n)


def mix_cycle_transition(spin: SpinParams, tau: ArrayLike) -> np.ndarray:
    """Loss ``(omega^2 g^2 / Omega^4) sin^4(Omega tau)`` in one (U0, Z, U0, P) cycle."""
    rabi = spin.rabi
    tau = np.asarray(tau, dtype=float)
    ratio = _detuning_ratio(spin, rabi)
    return 4.0 * ratio**2 * _amplitude(rabi, spin.g, tau) ** 2 * np.sin(rabi * tau) ** 2


def _check_even(n: ArrayLike) -> None:
    n = np.asarray(n)
    if np.any(n < 0) or np.any(np.mod(n, 2) != 0):
        raise ValueError("mixed closed form needs an even pulse count >= 0")


def pmix_single_transition(
    spin: SpinParams, tau: ArrayLike, n: ArrayLike, *, allow_real: bool = False
) -> np.ndarray:
    """``1 - (1 - y)^(n/2)`` with ``y`` the per-cycle loss.

    ``n`` counts elementary pulses, two per cycle, so the closed form needs
    even ``n``.  ``allow_real`` lifts that check for root finding on a
    continuous pulse count.
    """
    if not allow_real:
        _check_even(n)
    return _power_transition(mix_cycle_transition(spin, tau), np.asarray(n, dtype=float) / 2.0)


def pmix_single_survival(spin: SpinParams, tau: ArrayLike, n: ArrayLike) -> np.ndarray:
    """Survival ``[1 - (omega^2 g^2/Omega^4) sin^4(Omega tau)]^(n/2)``; even ``n`` only."""
    return 1.0 - pmix_single_transition(spin, tau, n)
