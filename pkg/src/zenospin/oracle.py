"""Brute-force evolution by explicit 2x2 products.

Independent of the closed forms in :mod:`zenospin.dynamics` except for the
free propagator ``U0`` itself, which is checked separately against a matrix
exponential.  States are vectorized over an array of detunings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .dynamics import PROJECT_UP, Z_PULSE, Propagator2, SpinParams, one_period_propagator

# sequences longer than this are accumulated in double-double arithmetic
COMPENSATE_ABOVE = 10_000


@dataclass(frozen=True)
class Evolve:
    duration: float

    def __post_init__(self) -> None:
        if self.duration < 0:
            raise ValueError(f"negative duration {self.duration}")


@dataclass(frozen=True)
class ZPulse:
    pass


@dataclass(frozen=True)
class Project:
    pass


Step = Union[Evolve, ZPulse, Project]
PulseSequence = Sequence[Step]


@dataclass(frozen=True)
class SpinState:
    """Amplitudes on ``|up>`` and ``|down>``; arrays when evolved as an ensemble."""

    up: np.ndarray
    down: np.ndarray

    @classmethod
    def spin_up(cls, shape: tuple[int, ...] = ()) -> SpinState:
        return cls(np.ones(shape, dtype=complex), np.zeros(shape, dtype=complex))

    @property
    def norm_sq(self) -> np.ndarray:
        return np.abs(self.up) ** 2 + np.abs(self.down) ** 2


def free_sequence(t: float) -> list[Step]:
    return [Evolve(t)]


def modulation_sequence(tau: float, n: int) -> list[Step]:
    return [Evolve(tau), ZPulse()] * n


def measurement_sequence(tau: float, n: int) -> list[Step]:
    return [Evolve(tau), Project()] * n


def mixed_sequence(tau: float, n: int) -> list[Step]:
    """``n`` elementary pulses alternating Z then P; odd ``n`` ends on a Z pulse."""
    seq: list[Step] = [Evolve(tau), ZPulse(), Evolve(tau), Project()] * (n // 2)
    if n % 2:
        seq += [Evolve(tau), ZPulse()]
    return seq


def cycle_operator(kind: str, spin: SpinParams, tau: float) -> Propagator2:
    """One-period operator: ``Z U0`` (mod), ``P U0`` (meas) or ``P U0 Z U0`` (mix)."""
    u0 = one_period_propagator(spin, tau).as_matrix()
    if kind == "mod":
        m = Z_PULSE @ u0
    elif kind == "meas":
        m = PROJECT_UP @ u0
    elif kind == "mix":
        m = PROJECT_UP @ u0 @ Z_PULSE @ u0
    else:
        raise ValueError(f"unknown cycle kind {kind!r}")
    return Propagator2.from_matrix(m)


def repeated_product(step: np.ndarray, n: Iterable[int] | np.ndarray) -> np.ndarray:
    """``step**n`` by ``n`` sequential left multiplications, batched.

    ``step`` has shape ``(B, 2, 2)`` and ``n`` shape ``(B,)``; batch members
    stop accumulating once their own count is reached.
    """
    step = np.asarray(step, dtype=complex)
    n = np.asarray(n, dtype=int)
    acc = np.broadcast_to(np.eye(2, dtype=complex), step.shape).copy()
    for k in range(int(n.max(initial=0))):
        active = n > k
        acc[active] = step[active] @ acc[active]
    return acc


# error-free transformations for the compensated path

_SPLITTER = 134217729.0  # 2**27 + 1


def _two_sum(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _split(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def _two_prod(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    return p, al * bl - (((p - ah * bh) - al * bh) - ah * bl)


def _dot2(coeffs: list[np.ndarray], hi: list[np.ndarray], lo: list[np.ndarray]):
    # sum_i coeffs[i] * (hi[i] + lo[i]) carried to ~double-double accuracy
    s = np.zeros(np.broadcast(coeffs[0], hi[0]).shape)
    c = np.zeros_like(s)
    for a, h, l in zip(coeffs, hi, lo):
        p, e = _two_prod(a, h)
        s, q = _two_sum(s, p)
        c = c + (q + e + a * l)
    return _two_sum(s, c)


class _Accumulator:
    """State as real/imag parts of (up, down), each held as hi + lo."""

    def __init__(self, state: SpinState) -> None:
        up = np.asarray(state.up, dtype=complex)
        down = np.asarray(state.down, dtype=complex)
        self.hi = [up.real.copy(), up.imag.copy(), down.real.copy(), down.imag.copy()]
        self.lo = [np.zeros_like(h) for h in self.hi]

    def apply(self, u: Propagator2) -> None:
        a, b, c, d = (np.asarray(x, dtype=complex) for x in (u.u11, u.u12, u.u21, u.u22))
        hi, lo = self.hi, self.lo
        re_up = _dot2([a.real, -a.imag, b.real, -b.imag], hi, lo)
        im_up = _dot2([a.imag, a.real, b.imag, b.real], hi, lo)
        re_dn = _dot2([c.real, -c.imag, d.real, -d.imag], hi, lo)
        im_dn = _dot2([c.imag, c.real, d.imag, d.real], hi, lo)
        self.hi = [re_up[0], im_up[0], re_dn[0], im_dn[0]]
        self.lo = [re_up[1], im_up[1], re_dn[1], im_dn[1]]

    def flip_down(self) -> None:
        for part in (self.hi, self.lo):
            part[2], part[3] = -part[2], -part[3]

    def clear_down(self) -> None:
        for part in (self.hi, self.lo):
            part[2], part[3] = np.zeros_like(part[2]), np.zeros_like(part[3])

    def down_population(self) -> np.ndarray:
        re = self.hi[2] + self.lo[2]
        im = self.hi[3] + self.lo[3]
        return re * re + im * im

    def state(self) -> SpinState:
        h, l = self.hi, self.lo
        return SpinState((h[0] + l[0]) + 1j * (h[1] + l[1]), (h[2] + l[2]) + 1j * (h[3] + l[3]))


class _Plain:
    def __init__(self, state: SpinState) -> None:
        self.up = np.array(state.up, dtype=complex)
        self.down = np.array(state.down, dtype=complex)

    def apply(self, u: Propagator2) -> None:
        self.up, self.down = u.u11 * self.up + u.u12 * self.down, u.u21 * self.up + u.u22 * self.down

    def flip_down(self) -> None:
        self.down = -self.down

    def clear_down(self) -> None:
        self.down = np.zeros_like(self.down)

    def down_population(self) -> np.ndarray:
        return np.abs(self.down) ** 2

    def state(self) -> SpinState:
        return SpinState(self.up, self.down)


def _run(seq: PulseSequence, spin: SpinParams, initial: SpinState | None, compensated: bool | None):
    if initial is None:
        initial = SpinState.spin_up(np.shape(spin.omega))
    if compensated is None:
        compensated = len(seq) > COMPENSATE_ABOVE
    acc = _Accumulator(initial) if compensated else _Plain(initial)
    cache: dict[float, Propagator2] = {}
    lost = []
    for step in seq:
        if isinstance(step, Evolve):
            u = cache.get(step.duration)
            if u is None:
                u = cache[step.duration] = one_period_propagator(spin, step.duration)
            acc.apply(u)
        elif isinstance(step, ZPulse):
            acc.flip_down()
        elif isinstance(step, Project):
            lost.append(acc.down_population())
            acc.clear_down()
        else:
            raise TypeError(f"unknown step {step!r}")
    return acc, lost


def evolve(
    seq: PulseSequence,
    spin: SpinParams,
    initial: SpinState | None = None,
    *,
    compensated: bool | None = None,
) -> SpinState:
    """Apply ``seq`` in time order to ``initial`` (default: all spins up).

    Projections keep the spin-up branch without renormalizing, so the squared
    norm is the survival probability.  ``compensated`` defaults to on for
    sequences longer than ``COMPENSATE_ABOVE`` steps.
    """
    acc, _ = _run(seq, spin, initial, compensated)
    return acc.state()


def evolve_populations(
    seq: PulseSequence, spin: SpinParams, *, compensated: bool | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Per-spin (survival, transition) for a spin starting up.

    The transition is accumulated from the populations removed at each
    projection plus the final spin-down population, never as ``1 - survival``.
    """
    acc, lost = _run(seq, spin, None, compensated)
    st = acc.state()
    survival = np.abs(st.up) ** 2
    transition = np.abs(st.down) ** 2
    if lost:
        transition = np.sum(np.stack(lost + [transition]), axis=0)
    return survival, transition


def ensemble_evolve(seq: PulseSequence, omegas: np.ndarray, g: float) -> tuple[float, float]:
    """Ensemble-mean (survival, transition), reduced with exactly rounded sums."""
    omegas = np.asarray(omegas, dtype=float)
    if omegas.size < 1:
        raise ValueError("empty ensemble")
    survival, transition = evolve_populations(seq, SpinParams(omegas, g))
    k = omegas.size
    return math.fsum(survival.ravel()) / k, math.fsum(transition.ravel()) / k
