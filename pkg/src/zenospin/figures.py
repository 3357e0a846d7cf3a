"""Sweep definitions behind the ``figure`` and ``sweep`` commands."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .protocols import Protocol, ProtocolKind, asymptotics, small_tau_ratios, transition_probability
from .spectral import DEFAULT_CUTOFF_FACTOR, DensityKind, SpectralDensity, moments, normalize, quantile_sample

CSV_COLUMNS = ("method", "dist", "omega_m", "gamma", "g", "tau", "n_pulses", "t", "p_prime", "p_free", "ratio", "route")
ROUTES = ("quadrature", "ensemble", "both")


@dataclass(frozen=True)
class Grid:
    axis: str  # "tau" | "n" | "t"
    start: float
    stop: float
    points: int
    log: bool = False

    @classmethod
    def parse(cls, text: str) -> Grid:
        """``axis:start:stop:points[:log]``."""
        parts = text.split(":")
        if len(parts) not in (4, 5) or parts[0] not in ("tau", "n", "t"):
            raise ValueError(f"bad sweep {text!r}; expected {{tau|n|t}}:start:stop:points[:log]")
        if len(parts) == 5 and parts[4] != "log":
            raise ValueError(f"bad sweep scale {parts[4]!r}")
        grid = cls(parts[0], float(parts[1]), float(parts[2]), int(parts[3]), len(parts) == 5)
        grid.values()
        return grid

    def values(self) -> np.ndarray:
        if self.points < 1:
            raise ValueError("sweep needs at least one point")
        if self.log:
            if self.start <= 0 or self.stop <= 0:
                raise ValueError("log sweeps need positive bounds")
            vals = np.geomspace(self.start, self.stop, self.points)
        else:
            vals = np.linspace(self.start, self.stop, self.points)
        if self.axis == "n":
            vals = np.unique(np.round(vals)).astype(float)
        if vals.size > 1 and np.any(np.diff(vals) <= 0):
            raise ValueError("sweep grid must be strictly increasing")
        return vals


@dataclass
class RunConfig:
    dist: str | None = None
    omega_m: float | None = None
    gamma: float = 1.0
    g: float = 1e-3
    cutoff_factor: float = DEFAULT_CUTOFF_FACTOR
    methods: list[str] = field(default_factory=list)
    tau: float | None = None
    n_pulses: int | None = None
    time: float | None = None
    sweep: Grid | None = None
    route: str = "quadrature"
    ensemble_size: int = 100_000
    quad_rtol: float = 1e-8
    route_rtol: float = 1e-4
    threads: int | None = None

    def density(self, dist: str, omega_m: float) -> SpectralDensity:
        return normalize(dist, omega_m, self.gamma, self.cutoff_factor * self.gamma)

    def describe(self) -> str:
        items = []
        for k, v in sorted(vars(self).items()):
            if isinstance(v, Grid):
                v = f"{v.axis}:{v.start!r}:{v.stop!r}:{v.points}" + (":log" if v.log else "")
            elif isinstance(v, list):
                v = ",".join(v)
            items.append(f"{k}={v}")
        return " ".join(items)


@dataclass(frozen=True)
class SweepRow:
    method: str
    dist: str
    omega_m: float
    gamma: float
    g: float
    tau: float
    n_pulses: int
    t: float
    p_prime: float
    p_free: float
    ratio: float
    route: str
    extra: tuple[tuple[str, float], ...] = ()

    def cells(self) -> list[str]:
        vals = [getattr(self, c) for c in CSV_COLUMNS] + [v for _, v in self.extra]
        return [v if isinstance(v, str) else repr(v) for v in vals]


@dataclass(frozen=True)
class Point:
    """One grid point of one panel; evaluates to one row per method and route."""

    dist: str
    omega_m: float
    tau: float
    n_pulses: int
    methods: tuple[str, ...]
    extra: tuple[tuple[str, float], ...] = ()


def _routes(cfg: RunConfig) -> tuple[str, ...]:
    return ("quadrature", "ensemble") if cfg.route == "both" else (cfg.route,)


def evaluate_point(cfg: RunConfig, pt: Point) -> list[SweepRow]:
    d = cfg.density(pt.dist, pt.omega_m)
    rows = []
    for method in pt.methods:
        for route in _routes(cfg):
            source = d if route == "quadrature" else quantile_sample(d, cfg.ensemble_size)
            res = transition_probability(Protocol(method, pt.tau, pt.n_pulses), source, cfg.g, rtol=cfg.quad_rtol)
            rows.append(
                SweepRow(
                    method, pt.dist, pt.omega_m, cfg.gamma, cfg.g, pt.tau, pt.n_pulses,
                    pt.n_pulses * pt.tau, res.p_prime, res.p_free, res.ratio, res.method, pt.extra,
                )
            )
    return rows


def run_points(cfg: RunConfig, points: Sequence[Point]) -> list[SweepRow]:
    """Evaluate in a worker pool; rows come back in grid order."""
    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        chunks = list(pool.map(lambda p: evaluate_point(cfg, p), points))
    return [row for chunk in chunks for row in chunk]


def route_disagreements(rows: Sequence[SweepRow], rtol: float) -> list[str]:
    """Pairs of quadrature/ensemble rows whose ``p_prime`` or ``p_free`` differ beyond ``rtol``."""
    out = []
    by_key: dict[tuple, dict[str, SweepRow]] = {}
    for r in rows:
        key = (r.method, r.dist, r.omega_m, r.tau, r.n_pulses)
        by_key.setdefault(key, {})["q" if r.route == "quadrature" else "e"] = r
    for key, pair in by_key.items():
        if len(pair) < 2:
            continue
        q, e = pair["q"], pair["e"]
        for name in ("p_prime", "p_free"):
            a, b = getattr(q, name), getattr(e, name)
            if abs(a - b) > rtol * max(abs(a), abs(b)):
                out.append(f"{key}: {name} quadrature={a!r} ensemble={b!r} rel={abs(a - b) / max(abs(a), abs(b)):.3e}")
    return out


def _panels(cfg: RunConfig) -> Iterator[tuple[str, float]]:
    dists = [cfg.dist] if cfg.dist else [k.value for k in DensityKind]
    offsets = [cfg.omega_m] if cfg.omega_m is not None else [0.0, 2.0 * cfg.gamma]
    for dist in dists:
        for wm in offsets:
            yield dist, wm


def _even_counts(lo: int, hi: int) -> list[int]:
    lo += lo % 2
    return list(range(lo, hi + 1, 2))


def figure1_points(cfg: RunConfig) -> list[Point]:
    """p'(t) at tau = 0.2 with even pulse counts; Gaussian centred at 0 by default."""
    tau = cfg.tau if cfg.tau is not None else 0.2
    dist = cfg.dist or DensityKind.GAUSSIAN.value
    wm = cfg.omega_m if cfg.omega_m is not None else 0.0
    counts = _grid_counts(cfg, default=_even_counts(2, 100), tau=tau)
    t_c = asymptotics(cfg.g, tau, 1.0, moments(cfg.density(dist, wm))).t_c
    methods = tuple(cfg.methods) or ("free", "meas", "mod", "mix")
    return [Point(dist, wm, tau, n, methods, (("t_c", t_c),)) for n in counts]


def figure2_points(cfg: RunConfig) -> list[Point]:
    """Two-pulse p'(tau) on every panel."""
    taus = cfg.sweep.values() if cfg.sweep else np.linspace(0.05, 3.0, 60)
    methods = tuple(cfg.methods) or ("free", "meas", "mod")
    return [Point(dist, wm, float(tau), 2, methods) for dist, wm in _panels(cfg) for tau in taus]


def figure3_points(cfg: RunConfig) -> list[Point]:
    """Ratios at fixed t = 10 against even pulse counts.

    The default counts start at 4 (at 2 the mixed cycle equals two
    modulations) and stop at 50, below the critical count b^2 t^2 = 100 of
    the narrowest density, beyond which the mixed and modulated curves swap.
    """
    t = cfg.time if cfg.time is not None else 10.0
    counts = cfg.sweep.values() if cfg.sweep else _even_counts(4, 50)
    methods = tuple(cfg.methods) or ("meas", "mod", "mix")
    return [Point(dist, wm, t / int(n), int(n), methods) for dist, wm in _panels(cfg) for n in counts]


def figure4_points(cfg: RunConfig) -> list[Point]:
    """p'_meas / p0 at fixed t = 10 for short delays, with the small-tau reference."""
    t = cfg.time if cfg.time is not None else 10.0
    taus = cfg.sweep.values() if cfg.sweep else np.geomspace(1e-3, 1e-1, 21)
    counts = sorted({max(1, round(t / tau)) for tau in taus}, reverse=True)
    methods = tuple(cfg.methods) or ("meas",)
    points = []
    for dist, wm in _panels(cfg):
        m = moments(cfg.density(dist, wm))
        for n in counts:
            tau = t / n
            points.append(Point(dist, wm, tau, n, methods, (("reference", small_tau_ratios(tau, m)[0]),)))
    return points


def _grid_counts(cfg: RunConfig, default: list[int], tau: float) -> list[int]:
    if cfg.sweep is None:
        return default
    vals = cfg.sweep.values()
    if cfg.sweep.axis == "t":
        vals = np.round(vals / tau)
    return sorted({int(v) for v in vals if v >= 1})


FIGURES = {1: figure1_points, 2: figure2_points, 3: figure3_points, 4: figure4_points}
EXTRA_COLUMNS = {1: ("t_c",), 2: (), 3: (), 4: ("reference",)}


def sweep_points(cfg: RunConfig) -> list[Point]:
    """Generic grid over tau, n or t for the selected methods on one panel."""
    if not cfg.methods:
        raise ValueError("select at least one --method")
    if cfg.sweep is None:
        raise ValueError("--sweep is required")
    dist = cfg.dist or DensityKind.GAUSSIAN.value
    wm = cfg.omega_m if cfg.omega_m is not None else 0.0
    vals = cfg.sweep.values()
    methods = tuple(ProtocolKind(m).value for m in cfg.methods)
    pts = []
    if cfg.sweep.axis == "tau":
        n = cfg.n_pulses if cfg.n_pulses is not None else 2
        pts = [Point(dist, wm, float(tau), n, methods) for tau in vals]
    elif cfg.sweep.axis == "n":
        for n in vals:
            n = int(n)
            if cfg.time is not None:
                tau = cfg.time / n
            elif cfg.tau is not None:
                tau = cfg.tau
            else:
                raise ValueError("an n sweep needs --time or --tau")
            pts.append(Point(dist, wm, tau, n, methods))
    else:
        if cfg.tau is None:
            raise ValueError("a t sweep needs --tau")
        counts = sorted({max(1, round(t / cfg.tau)) for t in vals})
        pts = [Point(dist, wm, cfg.tau, n, methods) for n in counts]
    return pts


def single_point(cfg: RunConfig) -> Point:
    """The point fixed by --tau/--n-pulses/--time when no sweep is given."""
    given = [x is not None for x in (cfg.tau, cfg.n_pulses, cfg.time)]
    if sum(given) < 2:
        raise ValueError("give two of --tau, --n-pulses, --time (or a --sweep)")
    if cfg.tau is not None and cfg.n_pulses is not None:
        tau, n = cfg.tau, cfg.n_pulses
    elif cfg.tau is not None:
        tau, n = cfg.tau, max(1, round(cfg.time / cfg.tau))
    else:
        n = cfg.n_pulses
        tau = cfg.time / n
    dist = cfg.dist or DensityKind.GAUSSIAN.value
    wm = cfg.omega_m if cfg.omega_m is not None else 0.0
    return Point(dist, wm, float(tau), int(n), tuple(ProtocolKind(m).value for m in cfg.methods))

