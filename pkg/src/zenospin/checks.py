"""Measured-versus-predicted table for the short-delay laws."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .figures import RunConfig
from .protocols import (
    Protocol,
    Source,
    asymptotics,
    default_moments,
    expectation,
    fit_rate,
    small_tau_ratios,
)
from .spectral import quantile_sample

TOLERANCES = {
    "p0_rate": 0.02,
    "p_mod_frozen": 0.05,
    "gamma_meas": 0.02,
    "gamma_mix": 0.20,
    "mix_prefactor": 0.20,
    "meas_ratio": 0.05,
    "mix_ratio": 0.05,
}


@dataclass(frozen=True)
class CheckRow:
    quantity: str
    measured: float
    predicted: float
    tolerance: float

    @property
    def rel_error(self) -> float:
        return abs(self.measured - self.predicted) / abs(self.predicted)

    @property
    def ok(self) -> bool:
        return self.rel_error <= self.tolerance


def _even(x: float) -> int:
    return max(2, 2 * round(x / 2))


def check_asymptotics(cfg: RunConfig) -> list[CheckRow]:
    """Compare the controlled probabilities at small ``tau`` with their limits.

    Defaults: Gaussian centred at 0, ``tau = 0.01``, ``t = 10``.  Rates are
    least-squares slopes through the origin over ``t/4, t/2, t``.
    """
    tau = cfg.tau if cfg.tau is not None else 0.01
    t = cfg.time if cfg.time is not None else 10.0
    d = cfg.density(cfg.dist or "gaussian", cfg.omega_m if cfg.omega_m is not None else 0.0)
    source: Source = quantile_sample(d, cfg.ensemble_size) if cfg.route == "ensemble" else d
    g = cfg.g
    m = default_moments(source)
    rates = asymptotics(g, tau, t, m)

    def p(kind: str, n: int) -> float:
        return expectation(Protocol(kind, tau, n), source, g, rtol=cfg.quad_rtol)[0]

    counts = [_even(t / (4 * tau)), _even(t / (2 * tau)), _even(t / tau)]
    times = [n * tau for n in counts]
    n = counts[-1]
    p0 = p("free", n)
    p_meas = [p("meas", k) for k in counts]
    p_mix = [p("mix", k) for k in counts]
    gamma_meas = fit_rate(times, p_meas)
    gamma_mix = fit_rate(times, p_mix)
    meas_ratio, mix_ratio = small_tau_ratios(tau, m)
    tol = TOLERANCES
    return [
        CheckRow("p0_rate", p0 / times[-1], rates.gamma0, tol["p0_rate"]),
        CheckRow("p_mod_frozen", p("mod", n), rates.p_mod_frozen, tol["p_mod_frozen"]),
        CheckRow("gamma_meas", gamma_meas, rates.gamma_meas, tol["gamma_meas"]),
        CheckRow("gamma_mix", gamma_mix, rates.gamma_mix, tol["gamma_mix"]),
        CheckRow("mix_prefactor", gamma_mix / (m.b_sq * g * g * tau**3), 0.5, tol["mix_prefactor"]),
        CheckRow("meas_ratio", p_meas[-1] / p0, meas_ratio, tol["meas_ratio"]),
        CheckRow("mix_ratio", p_mix[-1] / p0, mix_ratio, tol["mix_ratio"]),
    ]


def format_report(rows: list[CheckRow]) -> str:
    lines = [f"{'quantity':<14} {'measured':>14} {'predicted':>14} {'rel_err':>10} {'tol':>6}  status"]
    for r in rows:
        err = "nan" if math.isnan(r.rel_error) else f"{r.rel_error:.3e}"
        lines.append(
            f"{r.quantity:<14} {r.measured:>14.6e} {r.predicted:>14.6e} {err:>10} {r.tolerance:>6.2f}  "
            + ("PASS" if r.ok else "FAIL")
        )
    return "\n".join(lines) + "\n"
