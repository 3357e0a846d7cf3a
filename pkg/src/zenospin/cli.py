"""Command-line front end.

Exit codes: 0 success, 1 tolerance or convergence failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from collections import defaultdict
from dataclasses import fields

from . import svg
from .checks import check_asymptotics, format_report
from .spectral import moments
from .figures import (
    CSV_COLUMNS,
    EXTRA_COLUMNS,
    FIGURES,
    ROUTES,
    Grid,
    RunConfig,
    SweepRow,
    route_disagreements,
    run_points,
    single_point,
    sweep_points,
)

# flag dest -> RunConfig field
_FIELD_FOR = {"method": "methods"}


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _grid(text: str) -> Grid:
    try:
        return Grid.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    p.add_argument("--dist", choices=["gaussian", "lorentzian", "exponential"])
    p.add_argument("--omega-m", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--g", type=float)
    p.add_argument("--cutoff-factor", type=float)
    p.add_argument("--method", action="append", choices=["free", "mod", "meas", "mix"])
    p.add_argument("--tau", type=float)
    p.add_argument("--n-pulses", type=_positive_int)
    p.add_argument("--time", type=float)
    p.add_argument("--sweep", type=_grid, metavar="{tau|n|t}:START:STOP:POINTS[:log]")
    p.add_argument("--route", choices=ROUTES)
    p.add_argument("--ensemble-size", type=_positive_int)
    p.add_argument("--quad-rtol", type=float)
    p.add_argument("--route-rtol", type=float)
    p.add_argument("--out", metavar="PATH")
    p.add_argument("--svg", metavar="PATH")
    p.add_argument("--threads", type=_positive_int)
    p.add_argument("--config", metavar="PATH")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="zenospin", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    fig = sub.add_parser("figure", parents=[common], help="reproduce one of the four figures as CSV")
    fig.add_argument("fig_id", type=int, choices=sorted(FIGURES))
    sub.add_parser("sweep", parents=[common], help="grid sweep over tau, n or t")
    sub.add_parser("check-asymptotics", parents=[common], help="measured vs predicted short-delay laws")
    return parser


def read_config(path: str, parser: argparse.ArgumentParser) -> dict:
    """Flat ``key = value`` file; keys are flag names without the leading dashes."""
    actions = {a.dest: a for a in parser._actions}
    out: dict = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                parser.error(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            dest = key.replace("-", "_")
            action = actions.get(dest)
            if action is None or dest in ("config", "help"):
                parser.error(f"{path}:{lineno}: unknown key {key!r}")
            conv = action.type or str
            try:
                if dest == "method":
                    vals = [v.strip() for v in value.split(",") if v.strip()]
                    bad = [v for v in vals if v not in action.choices]
                    if bad:
                        raise ValueError(f"invalid method {bad[0]!r}")
                    out[dest] = vals
                else:
                    val = conv(value)
                    if action.choices and val not in action.choices:
                        raise ValueError(f"{value!r} not in {sorted(action.choices)}")
                    out[dest] = val
            except (ValueError, argparse.ArgumentTypeError) as exc:
                parser.error(f"{path}:{lineno}: {key}: {exc}")
    return out


def _run_config(values: dict) -> RunConfig:
    names = {f.name for f in fields(RunConfig)}
    kw = {}
    for dest, val in values.items():
        name = _FIELD_FOR.get(dest, dest)
        if name in names:
            kw[name] = val
    return RunConfig(**kw)


def _write_csv(rows: list[SweepRow], cfg: RunConfig, extra: tuple[str, ...], header_note: str) -> str:
    buf = io.StringIO()
    buf.write(f"# {header_note} {cfg.describe()}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(CSV_COLUMNS) + list(extra))
    for r in rows:
        w.writerow(r.cells())
    return buf.getvalue()


def _emit(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


_FIG_AXES = {
    1: ("t", "t", "p'", False, True),
    2: ("tau", "tau", "p'", False, True),
    3: ("n_pulses", "N", "p'/p0", True, True),
    4: ("tau", "tau", "p'_meas/p0", True, True),
}


def figure_panels(fig_id: int | None, rows: list[SweepRow], xkey: str = "tau") -> list[svg.Panel]:
    if fig_id is not None:
        xkey, xlabel, ylabel, xlog, ylog = _FIG_AXES[fig_id]
    else:
        xlabel, ylabel, xlog, ylog = xkey, "p'", False, True
    yfield = "ratio" if fig_id in (3, 4) else "p_prime"
    panels: dict[tuple, svg.Panel] = {}
    series: dict[tuple, dict[str, tuple[list, list]]] = defaultdict(dict)
    for r in rows:
        key = (r.dist, r.omega_m)
        if key not in panels:
            panels[key] = svg.Panel(f"{r.dist}, omega_m={r.omega_m:g}", xlabel, ylabel, xlog, ylog)
        name = r.method if r.route == "quadrature" else f"{r.method} [{r.route}]"
        xs, ys = series[key].setdefault(name, ([], []))
        xs.append(getattr(r, xkey))
        ys.append(getattr(r, yfield))
        extra = dict(r.extra)
        if "reference" in extra:
            rx, ry = series[key].setdefault("reference", ([], []))
            if getattr(r, xkey) not in rx:
                rx.append(getattr(r, xkey))
                ry.append(extra["reference"])
        if "t_c" in extra and extra["t_c"] not in panels[key].vlines:
            panels[key].vlines.append(extra["t_c"])
    for key, panel in panels.items():
        panel.series = series[key]
    return list(panels.values())


def _cutoff_note(cfg: RunConfig) -> str:
    b_sq = moments(cfg.density("lorentzian", cfg.omega_m or 0.0)).b_sq
    return (
        f"note: the Lorentzian b^2 = {b_sq:.6g} grows linearly with the cutoff "
        f"({cfg.cutoff_factor:g} gamma); its mixed-protocol rate and t_c are cutoff-sensitive\n"
    )


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    values = vars(args).copy()
    if "config" in values:
        try:
            from_file = read_config(values["config"], _common())
        except OSError as exc:
            parser.error(f"cannot read config: {exc}")
        values = {**from_file, **values}
    cfg = _run_config(values)
    out, svg_path = values.get("out"), values.get("svg")

    try:
        if args.command == "check-asymptotics":
            rows = check_asymptotics(cfg)
            _emit(format_report(rows), out)
            if cfg.dist == "lorentzian":
                sys.stderr.write(_cutoff_note(cfg))
            return 0 if all(r.ok for r in rows) else 1
        if args.command == "figure":
            fig_id = args.fig_id
            points = FIGURES[fig_id](cfg)
            extra = EXTRA_COLUMNS[fig_id]
            note = f"figure={fig_id}"
        else:
            fig_id = None
            if not cfg.methods:
                parser.error("select at least one --method")
            points = sweep_points(cfg) if cfg.sweep is not None else [single_point(cfg)]
            extra = ()
            note = "sweep"
    except ValueError as exc:
        parser.error(str(exc))

    rows = run_points(cfg, points)
    _emit(_write_csv(rows, cfg, extra, note), out)
    if any(r.dist == "lorentzian" and (r.method == "mix" or "t_c" in dict(r.extra)) for r in rows):
        sys.stderr.write(_cutoff_note(cfg))
    if svg_path:
        xkey = {"tau": "tau", "n": "n_pulses", "t": "t"}[cfg.sweep.axis] if cfg.sweep else "tau"
        with open(svg_path, "w") as fh:
            fh.write(svg.render(figure_panels(fig_id, rows, xkey)))
    if cfg.route == "both":
        bad = route_disagreements(rows, cfg.route_rtol)
        if bad:
            print(f"route disagreement beyond {cfg.route_rtol:g} in {len(bad)} value(s):", file=sys.stderr)
            for line in bad:
                print("  " + line, file=sys.stderr)
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
