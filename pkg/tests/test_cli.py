import csv
import subprocess
import sys
import xml.etree.ElementTree as ET

import pytest

from zenospin.cli import main
from zenospin.figures import CSV_COLUMNS, Grid
from zenospin.protocols import Protocol, transition_probability
from zenospin.spectral import normalize


def read_rows(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# ")
    return lines[0], list(csv.DictReader(lines[1:]))


def run(tmp_path, *args, name="out.csv"):
    out = tmp_path / name
    rc = main([*args, "--out", str(out)])
    return rc, out


def test_header_exact(tmp_path):
    rc, out = run(tmp_path, "sweep", "--method", "mod", "--tau", "0.2", "--n-pulses", "10")
    assert rc == 0
    assert out.read_text().splitlines()[1] == ",".join(CSV_COLUMNS)


def test_single_point_matches_library(tmp_path):
    rc, out = run(tmp_path, "sweep", "--method", "meas", "--method", "mix", "--dist", "exponential",
                  "--omega-m", "2", "--tau", "0.3", "--n-pulses", "12")
    assert rc == 0
    _, rows = read_rows(out)
    d = normalize("exponential", 2.0)
    for row in rows:
        ref = transition_probability(Protocol(row["method"], 0.3, 12), d, 1e-3)
        assert float(row["p_prime"]) == ref.p_prime
        assert float(row["p_free"]) == ref.p_free
        assert row["route"] == "quadrature"
        assert float(row["t"]) == pytest.approx(3.6)


def test_time_and_pulses_fix_delay(tmp_path):
    rc, out = run(tmp_path, "sweep", "--method", "mod", "--time", "10", "--n-pulses", "40")
    _, rows = read_rows(out)
    assert rc == 0 and float(rows[0]["tau"]) == 0.25


def test_n_sweep_rows_in_grid_order(tmp_path):
    rc, out = run(tmp_path, "sweep", "--method", "mod", "--method", "meas", "--sweep", "n:4:20:5", "--time", "10")
    _, rows = read_rows(out)
    assert rc == 0
    assert [int(r["n_pulses"]) for r in rows] == [4, 4, 8, 8, 12, 12, 16, 16, 20, 20]
    assert [r["method"] for r in rows[:2]] == ["mod", "meas"]


def test_figure1_crossover_column(tmp_path):
    rc, out = run(tmp_path, "figure", "1", "--sweep", "t:0.4:2:3")
    note, rows = read_rows(out)
    assert rc == 0 and note.startswith("# figure=1")
    assert {r["method"] for r in rows} == {"free", "meas", "mod", "mix"}
    assert all(float(r["t_c"]) == pytest.approx(5.0) for r in rows)


def test_figure2_panels(tmp_path):
    rc, out = run(tmp_path, "figure", "2", "--sweep", "tau:0.5:1.5:3")
    _, rows = read_rows(out)
    assert rc == 0
    assert len(rows) == 6 * 3 * 3
    assert {(r["dist"], float(r["omega_m"])) for r in rows} == {
        (k, w) for k in ("gaussian", "lorentzian", "exponential") for w in (0.0, 2.0)
    }
    assert {int(r["n_pulses"]) for r in rows} == {2}


def test_figure4_reference_column(tmp_path):
    rc, out = run(tmp_path, "figure", "4", "--dist", "gaussian", "--omega-m", "0", "--sweep", "tau:0.01:0.1:3:log")
    _, rows = read_rows(out)
    assert rc == 0
    for r in rows:
        assert float(r["reference"]) == pytest.approx(float(r["tau"]) / (2 * 3.141592653589793 * 0.3989422804014327))
        assert float(r["t"]) == pytest.approx(10.0)


def test_svg_is_well_formed(tmp_path):
    svg = tmp_path / "f.svg"
    rc, _ = run(tmp_path, "figure", "2", "--sweep", "tau:0.5:1.5:4", "--svg", str(svg))
    assert rc == 0
    root = ET.parse(svg).getroot()
    assert root.tag.endswith("svg")
    assert len(root.findall("{http://www.w3.org/2000/svg}g")) == 6


def test_identical_runs_identical_bytes(tmp_path):
    args = ("figure", "3", "--dist", "lorentzian", "--sweep", "n:4:12:5")
    _, a = run(tmp_path, *args, name="a.csv")
    _, b = run(tmp_path, *args, name="b.csv")
    assert a.read_bytes() == b.read_bytes()


def test_rows_independent_of_thread_count(tmp_path):
    args = ("figure", "3", "--dist", "gaussian", "--sweep", "n:4:12:5")
    _, a = run(tmp_path, *args, "--threads", "1", name="a.csv")
    _, b = run(tmp_path, *args, "--threads", "4", name="b.csv")
    assert a.read_text().splitlines()[1:] == b.read_text().splitlines()[1:]


@pytest.mark.parametrize(
    "args",
    [
        ["sweep", "--sweep", "tau:0.1:1:3"],
        ["sweep", "--method", "mod"],
        ["sweep", "--method", "mod", "--sweep", "tau:1:0.1"],
        ["sweep", "--method", "mod", "--sweep", "tau:-1:1:3:log"],
        ["sweep", "--method", "mod", "--tau", "0.1", "--n-pulses", "0"],
        ["sweep", "--method", "echo", "--tau", "0.1", "--n-pulses", "2"],
        ["figure", "5"],
        ["check-asymptotics", "--gamma", "-1"],
    ],
)
def test_usage_errors_exit_2(args, capsys):
    with pytest.raises(SystemExit) as info:
        main(args)
    assert info.value.code == 2


class TestConfig:
    def test_file_then_flags(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# comment\nmethod = mod, meas\ng = 0.01\ntau = 0.2\nn-pulses = 6\n")
        rc, out = run(tmp_path, "sweep", "--config", str(cfg))
        _, rows = read_rows(out)
        assert rc == 0 and {r["g"] for r in rows} == {"0.01"} and len(rows) == 2
        rc, out = run(tmp_path, "sweep", "--config", str(cfg), "--g", "0.02", "--method", "mix")
        _, rows = read_rows(out)
        assert {r["g"] for r in rows} == {"0.02"} and [r["method"] for r in rows] == ["mix"]

    @pytest.mark.parametrize("text", ["bogus = 1\n", "tau 0.1\n", "route = sideways\n", "method = mod, echo\n"])
    def test_bad_file(self, tmp_path, text):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text(text)
        with pytest.raises(SystemExit) as info:
            main(["sweep", "--config", str(cfg)])
        assert info.value.code == 2

    def test_missing_file(self, tmp_path):
        with pytest.raises(SystemExit) as info:
            main(["sweep", "--config", str(tmp_path / "nope.cfg")])
        assert info.value.code == 2


def test_route_both_agreement(tmp_path):
    rc, out = run(tmp_path, "sweep", "--method", "meas", "--tau", "0.2", "--n-pulses", "10", "--route", "both")
    _, rows = read_rows(out)
    assert rc == 0
    assert [r["route"] for r in rows] == ["quadrature", "ensemble(100000)"]


def test_route_disagreement_exits_1(tmp_path, capsys):
    rc, _ = run(tmp_path, "sweep", "--method", "mod", "--tau", "0.2", "--n-pulses", "10",
                "--route", "both", "--ensemble-size", "16")
    assert rc == 1
    assert "route disagreement" in capsys.readouterr().err


def test_lorentzian_cutoff_note(tmp_path, capsys):
    run(tmp_path, "sweep", "--method", "mix", "--dist", "lorentzian", "--tau", "0.1", "--n-pulses", "10")
    assert "cutoff-sensitive" in capsys.readouterr().err
    run(tmp_path, "sweep", "--method", "mix", "--dist", "gaussian", "--tau", "0.1", "--n-pulses", "10")
    assert capsys.readouterr().err == ""


def test_check_asymptotics_report(tmp_path):
    rc, out = run(tmp_path, "check-asymptotics")
    lines = out.read_text().splitlines()
    assert len(lines) == 8
    statuses = [line.split()[-1] for line in lines[1:]]
    assert set(statuses) <= {"PASS", "FAIL"}
    assert rc == (0 if all(s == "PASS" for s in statuses) else 1)
    assert dict(zip([line.split()[0] for line in lines[1:]], statuses))["p_mod_frozen"] == "PASS"


def test_grid_parse():
    g = Grid.parse("n:1:10:4")
    assert g.values().tolist() == [1.0, 4.0, 7.0, 10.0]
    with pytest.raises(ValueError):
        Grid.parse("omega:1:2:3")
    with pytest.raises(ValueError):
        Grid.parse("tau:1:2:3:lin")


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "zenospin", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "figure" in res.stdout
