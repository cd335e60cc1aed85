from pathlib import Path

import pytest

from ordercomp.cli import main
from ordercomp.config import ConfigError, parse_config
from ordercomp.report import HEADER, loads_report

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

SMALL = """
[domain]
lower = 0
upper = 1
cells = 16

[pde]
m = 1
F = (D[1]u1)^2
f = {f}

[solver]
schedule = harmonic 6
seed = 1
"""


def write(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


# --- configuration ---------------------------------------------------------------------


def test_config_defaults_and_lists():
    cfg = parse_config(SMALL.format(f="1"))
    assert cfg.n == 1 and cfg.domain.cells == (16,)
    assert cfg.solver.schedule[-1] == pytest.approx(1 / 6)
    assert cfg.solver.verify_factor == 10 and cfg.solver.box == (-2.0, 2.0)
    two = parse_config(SMALL.format(f="1").replace("lower = 0", "lower = 0 0")
                       .replace("upper = 1", "upper = 1 1").replace("D[1]u1", "D[1,0]u1"))
    assert two.domain.cells == (16, 16)


@pytest.mark.parametrize("edit,fragment", [
    (lambda t: t.replace("[pde]", "[pdx]"), "section"),
    (lambda t: t.replace("m = 1", "m = one"), "m"),
    (lambda t: t.replace("harmonic 6", "0.1 0.2"), "decreasing"),
    (lambda t: t.replace("seed = 1", "seed = 1\ndegree = 0"), "degree"),
    (lambda t: t.replace("(D[1]u1)^2", "(D[1]u1)^"), "offset"),
    (lambda t: t.replace("cells = 16", ""), "cells"),
])
def test_config_errors(edit, fragment):
    with pytest.raises(ConfigError) as ei:
        parse_config(edit(SMALL.format(f="1")))
    assert fragment in str(ei.value)


# --- solve / verify ----------------------------------------------------------------------


def test_solve_writes_artifacts(tmp_path, capsys):
    cfg = write(tmp_path, SMALL.format(f="1"))
    out = tmp_path / "out"
    assert main(["solve", "--config", cfg, "--out-dir", str(out)]) == 0
    rep_text = (out / "report.ocrun").read_text()
    assert rep_text.startswith(HEADER + "\n")
    rep = loads_report(rep_text)
    assert rep["ok"] and rep["exit_status"] == 0 and len(rep["eps"]) == 6
    for b in rep["eps"]:
        assert -b["eps"] <= min(b["residual_min"]) and max(b["residual_max"]) <= 0
        assert "seconds" not in b
    assert sorted(p.name for p in out.glob("*.nlscf")) == [f"eps_{n}.nlscf" for n in range(1, 7)]
    assert "certificate: ok" in capsys.readouterr().out


def test_solve_exit_codes(tmp_path, capsys):
    assert main(["solve", "--config", write(tmp_path, SMALL.format(f="0")),
                 "--out-dir", str(tmp_path / "o")]) == 3
    err = capsys.readouterr().err
    assert err.count("\n  ") == 16
    assert main(["solve", "--config", write(tmp_path, SMALL.format(f="1").replace("^2", "^"))]) == 2
    assert "offset" in capsys.readouterr().err
    assert main(["solve", "--config", str(tmp_path / "missing.ini")]) == 2
    exhaust = SMALL.format(f="1").replace("(D[1]u1)^2", "D[1]u1").replace("f = 1", "f = cos(x1)")
    exhaust = exhaust.replace("cells = 16", "cells = 2") + "max_refine = 1\nschedule = 0.001\n"
    exhaust = exhaust.replace("schedule = harmonic 6\n", "")
    assert main(["solve", "--config", write(tmp_path, exhaust), "--out-dir", str(tmp_path / "x")]) == 4


def test_verify(tmp_path, capsys):
    cfg = write(tmp_path, SMALL.format(f="1"))
    out = tmp_path / "out"
    assert main(["solve", "--config", cfg, "--out-dir", str(out)]) == 0
    dump = out / "eps_6.nlscf"
    assert main(["verify", str(dump), "--config", cfg, "--eps", str(1 / 6), "--density", "60"]) == 0
    lines = dump.read_text().splitlines()
    i = next(j for j, l in enumerate(lines) if l.startswith("RULE")) + 1
    toks = lines[i].split()
    toks[-1] = "0"
    lines[i] = " ".join(toks)
    bad = tmp_path / "bad.nlscf"
    bad.write_text("\n".join(lines) + "\n")
    capsys.readouterr()
    assert main(["verify", str(bad), "--config", cfg, "--eps", str(1 / 6)]) == 1
    assert "violation in cell (0,)" in capsys.readouterr().out
    trunc = tmp_path / "trunc.nlscf"
    trunc.write_text("\n".join(lines[:10]) + "\n")
    assert main(["verify", str(trunc), "--config", cfg, "--eps", "0.1"]) == 2


def test_timing_is_opt_in(tmp_path):
    cfg = write(tmp_path, SMALL.format(f="1"))
    assert main(["solve", "--config", cfg, "--out-dir", str(tmp_path / "t"), "--timing"]) == 0
    rep = loads_report((tmp_path / "t" / "report.ocrun").read_text())
    assert all("seconds" in b for b in rep["eps"])


def test_flags_override_config(tmp_path):
    cfg = write(tmp_path, SMALL.format(f="1"))
    out = tmp_path / "o"
    assert main(["solve", "--config", cfg, "--out-dir", str(out), "--seed", "5",
                 "--verify-factor", "4", "--tol", "0.5", "--density", "2"]) == 0
    rep = loads_report((out / "report.ocrun").read_text())
    assert rep["config"]["solver"]["seed"] == 5
    assert rep["certificate"]["tol"] == 0.5
    assert rep["eps"][0]["verify_density"] == 8


# --- lab / parse / baire / lattice ------------------------------------------------------------


def test_lab(tmp_path, capsys):
    assert main(["lab"]) == 0
    assert "scenarios passed" in capsys.readouterr().out
    from ordercomp.lab.catalog import DEFAULT_CATALOG

    flipped = DEFAULT_CATALOG.read_text().replace(
        "| qqsharp(0, pi)    | false", "| qqsharp(0, pi)    | true")
    assert main(["lab", write(tmp_path, flipped, "flip.txt")]) == 1
    assert main(["lab", write(tmp_path, "", "empty.txt")]) == 0
    assert main(["lab", write(tmp_path, "x | blob(1) | cauchy | true\n", "bad.txt")]) == 2


def test_parse(capsys):
    assert main(["parse", "(D[1]u1)^2"]) == 0
    out = capsys.readouterr().out
    assert out.splitlines() == ["D[1]u1^2", "jet variables: D[1]u1"]
    assert main(["parse", "D[3]u1", "--m", "2"]) == 2
    assert main(["parse", "sin x1"]) == 2


def test_baire_and_lattice(tmp_path, capsys):
    cfg = write(tmp_path, SMALL.format(f="1"))
    out = tmp_path / "o"
    assert main(["solve", "--config", cfg, "--out-dir", str(out)]) == 0
    a, b = out / "eps_1.nlscf", out / "eps_2.nlscf"
    s = tmp_path / "S.nlscf"
    assert main(["baire", str(a), "--op", "S", "-o", str(s)]) == 0
    assert "RULE upper" in s.read_text()
    assert main(["lattice", str(a), str(b), "--op", "inf", "-o", str(tmp_path / "m.nlscf")]) == 0
    assert (tmp_path / "m.nlscf").read_text().startswith("NLSCF 1")
    assert main(["baire", str(tmp_path / "nope.nlscf")]) == 2


def test_shipped_configs_parse():
    for p in sorted(CONFIGS.glob("*.ini")):
        parse_config(p.read_text())


def test_usage_error_is_exit_2(capsys):
    assert main(["frobnicate"]) == 2
