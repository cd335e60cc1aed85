"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line."""

import contextlib
import time

import numpy as np

from conftest import ACCEPTANCE, random_cellwise, random_grid
from ordercomp import nlscf
from ordercomp.cli import main
from ordercomp.lab import (
    PI,
    SQRT2,
    Const,
    Harmonic,
    characterization,
    converges_in_product_of_completions,
    converges_in_QQsharp,
    converges_in_Qsharp,
    neighborhood,
    sequence_tail,
)
from ordercomp.nlsc import (
    FunctionSequence,
    Grid,
    NlscFunction,
    baire_lower,
    baire_upper,
    cell_samples,
    eval_at,
    eval_equal,
    is_order_cauchy,
    lattice_inf,
    lattice_sup,
    nlsc_regularize,
    sample_set,
    sample_values,
)
from ordercomp.pde import PdeSystem, check_admissibility
from ordercomp.report import loads_report
from ordercomp.solver import EpsSchedule, assemble_generalized_solution, build_approximation

EIK = PdeSystem.from_strings(1, 1, ["(D[1]u1)^2"], ["1"])
TRANSPORT = PdeSystem.from_strings(1, 1, ["D[1]u1"], ["cos(x1)"])
ZEROTH = PdeSystem.from_strings(1, 0, ["u1"], ["sin(x1)"])
G64 = Grid.uniform(0, 1, 64)
HARMONIC20 = EpsSchedule.harmonic(20)


def config(F, f, schedule, cells=64, m=1, seed=1, extra=""):
    return (f"[domain]\nlower = 0\nupper = 1\ncells = {cells}\n\n"
            f"[pde]\nm = {m}\nF = {F}\nf = {f}\n\n"
            f"[solver]\nschedule = {schedule}\ndegree = 1\nseed = {seed}\n{extra}")


def run_solve(tmp_path, text, name):
    cfg = tmp_path / f"{name}.ini"
    cfg.write_text(text)
    out = tmp_path / name
    t0 = time.perf_counter()
    code = main(["solve", "--config", str(cfg), "--out-dir", str(out)])
    return code, out, time.perf_counter() - t0


@contextlib.contextmanager
def criterion(label):
    try:
        yield
    except BaseException:
        line = f"FAIL  {label}"
        ACCEPTANCE.append(line)
        print(line)
        raise
    line = f"PASS  {label}"
    ACCEPTANCE.append(line)
    print(line)


def test_c1_eikonal_construction(tmp_path):
    with criterion("C1 eikonal construction: residual in [-eps, 0], 63 faces, < 5 s"):
        for eps in (0.1, 0.01, 0.001):
            code, out, secs = run_solve(tmp_path, config("(D[1]u1)^2", "1", repr(eps)), f"e{eps}")
            assert code == 0 and secs < 5.0, (eps, code, secs)
            rep = loads_report((out / "report.ocrun").read_text())
            (b,) = rep["eps"]
            assert b["within_bounds"]
            assert -eps <= min(b["residual_min"]) and max(b["residual_max"]) <= 0.0
            (u,) = nlscf.load(out / "eps_1.nlscf")
            assert len(u.singular.faces) == 63 and b["cells"] == 64


def test_c2_transport_oracle(tmp_path):
    with criterion("C2 transport oracle: |residual + eps/2| <= cell radius; coarse grid refines"):
        eps = 0.1
        a = build_approximation(TRANSPORT, G64, eps, seed=1)
        (u,) = a.u_eps
        assert a.verified and a.cells_refined == 0
        for k in range(G64.ncells):
            c = G64.cell_center(k)[0]
            X = cell_samples(G64, k, 30)
            r = u.pieces[k].deriv((1,)).value(X) - np.cos(X[:, 0])
            expected = np.cos(c) - eps / 2 - np.cos(X[:, 0])
            assert np.allclose(r, expected, atol=1e-12)
            assert np.all(np.abs(r + eps / 2) <= G64.cell_radius(k)[0] + 1e-12)
        code, out, _ = run_solve(tmp_path, config("D[1]u1", "cos(x1)", "0.1"), "t01")
        assert code == 0
        code, out, _ = run_solve(tmp_path, config("D[1]u1", "cos(x1)", "0.001", cells=2), "tcoarse")
        assert code == 0
        (b,) = loads_report((out / "report.ocrun").read_text())["eps"]
        assert b["cells_refined"] > 0 and b["refine_rounds"] > 0


def test_c3_order_convergence_certificate():
    with criterion("C3 certificate: final gap exactly 0.05, T-image Cauchy gap <= 0.05"):
        for sys in (EIK, TRANSPORT):
            gs = assemble_generalized_solution(sys, G64, HARMONIC20, seed=1)
            assert gs.certificate.ok and gs.certificate.final_gap == 0.05
            assert gs.cauchy.ok and gs.cauchy.final_gap <= 0.05


def test_c4_uniqueness_surrogate():
    with criterion("C4 uniqueness surrogate: merged seeds Cauchy at 2 eps_N; u itself is not"):
        runs = [assemble_generalized_solution(EIK, G64, HARMONIC20, seed=s) for s in (1, 2)]
        assert runs[0].grid == runs[1].grid
        merged = FunctionSequence.of([t for pair in zip(runs[0].t_images, runs[1].t_images) for t in pair])
        assert is_order_cauchy(merged, tol=2 * HARMONIC20.values[-1])
        u_rows = [r for gs in runs for r in gs.regularity if r.alpha == (0,)]
        merged_u = FunctionSequence.of([v for pair in zip(runs[0].v, runs[1].v) for v in pair])
        assert any(not r.cauchy for r in u_rows) or not is_order_cauchy(merged_u, tol=HARMONIC20.values[-1])


def test_c5_baire_and_lattice_suite():
    with criterion("C5 Baire/lattice suite on 200 random cellwise functions"):
        rng = np.random.default_rng(20261014)
        for _ in range(200):
            g = random_grid(rng)
            u, v, w = (random_cellwise(rng, g) for _ in range(3))
            S = sample_set(g)
            I_, id_, S_ = (sample_values(f, S) for f in (baire_lower(u), u, baire_upper(u)))
            assert np.all(I_ <= id_) and np.all(id_ <= S_)
            r = nlsc_regularize(u)
            assert eval_equal(nlsc_regularize(r), r)
            # lattice laws live on the nlsc representatives
            u, v, w = r, nlsc_regularize(v), nlsc_regularize(w)
            assert eval_equal(lattice_sup(u, v), lattice_sup(v, u))
            assert eval_equal(lattice_inf(u, v), lattice_inf(v, u))
            assert eval_equal(lattice_sup(u, lattice_sup(v, w)), lattice_sup(lattice_sup(u, v), w))
            assert eval_equal(lattice_inf(u, lattice_inf(v, w)), lattice_inf(lattice_inf(u, v), w))
            assert eval_equal(lattice_sup(u, lattice_inf(u, v)), u)
            assert eval_equal(lattice_inf(u, lattice_sup(u, v)), u)
            assert eval_equal(lattice_sup(u, lattice_inf(v, w)),
                              lattice_inf(lattice_sup(u, v), lattice_sup(u, w)))
            assert eval_equal(lattice_inf(u, lattice_sup(v, w)),
                              lattice_sup(lattice_inf(u, v), lattice_inf(u, w)))
        g = Grid.uniform(-1, 1, 2)
        a = lattice_sup(NlscFunction.from_polynomial(g, {(1,): 1.0}),
                        NlscFunction.from_polynomial(g, {(1,): -1.0}))
        assert eval_at(a, 0.0) == 0.0 and eval_at(a, 0.5) == 0.5 and eval_at(a, -0.5) == 0.5


def test_c6_admissibility_gate(tmp_path):
    with criterion("C6 admissibility gate: f=1 admissible at 64 centres, f=0 rejected with exit 3"):
        centres = [G64.cell_center(k) for k in range(G64.ncells)]
        ok = PdeSystem.from_strings(1, 1, ["(D[1]u1)^2"], ["1"])
        bad = PdeSystem.from_strings(1, 1, ["(D[1]u1)^2"], ["0"])
        assert all(check_admissibility(ok, c) for c in centres)
        assert not any(check_admissibility(bad, c) for c in centres)
        code, _, _ = run_solve(tmp_path, config("(D[1]u1)^2", "0", "0.1"), "zero")
        assert code == 3


def test_c7_completion_counterexamples():
    with criterion("C7 completion counterexamples: exact booleans, shipped catalog exits 0"):
        assert converges_in_Qsharp(neighborhood(SQRT2), SQRT2) is False
        assert converges_in_Qsharp(characterization(SQRT2), SQRT2) is True
        H = sequence_tail(Harmonic(0), Const(PI))
        assert converges_in_product_of_completions(H, (0, PI)) is True
        assert converges_in_QQsharp(H, (0, PI)) is False
        assert main(["lab"]) == 0


def test_c8_regularity_identification():
    with criterion("C8 regularity: zeroth order u Cauchy; transport u' Cauchy within eps_N, u not"):
        z = assemble_generalized_solution(ZEROTH, G64, HARMONIC20, seed=1)
        assert [(r.alpha, r.cauchy) for r in z.regularity] == [((0,), True)]
        for seed in (1, 2, 3):
            t = assemble_generalized_solution(TRANSPORT, G64, HARMONIC20, seed=seed)
            rows = {r.alpha: r for r in t.regularity}
            assert rows[(1,)].cauchy and rows[(1,)].gap <= HARMONIC20.values[-1]
            assert not rows[(0,)].cauchy


def test_c9_reproducibility(tmp_path):
    with criterion("C9 reproducibility: byte-identical dumps and reports across two runs"):
        for F, f in (("(D[1]u1)^2", "1"), ("D[1]u1", "cos(x1)")):
            text = config(F, f, "harmonic 20", seed=2)
            snaps = []
            for name in ("first", "second"):
                code, out, _ = run_solve(tmp_path, text, name)
                assert code == 0
                snaps.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
            assert len(snaps[0]) == 21 and snaps[0] == snaps[1]
