"""Eikonal (u')^2 = 1 on (0, 1): approximations for eps = 1/n and the order-convergence certificate."""

import argparse

from ordercomp.nlsc import Grid
from ordercomp.pde import PdeSystem
from ordercomp.solver import EpsSchedule, assemble_generalized_solution


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cells", type=int, default=64)
    ap.add_argument("--n", type=int, default=20, help="schedule eps_n = 1/n, n <= N")
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    sys_ = PdeSystem.from_strings(1, 1, ["(D[1]u1)^2"], ["1"])
    gs = assemble_generalized_solution(sys_, Grid.uniform(0, 1, args.cells),
                                       EpsSchedule.harmonic(args.n), seed=args.seed)
    print(f"{'n':>3} {'eps':>8} {'min F-f':>10} {'max F-f':>10} {'cells':>6}")
    for n, a in enumerate(gs.approximations, start=1):
        print(f"{n:>3} {a.eps:>8.4f} {min(a.residual_lo):>10.5f} {max(a.residual_hi):>10.5f} "
              f"{a.grid.ncells:>6}")
    c = gs.certificate
    print(f"certificate ok={c.ok} final gap={c.final_gap} tol={c.tol}")
    print(f"T-image Cauchy ok={gs.cauchy.ok} envelope gap={gs.cauchy.final_gap:.4f}")
    for r in gs.regularity:
        print(f"derivative {r.alpha}: Cauchy={r.cauchy} gap={r.gap:.4f}")


if __name__ == "__main__":
    main()
