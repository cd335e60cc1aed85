import numpy as np

from ordercomp.nlsc import Grid, Infinite, NlscFunction, Poly, monomials


def random_grid(rng, n=None):
    n = n or int(rng.integers(1, 3))
    nodes = []
    for _ in range(n):
        c = int(rng.integers(1, 5))
        inner = np.sort(rng.uniform(-1, 1, c - 1)) if c > 1 else np.array([])
        ax = np.concatenate([[-1.0], inner, [1.0]])
        if np.any(np.diff(ax) < 1e-3):
            ax = np.linspace(-1, 1, c + 1)
        nodes.append(tuple(float(v) for v in ax))
    return Grid(tuple(nodes))


def random_cellwise(rng, grid=None, degree=2, rule=None, infinite=False):
    """Independent random polynomial per cell; values jump across faces."""
    grid = grid or random_grid(rng)
    pieces = []
    for k in range(grid.ncells):
        if infinite and rng.random() < 0.1:
            pieces.append(Infinite(1))
            continue
        d = int(rng.integers(0, degree + 1))
        coeffs = tuple(float(v) for v in np.round(rng.normal(size=len(monomials(grid.n, d))), 3))
        pieces.append(Poly(tuple(grid.cell_center(k)), coeffs, d))
    rule = rule or ("lower" if rng.random() < 0.5 else "upper")
    return NlscFunction(grid, tuple(pieces), rule=rule)


ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
