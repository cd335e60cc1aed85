"""Text dumps of cellwise functions (format ``NLSCF 1``).

Layout of one block::

    NLSCF 1 <n> <degree> <cells...>
    AXIS <i> <node> <node> ...          one line per axis
    RULE lower|upper
    <cell> FIN <coeffs>                 one line per cell, C order
    <cell> INF +|-
    <cell> MAX ( <piece> ) ( <piece> )  MIN likewise; pieces nest
    SINGULAR
    F <axis> <index>
    V <cell> <coeffs>
    P <coords>
    END

Cell and face indices are comma-separated multi-indices.  Coefficients
are in graded-lex order of the local monomials ``(x - cell centre)^e``.
A file may hold several blocks, one per component.
"""

from __future__ import annotations

import math

from .nlsc import Grid, Infinite, NlscFunction, Offset, Poly, Select, SingularSet, monomials

MAGIC = "NLSCF"
VERSION = "1"


class DumpFormatError(ValueError):
    pass


def fmt(v: float) -> str:
    return format(float(v), ".17g")


def _idx(t) -> str:
    return ",".join(str(int(i)) for i in t)


def _poly_degree(p) -> int:
    if isinstance(p, Poly):
        return p.degree
    if isinstance(p, Select):
        return max(_poly_degree(p.a), _poly_degree(p.b))
    if isinstance(p, Offset):
        return _poly_degree(p.base)
    return 0


def _piece_tokens(p, degree: int) -> list[str]:
    if isinstance(p, Offset) and isinstance(p.base, Poly):
        q = p.base.padded(degree)
        return ["FIN", fmt(q.coeffs[0] + p.shift)] + [fmt(c) for c in q.coeffs[1:]]
    if isinstance(p, Poly):
        return ["FIN"] + [fmt(c) for c in p.padded(degree).coeffs]
    if isinstance(p, Infinite):
        return ["INF", "+" if p.sign > 0 else "-"]
    if isinstance(p, Select):
        return ([p.mode.upper(), "("] + _piece_tokens(p.a, degree) + [")", "("]
                + _piece_tokens(p.b, degree) + [")"])
    raise DumpFormatError(f"{type(p).__name__} pieces have no text form")


def dumps(u: NlscFunction) -> str:
    g = u.grid
    degree = max(_poly_degree(p) for p in u.pieces)
    for _, p in u.singular.varieties:
        if not isinstance(p, Poly):
            raise DumpFormatError("non-polynomial variety cannot be written")
        degree = max(degree, p.degree)
    lines = [" ".join([MAGIC, VERSION, str(g.n), str(degree)] + [str(s) for s in g.shape])]
    for i, ax in enumerate(g.nodes):
        lines.append(" ".join(["AXIS", str(i)] + [fmt(v) for v in ax]))
    lines.append(f"RULE {u.rule}")
    for k, p in enumerate(u.pieces):
        lines.append(" ".join([_idx(g.multi(k))] + _piece_tokens(p, degree)))
    lines.append("SINGULAR")
    for axis, idx in u.singular.faces:
        lines.append(f"F {axis} {_idx(idx)}")
    for cell, p in u.singular.varieties:
        lines.append(" ".join(["V", _idx(g.multi(cell))] + [fmt(c) for c in p.padded(degree).coeffs]))
    for pt in u.singular.points:
        lines.append(" ".join(["P"] + [fmt(c) for c in pt]))
    lines.append("END")
    return "\n".join(lines) + "\n"


def dumps_many(us) -> str:
    return "".join(dumps(u) for u in us)


def _float(tok: str, lineno: int) -> float:
    try:
        v = float(tok)
    except ValueError:
        raise DumpFormatError(f"line {lineno}: bad number {tok!r}") from None
    if not math.isfinite(v):
        raise DumpFormatError(f"line {lineno}: non-finite coefficient")
    return v


def _parse_piece(toks: list[str], pos: int, center, degree: int, lineno: int):
    nco = len(monomials(len(center), degree))
    if pos >= len(toks):
        raise DumpFormatError(f"line {lineno}: missing piece")
    head = toks[pos]
    if head == "FIN":
        vals = toks[pos + 1 : pos + 1 + nco]
        if len(vals) != nco or any(v in ("(", ")") for v in vals):
            raise DumpFormatError(f"line {lineno}: expected {nco} coefficients")
        return Poly(center, tuple(_float(v, lineno) for v in vals), degree), pos + 1 + nco
    if head == "INF":
        if pos + 1 >= len(toks) or toks[pos + 1] not in "+-":
            raise DumpFormatError(f"line {lineno}: INF needs + or -")
        return Infinite(1 if toks[pos + 1] == "+" else -1), pos + 2
    if head in ("MAX", "MIN"):
        parts = []
        pos += 1
        for _ in range(2):
            if pos >= len(toks) or toks[pos] != "(":
                raise DumpFormatError(f"line {lineno}: expected '('")
            p, pos = _parse_piece(toks, pos + 1, center, degree, lineno)
            if pos >= len(toks) or toks[pos] != ")":
                raise DumpFormatError(f"line {lineno}: expected ')'")
            parts.append(p)
            pos += 1
        return Select(parts[0], parts[1], head.lower()), pos
    raise DumpFormatError(f"line {lineno}: unknown piece kind {head!r}")


def _multi(tok: str, lineno: int) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in tok.split(","))
    except ValueError:
        raise DumpFormatError(f"line {lineno}: bad index {tok!r}") from None


def loads_many(text: str) -> list[NlscFunction]:
    lines = text.splitlines()
    out = []
    i = 0
    while i < len(lines):
        if not lines[i].strip():
            i += 1
            continue
        u, i = _load_block(lines, i)
        out.append(u)
    if not out:
        raise DumpFormatError("no NLSCF block found")
    return out


def loads(text: str) -> NlscFunction:
    us = loads_many(text)
    if len(us) != 1:
        raise DumpFormatError(f"expected one block, found {len(us)}")
    return us[0]


def _load_block(lines: list[str], i: int):
    def line(j):
        if j >= len(lines):
            raise DumpFormatError("truncated dump")
        return lines[j].split()

    head = line(i)
    if len(head) < 4 or head[0] != MAGIC:
        raise DumpFormatError(f"line {i + 1}: missing NLSCF header")
    if head[1] != VERSION:
        raise DumpFormatError(f"unsupported NLSCF version {head[1]}")
    try:
        n, degree = int(head[2]), int(head[3])
        shape = tuple(int(t) for t in head[4:])
    except ValueError:
        raise DumpFormatError(f"line {i + 1}: malformed header") from None
    if len(shape) != n:
        raise DumpFormatError(f"line {i + 1}: {len(shape)} cell counts for dimension {n}")
    i += 1
    nodes = []
    for axis in range(n):
        toks = line(i)
        if toks[:2] != ["AXIS", str(axis)]:
            raise DumpFormatError(f"line {i + 1}: expected AXIS {axis}")
        ax = tuple(_float(t, i + 1) for t in toks[2:])
        if len(ax) != shape[axis] + 1:
            raise DumpFormatError(f"line {i + 1}: node count does not match cells")
        nodes.append(ax)
        i += 1
    try:
        grid = Grid(tuple(nodes))
    except ValueError as exc:
        raise DumpFormatError(str(exc)) from None
    toks = line(i)
    if len(toks) != 2 or toks[0] != "RULE" or toks[1] not in ("lower", "upper"):
        raise DumpFormatError(f"line {i + 1}: expected RULE lower|upper")
    rule = toks[1]
    i += 1
    pieces = []
    for k in range(grid.ncells):
        toks = line(i)
        if toks and toks[0] == "SINGULAR":
            raise DumpFormatError(f"line {i + 1}: only {k} of {grid.ncells} cells present")
        cell = _multi(toks[0], i + 1)
        if cell != grid.multi(k):
            raise DumpFormatError(f"line {i + 1}: expected cell {_idx(grid.multi(k))}")
        p, pos = _parse_piece(toks, 1, tuple(grid.cell_center(k)), degree, i + 1)
        if pos != len(toks):
            raise DumpFormatError(f"line {i + 1}: trailing tokens")
        pieces.append(p)
        i += 1
    if line(i) != ["SINGULAR"]:
        raise DumpFormatError(f"line {i + 1}: expected SINGULAR")
    i += 1
    faces, varieties, points = [], [], []
    while True:
        toks = line(i)
        if toks == ["END"]:
            i += 1
            break
        kind = toks[0] if toks else ""
        if kind == "F" and len(toks) == 3:
            faces.append((int(toks[1]), _multi(toks[2], i + 1)))
        elif kind == "V":
            cell = grid.flat(_multi(toks[1], i + 1))
            p, pos = _parse_piece(["FIN"] + toks[2:], 0, tuple(grid.cell_center(cell)), degree, i + 1)
            if pos != len(toks) - 1:
                raise DumpFormatError(f"line {i + 1}: trailing tokens")
            varieties.append((cell, p))
        elif kind == "P":
            points.append(tuple(_float(t, i + 1) for t in toks[1:]))
        else:
            raise DumpFormatError(f"line {i + 1}: unknown singular entry")
        i += 1
    try:
        singular = SingularSet(tuple(faces), tuple(varieties), tuple(points))
    except ValueError as exc:
        raise DumpFormatError(str(exc)) from None
    return NlscFunction(grid, tuple(pieces), singular, rule=rule), i


def dump(u: NlscFunction, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(u))


def load(path) -> list[NlscFunction]:
    with open(path) as fh:
        return loads_many(fh.read())
