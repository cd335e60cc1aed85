import itertools
from fractions import Fraction as Q

import pytest
from hypothesis import given, settings, strategies as st

from ordercomp.lab import (
    PI,
    SQRT2,
    Approximants,
    Atom,
    Const,
    Custom,
    EmptyTraceError,
    Harmonic,
    Periodic,
    StructuralError,
    SymReal,
    TaggedSet,
    adherence_contains,
    characterization,
    converges_in_product_of_completions,
    converges_in_QQsharp,
    converges_in_Qsharp,
    filter_refines,
    image_filter,
    is_cauchy_metric,
    is_subset,
    meet_filter,
    neighborhood,
    parse_symreal,
    principal,
    product_filter,
    refinement,
    sequence_tail,
    trace_filter,
)
from ordercomp.lab.catalog import (
    CatalogError,
    build_base,
    evaluate,
    format_table,
    load_default,
    parse_catalog,
    run_catalog,
)
from ordercomp.lab.symreal import UndecidedComparison, enclosure

ZERO = SymReal(0)
H = sequence_tail(Harmonic(ZERO), Const(PI))


# --- exact reals ---------------------------------------------------------------


def test_enclosures_nested_and_shrinking():
    for tag in ("sqrt2", "pi", "e"):
        prev = None
        for k in range(1, 40):
            lo, hi = enclosure(tag, k)
            assert hi - lo == Q(1, 10**k)
            if prev:
                assert prev[0] <= lo and hi <= prev[1]
            prev = (lo, hi)


def test_symreal_comparisons():
    assert Q(141, 100) < SQRT2 < Q(142, 100)
    assert PI > 3 and PI < Q(22, 7)
    assert SymReal.const("e") < PI
    assert 0 < parse_symreal("sqrt2/2") < 1
    assert parse_symreal("pi - pi") == 0
    assert SQRT2 * 2 - SQRT2 == SQRT2
    assert (PI * 100).floor() == 314


def test_symreal_parse_errors():
    for bad in ("", "sqrt3", "pi*pi", "(1", "1 2"):
        with pytest.raises(ValueError):
            parse_symreal(bad)


def test_symreal_undecided_is_reported():
    # pi minus a 450-digit truncation of itself is below the enclosure budget
    gap = PI - SymReal(enclosure("pi", 450)[0])
    with pytest.raises(UndecidedComparison):
        gap.sign()


# --- tag algebra ----------------------------------------------------------------


def test_full_interval_not_inside_rational_set():
    A = TaggedSet.of_atoms([Atom.open(0, 1)])
    B = TaggedSet.of_atoms([Atom.closed(-1, 2, rational=True)])
    assert not is_subset(A, B)
    assert is_subset(A.rationals(), A)
    assert is_subset(B.intersect(A), A)


def test_canonical_form_sorted_disjoint():
    S = TaggedSet.of_atoms([Atom.open(2, 3), Atom.open(0, 1), Atom.closed(Q(1, 2), 2),
                            Atom.open(5, 6, True), Atom.point(SQRT2 + 4)])
    los = [b[0].lo for b in S.boxes]
    assert los == sorted(los)
    assert len(S.components) == 2
    assert S.extra_points and S.contains(SQRT2 + 4)
    assert S.contains(2)
    assert S.contains(Q(11, 2)) and not S.contains(SQRT2 + Q(7, 2) + 2)


_ENDS = [Q(k, 4) for k in range(-8, 9)] + [SQRT2 - 1, SQRT2, PI - 3]


@st.composite
def raw_atoms(draw):
    out = []
    for _ in range(draw(st.integers(1, 4))):
        a, b = sorted(draw(st.sampled_from(_ENDS)) for _ in range(2))
        kind = draw(st.sampled_from(["open", "closed", "lopen", "point"]))
        rational = draw(st.booleans())
        if kind == "point":
            out.append(Atom.point(a))
        else:
            lc, hc = {"open": (False, False), "closed": (True, True), "lopen": (False, True)}[kind]
            out.append(Atom(a, b, lc, hc, rational))
    return out


def _oracle_member(raw, p) -> bool:
    """Membership from the defining atoms, without canonical form or covering."""
    pv = SymReal.of(p)
    for a in raw:
        lo, hi = a.lo.c, a.hi.c
        if not (lo < pv or (a.lo_closed and lo == pv)):
            continue
        if not (pv < hi or (a.hi_closed and hi == pv)):
            continue
        if a.rational and not pv.is_rational:
            continue
        return True
    return False


_PROBES = ([Q(k, 8) for k in range(-20, 21)] + [Q(k, 7) for k in range(-14, 15)]
           + [SQRT2 + Q(k, 8) for k in range(-20, 8)] + [PI - 3 + Q(k, 8) for k in range(-8, 8)]
           + [SQRT2 * Q(1, 2)] + list(_ENDS))


@settings(max_examples=120, deadline=None)
@given(raw_atoms(), raw_atoms())
def test_tag_algebra_soundness(ra, rb):
    # ~10^4 probe points across the run
    A, B = TaggedSet.of_atoms(ra), TaggedSet.of_atoms(rb)
    sub = is_subset(A, B)
    members_a = [p for p in _PROBES if _oracle_member(ra, p)]
    for p in members_a:
        assert A.contains(p)
        if sub:
            assert _oracle_member(rb, p), (str(A), str(B), p)
    for p in _PROBES:
        assert A.contains(p) == _oracle_member(ra, p)
    if not sub:
        # a witness exists among rational or irrational points near the gap
        assert not is_subset(A, B)


@settings(max_examples=60, deadline=None)
@given(raw_atoms(), raw_atoms())
def test_intersection_and_union_membership(ra, rb):
    A, B = TaggedSet.of_atoms(ra), TaggedSet.of_atoms(rb)
    I, U = A.intersect(B), A.union(B)
    for p in _PROBES:
        assert I.contains(p) == (A.contains(p) and B.contains(p))
        assert U.contains(p) == (A.contains(p) or B.contains(p))
    assert is_subset(I, A) and is_subset(A, U)


# --- filters: worked examples -------------------------------------------------------


def test_refines_examples():
    assert filter_refines(sequence_tail(Harmonic(ZERO)), neighborhood(0, trace=True))
    assert not filter_refines(neighborhood(0), meet_filter(neighborhood(0, True), principal(0)))
    # every ball around 0 contains {0}, so the point filter is the finer one
    assert filter_refines(principal(0), neighborhood(0))
    assert not filter_refines(neighborhood(0), principal(0))


def test_cauchy_examples():
    assert is_cauchy_metric(neighborhood(SQRT2, True))
    assert not is_cauchy_metric(principal(TaggedSet.of_atoms([Atom.open(0, 1)])))
    assert is_cauchy_metric(H)
    assert not is_cauchy_metric(sequence_tail(Periodic((SymReal(1), SymReal(-1)))))
    assert is_cauchy_metric(product_filter(neighborhood(0, True), neighborhood(1, True)))


def test_q_sharp_verdicts():
    assert not converges_in_Qsharp(neighborhood(SQRT2), SQRT2)
    assert converges_in_Qsharp(characterization(SQRT2), SQRT2)
    approx = meet_filter(sequence_tail(Approximants(SQRT2)), principal(SQRT2))
    assert converges_in_Qsharp(approx, SQRT2)
    assert not converges_in_Qsharp(sequence_tail(Harmonic(SQRT2)), SQRT2)
    assert converges_in_Qsharp(trace_filter(neighborhood(SQRT2)), SQRT2)


def test_product_and_square_verdicts():
    assert converges_in_product_of_completions(H, (0, PI))
    assert not converges_in_QQsharp(H, (0, PI))
    assert converges_in_product_of_completions(principal([(0, 0)]), (0, 0))
    alt = sequence_tail(Harmonic(ZERO), Periodic((SymReal(1), SymReal(-1))))
    assert not converges_in_product_of_completions(alt, (0, 1))
    assert converges_in_QQsharp(principal([(0, PI)]), (0, PI))
    assert converges_in_QQsharp(sequence_tail(Harmonic(ZERO), Harmonic(ZERO)), (0, 0))


def test_trace_and_adherence():
    t = trace_filter(neighborhood(SQRT2))
    assert is_cauchy_metric(t)
    with pytest.raises(EmptyTraceError):
        trace_filter(principal(PI))
    assert adherence_contains(TaggedSet.of_atoms([Atom.open(0, 1, True)]), parse_symreal("sqrt2/2"))
    assert adherence_contains(sequence_tail(Harmonic(ZERO)), 0)
    assert adherence_contains(sequence_tail(Harmonic(ZERO)), Q(1, 3))
    assert not adherence_contains(sequence_tail(Harmonic(ZERO)), Q(2, 3))
    assert not adherence_contains(TaggedSet.of_atoms([Atom.open(0, 1)]), 2)
    assert adherence_contains(TaggedSet.of_atoms([Atom.open(0, 1)]), 1)


def test_images():
    assert converges_in_Qsharp(image_filter(H, "proj2"), PI)
    diag = image_filter(sequence_tail(Harmonic(ZERO)), "pair")
    assert converges_in_QQsharp(diag, (0, 0))
    with pytest.raises(StructuralError):
        image_filter(neighborhood(0), "proj1")


def test_custom_bases_are_bounded_depth():
    shrink = Custom(lambda k: TaggedSet.of_atoms([Atom.open(SymReal(-Q(1, k)), SymReal(Q(1, k)))]))
    v = refinement(shrink, neighborhood(0))
    assert v.value and not v.exact and v.depth == 64
    assert refinement(neighborhood(0), neighborhood(0, True)).exact
    grow = Custom(lambda k: TaggedSet.of_atoms([Atom.open(-k, k)]))
    with pytest.raises(StructuralError):
        filter_refines(grow, neighborhood(0))
    with pytest.raises(StructuralError):
        filter_refines(shrink, sequence_tail(Harmonic(ZERO)))


def test_empty_principal_rejected():
    with pytest.raises(StructuralError):
        principal(TaggedSet.of_atoms([]))


# --- catalog-level properties --------------------------------------------------------

BASES_1D = [
    "nbhd(0)", "nbhd(0, trace)", "char(0)", "nbhd(sqrt2)", "nbhd(sqrt2, trace)", "char(sqrt2)",
    "tail(harm(0))", "tail(harm(0, -1))", "tail(approx(sqrt2))", "tail(periodic(1, -1))",
    "tail(harm(sqrt2))", "principal(pts(0))", "principal(pts(sqrt2))", "principal(open(0, 1))",
    "principal(ratopen(0, 1))", "meet(tail(harm(0)), principal(pts(0)))",
    "meet(tail(approx(sqrt2)), principal(pts(sqrt2)))", "trace(nbhd(sqrt2))", "trace(nbhd(0))",
    "image(tail(harm(0), const(pi)), proj2)", "nbhd(pi)",
]
BASES_2D = [
    "tail(harm(0), const(pi))", "tail(harm(0), harm(0))", "char((0, pi))", "nbhd((0, pi))",
    "nbhd((0, pi), trace)", "principal(pts((0, pi)))", "product(nbhd(0, trace), nbhd(pi, trace))",
    "product(tail(harm(0)), principal(pts(pi)))", "image(tail(harm(0)), pair)",
    "trace(nbhd((0, 0)))", "tail(harm(0), periodic(1, -1))", "char((0, 0))",
]


@pytest.fixture(scope="module")
def cat1():
    return [build_base(t) for t in BASES_1D]


@pytest.fixture(scope="module")
def cat2():
    return [build_base(t) for t in BASES_2D]


def _matrix(bases):
    return [[filter_refines(a, b) for b in bases] for a in bases]


def test_refinement_is_a_preorder(cat1, cat2):
    for bases in (cat1, cat2):
        R = _matrix(bases)
        n = len(bases)
        assert all(R[i][i] for i in range(n))
        for i, j, k in itertools.product(range(n), repeat=3):
            if R[i][j] and R[j][k]:
                assert R[i][k], (i, j, k)


def test_cauchy_preservation(cat1, cat2):
    for bases in (cat1, cat2):
        for F, G in itertools.product(bases, repeat=2):
            if is_cauchy_metric(F) and filter_refines(G, F):
                assert is_cauchy_metric(meet_filter(F, G))
    for F, G in itertools.product(cat1, repeat=2):
        if is_cauchy_metric(F) and is_cauchy_metric(G):
            assert is_cauchy_metric(product_filter(F, G))


def test_completion_comparison(cat2):
    for F in cat2:
        for p in ((ZERO, PI), (ZERO, ZERO), (ZERO, SymReal(1))):
            if converges_in_QQsharp(F, p):
                assert converges_in_product_of_completions(F, p)
    assert converges_in_product_of_completions(H, (0, PI)) and not converges_in_QQsharp(H, (0, PI))


def test_subspace_comparison(cat1):
    for F in cat1:
        for x in (ZERO, SQRT2, PI):
            if converges_in_Qsharp(F, x):
                try:
                    T = trace_filter(F)
                except EmptyTraceError:
                    continue
                assert is_cauchy_metric(T)
    N = neighborhood(SQRT2)
    assert is_cauchy_metric(trace_filter(N)) and not converges_in_Qsharp(N, SQRT2)


# --- catalog file ----------------------------------------------------------------------


def test_default_catalog_passes():
    outcomes = run_catalog(load_default())
    assert outcomes and all(o.passed for o in outcomes)
    names = {o.scenario.name for o in outcomes}
    assert {"qr_nbhd_full", "qr_char", "kent_product", "kent_square"} <= names


def test_catalog_grammar_errors():
    with pytest.raises(CatalogError):
        parse_catalog("a | nbhd(0) | cauchy")
    with pytest.raises(CatalogError):
        run_catalog(parse_catalog("a | blob(0) | cauchy | true"))
    with pytest.raises(CatalogError):
        evaluate("nbhd(0)", "maybe")
    assert run_catalog(parse_catalog("# only comments\n\n")) == []
    assert "0/0" in format_table([])


def test_catalog_trace_exists_predicate():
    assert evaluate("trace(principal(pts(pi)))", "trace_exists") is False
    assert evaluate("trace(nbhd(pi))", "trace_exists") is True
