import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ordercomp.expr import (
    Bin,
    Call,
    ExprDomainError,
    Jet,
    Neg,
    Num,
    ParseError,
    XVar,
    compile_expr,
    diff,
    jet_variables,
    parse_expression,
    to_text,
    x_variables,
)
from ordercomp.pde import JetSpec

SPEC = JetSpec(2, 2, 2)


def test_precedence_and_unary_minus():
    e = parse_expression("1 + 2 * x1 ^ 2", 2, 2, 2)
    assert e == Bin("+", Num(1.0), Bin("*", Num(2.0), Bin("^", XVar(1), Num(2.0))))
    # unary minus binds tighter than ^
    assert parse_expression("-x1^2", 2) == Bin("^", Neg(XVar(1)), Num(2.0))
    assert parse_expression("2^3^2", 2) == Bin("^", Num(2.0), Bin("^", Num(3.0), Num(2.0)))
    assert parse_expression("x1 - x2 - 1", 2) == Bin("-", Bin("-", XVar(1), XVar(2)), Num(1.0))


def test_jet_variables():
    e = parse_expression("(D[1,0]u1)^2 + D[0,1]u2 * u1", 2, 1, 2)
    assert jet_variables(e) == {Jet((1, 0), 1), Jet((0, 1), 2), Jet((0, 0), 1)}
    assert x_variables(parse_expression("sin(x2) + x1", 2)) == {1, 2}


@pytest.mark.parametrize("text,offset,fragment", [
    ("", 0, "empty"),
    ("1 + ", 4, "unexpected end of input"),
    ("sin x1", 4, "expected '('"),
    ("D[3]u1", 0, "exceeds m=2"),
    ("x1 $ 2", 3, "unexpected character"),
    ("x3", 0, "unknown domain variable"),
    ("(x1", 3, "expected ')'"),
    ("u3", 0, "unknown component"),
])
def test_parse_errors_carry_offsets(text, offset, fragment):
    n = 2 if text in ("x3",) else 1
    with pytest.raises(ParseError) as ei:
        parse_expression(text, n, 2, 2)
    assert ei.value.offset == offset
    assert fragment in str(ei.value)


def test_canonical_printing():
    assert to_text(parse_expression("(D[1]u1)^2", 1, 1, 1)) == "D[1]u1^2"
    assert to_text(parse_expression("(x1 + 1) * (x1 - 1)", 1)) == "(x1 + 1) * (x1 - 1)"
    assert to_text(parse_expression("x1 - (1 - x1)", 1)) == "x1 - (1 - x1)"
    assert to_text(parse_expression("-(x1 + 1)", 1)) == "-(x1 + 1)"


_leaf = st.one_of(
    st.integers(0, 9).map(lambda v: Num(float(v))),
    st.sampled_from([Num(0.5), Num(2.5e-3)]),
    st.integers(1, 2).map(XVar),
    st.sampled_from(SPEC.variables()),
)


def _extend(children):
    return st.one_of(
        children.map(Neg),
        st.tuples(st.sampled_from("+-*/^"), children, children).map(lambda t: Bin(*t)),
        st.tuples(st.sampled_from(["sin", "cos", "exp", "tanh"]), children).map(lambda t: Call(*t)),
    )


exprs = st.recursive(_leaf, _extend, max_leaves=12)


@settings(max_examples=300, deadline=None)
@given(exprs)
def test_print_parse_round_trip(e):
    assert parse_expression(to_text(e), 2, 2, 2) == e


def _numeric_diff(fn, X, J, col, h=1e-6):
    Jp, Jm = J.copy(), J.copy()
    Jp[:, col] += h
    Jm[:, col] -= h
    return (fn(X, Jp) - fn(X, Jm)) / (2 * h)


_smooth = st.recursive(
    _leaf,
    lambda c: st.one_of(
        c.map(Neg),
        st.tuples(st.sampled_from("+-*"), c, c).map(lambda t: Bin(*t)),
        st.tuples(c, st.integers(2, 3)).map(lambda t: Bin("^", t[0], Num(float(t[1])))),
        st.tuples(st.sampled_from(["sin", "cos", "tanh"]), c).map(lambda t: Call(*t)),
    ),
    max_leaves=8,
)


@settings(max_examples=150, deadline=None)
@given(_smooth, st.sampled_from(SPEC.variables()))
def test_symbolic_derivative_matches_central_difference(e, var):
    rng = np.random.default_rng(0)
    X = rng.uniform(-1, 1, (5, 2))
    J = rng.uniform(-1, 1, (5, SPEC.M))
    f = compile_expr(e, SPEC.index)
    d = compile_expr(diff(e, var), SPEC.index)
    got = d(X, J)
    want = _numeric_diff(f, X, J, SPEC.index[var])
    assert np.allclose(got, want, rtol=1e-4, atol=1e-4 * (1 + np.max(np.abs(want))))


def test_compiled_evaluation_vectorised():
    e = parse_expression("x1 * D[1,0]u1 + cos(x2)", 2, 1, 1)
    spec = JetSpec(2, 1, 1)
    fn = compile_expr(e, spec.index)
    X = np.array([[1.0, 0.0], [2.0, math.pi]])
    J = np.array([[0.0, 3.0, 0.0], [0.0, 1.0, 0.0]])
    assert np.allclose(fn(X, J), [3.0 + 1.0, 2.0 - 1.0])


def test_domain_guards():
    spec = JetSpec(1, 1, 0)
    X = np.array([[0.0]])
    J = np.array([[-1.0]])
    for text in ("log(u1)", "sqrt(u1)", "1 / x1"):
        fn = compile_expr(parse_expression(text, 1, 0, 1), spec.index)
        with pytest.raises(ExprDomainError):
            fn(X, J)
