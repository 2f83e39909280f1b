from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from varform.jetcore import (
    DomainError,
    EvaluationError,
    Expr,
    JetSpace,
    apply_function,
    max_jet_order,
    mi_add,
    partial,
    render,
    total_derivative,
    total_derivative_multi,
)
from varform.testing import random_expr

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def test_mi_add_examples():
    assert mi_add((0, 0), 0) == (1, 0)
    assert mi_add((1, 1), 1) == (1, 2)
    with pytest.raises(DomainError):
        mi_add((0, 0), 2)
    with pytest.raises(DomainError):
        mi_add((0, 0), -1)


@given(st.lists(st.integers(0, 4), min_size=3, max_size=3), st.integers(0, 2), st.integers(0, 2))
def test_mi_add_commutes(index, mu, nu):
    index = tuple(index)
    assert mi_add(mi_add(index, mu), nu) == mi_add(mi_add(index, nu), mu)
    assert sum(mi_add(index, mu)) == sum(index) + 1


def test_jet_names_are_order_insensitive(plane):
    assert plane.u("u", "tx") == plane.u("u", "xt")
    assert plane.jet_symbol("u", "xt").index == (1, 1)
    with pytest.raises(DomainError):
        plane.index("ty")


def test_partial_examples(mech, plane):
    u_t = mech.u("u", "t")
    assert partial(u_t * u_t, mech.jet_symbol("u", "t")) == 2 * u_t
    assert partial(mech.u("u", "tt"), mech.jet_symbol("u", "t")).is_zero
    g = plane.background("g00")
    u = plane.u("u")
    got = partial(g * u**2, plane.coord("t"))
    assert got == plane.background("g00", index="t") * u**2
    assert render(got) == "u^2*g00_t"


def test_background_depends_only_on_declared_coordinates(plane):
    rho = plane.background("rho", deps=["x"])
    assert total_derivative(rho, 0).is_zero
    assert total_derivative(rho, 1) == plane.background("rho", deps=["x"], index="x")
    assert partial(rho, plane.jet_symbol("u")).is_zero


def test_total_derivative_examples(mech, plane):
    u, u_t, u_tt = mech.u("u"), mech.u("u", "t"), mech.u("u", "tt")
    assert total_derivative(u * u_t, 0) == u_t**2 + u * u_tt
    assert total_derivative(plane.param("c"), 1).is_zero
    w = plane.u("u")
    assert (total_derivative(total_derivative(w, 1), 0) - total_derivative(total_derivative(w, 0), 1)).is_zero


def test_total_derivative_multi_examples(plane):
    e = plane.u("u", "x") * plane.x("t")
    assert total_derivative_multi(e, (0, 0)) == e
    assert total_derivative_multi(plane.u("u"), (2, 0)) == plane.u("u", "tt")


def test_max_jet_order_examples(plane):
    u = plane.u("u")
    assert max_jet_order(plane.u("u", "t") ** 2 + u) == 1
    assert max_jet_order(Expr.const(5)) == 0
    assert max_jet_order(plane.u("u", "ttx") * plane.u("u", "x")) == 3


def test_normal_form_collects_and_cancels(plane):
    u, v = plane.u("u"), plane.u("u", "t")
    assert (u * v - v * u).is_zero
    assert u + u == 2 * u
    assert (u + v) ** 2 == u**2 + 2 * u * v + v**2
    assert (u / u) == Expr.const(1)
    assert Expr.const(Fraction(1, 2)) * 2 == Expr.const(1)


def test_rendering_uses_canonical_order(plane):
    e = plane.param("c") * plane.u("u", "x") + plane.x("t") * plane.u("u") - 3
    assert render(e) == render(plane.u("u") * plane.x("t") + plane.u("u", "x") * plane.param("c") - 3)


def test_functions_differentiate(mech):
    t = mech.x(0)
    s = apply_function("sin", 2 * t)
    assert total_derivative(s, 0) == 2 * apply_function("cos", 2 * t)
    assert apply_function("sin", Expr.const(0)).is_zero
    assert apply_function("exp", Expr.const(0)) == Expr.const(1)
    assert apply_function("sqrt", Expr.const(Fraction(9, 4))) == Expr.const(Fraction(3, 2))


def test_division_by_zero_is_reported(mech):
    with pytest.raises((ZeroDivisionError, EvaluationError)):
        mech.u("u") / Expr()


def test_evaluation_rejects_singular_points(mech):
    e = apply_function("ln", mech.x(0))
    with pytest.raises(EvaluationError):
        e.evaluate({mech.coord(0): -1.0})


def _space(rng):
    return JetSpace(("t", "x")[: rng.randint(1, 2)], ("u", "v")[: rng.randint(1, 2)])


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_normalization_is_idempotent(seed):
    rng = random.Random(seed)
    e = random_expr(rng, _space(rng), max_order=3, max_terms=4)
    again = Expr(dict(e.terms))
    assert again == e and again.key == e.key
    assert (e - e).is_zero


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_partials_commute(seed):
    rng = random.Random(seed)
    sp = _space(rng)
    e = random_expr(rng, sp, max_order=2, max_terms=4, transcendental=0.2)
    syms = [sp.jet_symbol(f, i) for f in sp.fields for i in [None, (1,) + (0,) * (sp.dim - 1)]]
    syms.append(sp.coord(0))
    s1, s2 = rng.choice(syms), rng.choice(syms)
    assert partial(partial(e, s1), s2) == partial(partial(e, s2), s1)


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_total_derivatives_commute(seed):
    rng = random.Random(seed)
    sp = _space(rng)
    e = random_expr(rng, sp, max_order=3, max_terms=3, transcendental=0.2)
    mu, nu = rng.randrange(sp.dim), rng.randrange(sp.dim)
    assert total_derivative(total_derivative(e, mu), nu) == total_derivative(total_derivative(e, nu), mu)


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_leibniz_rule(seed):
    rng = random.Random(seed)
    sp = _space(rng)
    a = random_expr(rng, sp, max_order=2, transcendental=0.2)
    b = random_expr(rng, sp, max_order=2, transcendental=0.2)
    mu = rng.randrange(sp.dim)
    assert total_derivative(a * b, mu) == total_derivative(a, mu) * b + a * total_derivative(b, mu)


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_total_derivative_raises_order_by_at_most_one(seed):
    rng = random.Random(seed)
    sp = _space(rng)
    e = random_expr(rng, sp, max_order=3)
    assert max_jet_order(total_derivative(e, rng.randrange(sp.dim))) <= max_jet_order(e) + 1


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_multi_derivative_is_order_independent(seed):
    rng = random.Random(seed)
    sp = JetSpace(["t", "x"], ["u"])
    e = random_expr(rng, sp, max_order=2)
    assert total_derivative(total_derivative(e, 0), 1) == total_derivative_multi(e, (1, 1))
    assert total_derivative(total_derivative(e, 1), 0) == total_derivative_multi(e, (1, 1))
