from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from varform.eulerlag import (
    Shell,
    ShellError,
    SourceForm,
    euler_lagrange,
    euler_lagrange_via_interior,
    ibp_theta,
    interior_euler,
    shell_reduce,
    theta_first_order,
)
from varform.forms import BiForm, DegreeError, d_H, d_V, wedge
from varform.jetcore import JetSpace, total_derivative
from varform.testing import random_form, random_lagrangian

seeds = st.integers(min_value=0, max_value=2**32 - 1)
half = Fraction(1, 2)


def test_interior_euler_single_integration_by_parts():
    sp = JetSpace(["x"], ["u"])
    dx = BiForm.dx(sp, "x")
    omega = wedge(BiForm.theta(sp, "u", "x"), dx).scale(sp.u("u", "x"))
    expected = wedge(BiForm.theta(sp, "u"), dx).scale(-sp.u("u", "xx"))
    assert interior_euler(omega) == expected


def test_interior_euler_degree_errors(plane):
    with pytest.raises(DegreeError):
        interior_euler(BiForm.volume(plane, plane.u("u")))
    with pytest.raises(DegreeError):
        interior_euler(BiForm.theta(plane, "u"))


def test_interior_euler_fixes_source_forms(plane):
    src = SourceForm.make(plane, {"u": plane.u("u", "tt") - plane.u("u") ** 3})
    form = src.as_form()
    assert interior_euler(form) == form
    assert SourceForm.from_form(form) == src


def test_euler_lagrange_examples(mech, plane):
    assert euler_lagrange(BiForm.volume(mech, mech.u("u", "t") ** 2))["u"] == -2 * mech.u("u", "tt")
    u = plane.u("u")
    L = BiForm.volume(plane, half * (plane.u("u", "t") ** 2 - plane.u("u", "x") ** 2 - u**2))
    assert euler_lagrange(L)["u"] == -plane.u("u", "tt") + plane.u("u", "xx") - u


def test_euler_lagrange_of_divergence_vanishes(plane):
    K = BiForm.codim_one(plane, {0: plane.u("u") * plane.u("u", "x"), 1: plane.u("u", "t") ** 3})
    assert euler_lagrange(d_H(K)).is_zero


def test_electromagnetism_equations():
    sp = JetSpace(["t", "x"], ["A0", "A1"])
    F = sp.u("A1", "t") - sp.u("A0", "x")
    EL = euler_lagrange(BiForm.volume(sp, half * F**2))
    assert EL["A0"] == total_derivative(F, 1)
    assert EL["A1"] == -total_derivative(F, 0)


def test_euler_lagrange_rejects_wrong_degree(plane):
    with pytest.raises(DegreeError):
        euler_lagrange(BiForm.function(plane, plane.u("u")))


def test_theta_examples(mech, plane):
    cert = ibp_theta(BiForm.volume(mech, mech.u("u", "t") ** 2))
    assert cert.ok
    assert cert.theta == BiForm.theta(mech, "u").scale(-2 * mech.u("u", "t"))
    assert ibp_theta(BiForm.volume(plane, plane.u("u"))).theta.is_zero


def test_theta_matches_first_order_formula(plane):
    u, ut, ux = plane.u("u"), plane.u("u", "t"), plane.u("u", "x")
    L = BiForm.volume(plane, ut**2 * u - ux * ut + u**4)
    assert ibp_theta(L).theta == theta_first_order(L)


def test_theta_second_order_certificate(plane):
    L = BiForm.volume(plane, half * plane.u("u", "t") ** 2 - half * plane.u("u", "xx") ** 2)
    cert = ibp_theta(L)
    assert cert.ok
    assert (d_V(L) - cert.source.as_form() - d_H(cert.theta)).is_zero


def test_shell_reduce_examples(mech, plane):
    EL = euler_lagrange(BiForm.volume(mech, mech.u("u", "t") ** 2))
    solved = {mech.jet_symbol("u", "tt"): 0}
    assert shell_reduce(mech.u("u", "ttt"), EL, solved).is_zero
    assert shell_reduce(mech.u("u", "t"), EL, solved) == mech.u("u", "t")
    wave = euler_lagrange(BiForm.volume(plane, plane.u("u", "t") ** 2 - plane.u("u", "x") ** 2))
    got = shell_reduce(plane.u("u", "ttx"), wave, {plane.jet_symbol("u", "tt"): plane.u("u", "xx")})
    assert got == plane.u("u", "xxx")


def test_shell_errors(mech):
    EL = euler_lagrange(BiForm.volume(mech, mech.u("u", "t") ** 2))
    with pytest.raises(ShellError):
        shell_reduce(mech.u("u"), EL, {mech.jet_symbol("u", "tt"): mech.u("u")})
    looping = Shell(mech, {mech.jet_symbol("u", "t"): mech.u("u", "tt")})
    with pytest.raises(ShellError):
        looping.reduce(mech.u("u", "t"))


def _space(rng):
    return JetSpace(("t", "x")[: rng.randint(1, 2)], ("u", "v")[: rng.randint(1, 2)])


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_interior_euler_is_a_projection(seed):
    rng = random.Random(seed)
    sp = _space(rng)
    omega = random_form(rng, sp, sp.dim, rng.randint(1, 2), max_order=3)
    once = interior_euler(omega)
    assert interior_euler(once) == once


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_interior_euler_kills_horizontal_exact(seed):
    rng = random.Random(seed)
    sp = _space(rng)
    eta = random_form(rng, sp, sp.dim - 1, rng.randint(1, 2), max_order=2)
    assert interior_euler(d_H(eta)).is_zero


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_euler_complex_is_nilpotent(seed):
    rng = random.Random(seed)
    sp = _space(rng)
    L = random_lagrangian(rng, sp, max_order=2)
    E = euler_lagrange(L).as_form()
    second = d_V(E)
    assert second.is_zero or interior_euler(second).is_zero


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_euler_lagrange_is_linear(seed):
    rng = random.Random(seed)
    sp = _space(rng)
    L1, L2 = random_lagrangian(rng, sp), random_lagrangian(rng, sp)
    assert euler_lagrange(L1 + L2) == euler_lagrange(L1) + euler_lagrange(L2)


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_both_routes_and_ibp_certificate(seed):
    rng = random.Random(seed)
    sp = _space(rng)
    L = random_lagrangian(rng, sp, max_order=3)
    assert euler_lagrange(L) == euler_lagrange_via_interior(L)
    assert ibp_theta(L).ok
