from __future__ import annotations

import random
from fractions import Fraction

import pytest

from varform.eulerlag import euler_lagrange, ibp_theta
from varform.forms import BiForm, DegreeError, EvoField, contract_prolonged, d_H, evo_bracket, lie_evolutionary
from varform.jetcore import Expr, JetSpace
from varform.symmetry import (
    GaugeError,
    GaugeParametrization,
    SymmetryError,
    check_symmetry,
    gauge_apply,
    gauge_current,
    horizontal_primitive,
    noether_current,
    noether_identity,
    trivial_symmetry,
)
from varform.testing import random_expr

half = Fraction(1, 2)


@pytest.fixture
def o2():
    sp = JetSpace(["t", "x"], ["u0", "u1"])
    dens = sum(
        (half * (sp.u(f, "t") ** 2 - sp.u(f, "x") ** 2 - sp.u(f) ** 2) for f in sp.fields),
        start=Expr(),
    )
    return sp, BiForm.volume(sp, dens)


@pytest.fixture
def particle(mech):
    return mech, BiForm.volume(mech, mech.u("u", "t") ** 2)


@pytest.fixture
def em():
    sp = JetSpace(["t", "x"], ["A0", "A1", "c"])
    F = sp.u("A1", "t") - sp.u("A0", "x")
    L = BiForm.volume(sp, half * F**2)
    R = GaugeParametrization.make(sp, ["c"], {("A0", "t", "c"): 1, ("A1", "x", "c"): 1})
    return sp, L, R


def test_rotation_is_a_symmetry_with_zero_K(o2):
    sp, L = o2
    Z = EvoField.make(sp, {"u0": -sp.u("u1"), "u1": sp.u("u0")})
    cert = check_symmetry(Z, L, BiForm(sp, 1, 0))
    assert cert.is_symmetry and cert.k_verified
    assert cert.lie_of_L.is_zero


def test_shift_breaks_massive_model(o2):
    sp, L = o2
    cert = check_symmetry(EvoField.make(sp, {"u0": 1}), L)
    assert not cert.is_symmetry
    assert cert.residual_source["u0"] == -1 + 0 * sp.u("u0")
    assert cert.K is None


def test_time_translation_with_supplied_K(particle):
    sp, L = particle
    Z = EvoField.make(sp, {"u": sp.u("u", "t")})
    cert = check_symmetry(Z, L, BiForm.codim_one(sp, {0: sp.u("u", "t") ** 2}))
    assert cert.is_symmetry and cert.k_verified


def test_wrong_K_is_reported(particle):
    sp, L = particle
    Z = EvoField.make(sp, {"u": sp.u("u", "t")})
    cert = check_symmetry(Z, L, BiForm.codim_one(sp, {0: sp.u("u", "t")}))
    assert cert.is_symmetry and cert.k_verified is False
    with pytest.raises(SymmetryError):
        noether_current(Z, cert.K, L)


def test_K_degree_is_checked(particle):
    sp, L = particle
    with pytest.raises(DegreeError):
        check_symmetry(EvoField.make(sp, {"u": 1}), L, L)


def test_auto_K_for_boost(particle):
    sp, L = particle
    cert = check_symmetry(EvoField.make(sp, {"u": sp.x(0)}), L)
    assert cert.is_symmetry and cert.k_verified
    assert (cert.lie_of_L - d_H(cert.K)).is_zero


def test_horizontal_primitive_inverts_d_H(plane):
    rng = random.Random(3)
    for _ in range(20):
        K = BiForm.codim_one(plane, {0: random_expr(rng, plane), 1: random_expr(rng, plane)})
        F = d_H(K)
        if F.is_zero:
            continue
        assert d_H(horizontal_primitive(F)) == F


def test_noether_current_of_time_translation(particle):
    sp, L = particle
    Z = EvoField.make(sp, {"u": sp.u("u", "t")})
    pair = noether_current(Z, BiForm.codim_one(sp, {0: sp.u("u", "t") ** 2}), L)
    assert pair.ok
    assert pair.P.scalar() == -sp.u("u", "t") ** 2


def test_rotation_current(o2):
    sp, L = o2
    Z = EvoField.make(sp, {"u0": -sp.u("u1"), "u1": sp.u("u0")})
    pair = noether_current(Z, BiForm(sp, 1, 0), L)
    assert pair.ok
    u0, u1 = sp.u("u0"), sp.u("u1")
    # P = -(Z^a dL/du^a_mu) i_mu vol with Z = (-u1, u0)
    expected = BiForm.codim_one(
        sp,
        {0: u1 * sp.u("u0", "t") - u0 * sp.u("u1", "t"), 1: u0 * sp.u("u1", "x") - u1 * sp.u("u0", "x")},
    )
    assert pair.P == expected


def test_noether_current_requires_a_symmetry(o2):
    sp, L = o2
    with pytest.raises(SymmetryError) as info:
        noether_current(EvoField.make(sp, {"u0": 1}), None, L)
    assert info.value.residual is not None


def test_trivial_symmetries(o2, particle):
    sp, L = particle
    assert trivial_symmetry({}, L).is_zero
    sp2, L2 = o2
    EL = euler_lagrange(L2)
    Z = trivial_symmetry({("u0", "u1"): 1, ("u1", "u0"): -1}, L2)
    assert Z["u0"] == EL["u1"] and Z["u1"] == -EL["u0"]
    assert contract_prolonged(Z, EL.as_form()).is_zero
    assert check_symmetry(Z, L2).is_symmetry
    pair = noether_current(Z, None, L2)
    assert pair.ok and pair.P.is_zero
    with pytest.raises(SymmetryError):
        trivial_symmetry({("u0", "u1"): 1}, L2)


def test_gauge_apply(em):
    sp, L, R = em
    t, x = sp.x(0), sp.x(1)
    Z = gauge_apply(R, {"c": t * x})
    assert Z["A0"] == x and Z["A1"] == t
    assert gauge_apply(R, {"c": 5}).is_zero
    e1, e2 = t**2, x * t**3
    assert gauge_apply(R, {"c": e1 + e2}) == gauge_apply(R, {"c": e1}) + gauge_apply(R, {"c": e2})
    with pytest.raises(GaugeError):
        gauge_apply(R, {"c": sp.u("A0")})


def test_gauge_coefficients_must_not_contain_parameter_jets(em):
    sp, _, _ = em
    with pytest.raises(GaugeError):
        GaugeParametrization.make(sp, ["c"], {("A0", "t", "c"): sp.u("c")})


def test_noether_identity(em):
    sp, L, R = em
    N = noether_identity(R, L)
    assert all(n.is_zero for n in N.values())
    zero = GaugeParametrization.make(sp, ["c"], {})
    assert all(n.is_zero for n in noether_identity(zero, L).values())
    broken = R.without("A1", "x", "c")
    with pytest.raises(GaugeError) as info:
        noether_identity(broken, L)
    assert any(not n.is_zero for n in info.value.residual.values())


def test_gauge_current_splits_contraction(em):
    sp, L, R = em
    EL = euler_lagrange(L, fields=["A0", "A1"])
    N, J = gauge_current(R, EL)
    Zc = R.symbolic_field()
    lhs = contract_prolonged(Zc, EL.as_form())
    assert all(n.is_zero for n in N.values())
    assert lhs == d_H(J)


def test_gauge_noether_current_is_conserved(em):
    sp, L, R = em
    Zc = R.symbolic_field()
    pair = noether_current(Zc, None, L)
    assert pair.ok


def _noether_bracket_current(Z1, K1, Z2, K2, L):
    theta = ibp_theta(L).theta
    br = evo_bracket(Z1, Z2)
    return br, lie_evolutionary(Z1, K2) - lie_evolutionary(Z2, K1) + contract_prolonged(br, theta)


@pytest.mark.parametrize(
    "make",
    [
        lambda sp: ({"u": sp.x(0)}, {0: 2 * sp.u("u")}, {"u": sp.u("u", "t")}, {0: sp.u("u", "t") ** 2}),
        lambda sp: ({"u": 1}, {}, {"u": sp.x(0)}, {0: 2 * sp.u("u")}),
    ],
)
def test_bracket_current_formula(particle, make):
    sp, L = particle
    z1, k1, z2, k2 = make(sp)
    Z1, Z2 = EvoField.make(sp, z1), EvoField.make(sp, z2)
    K1, K2 = BiForm.codim_one(sp, k1), BiForm.codim_one(sp, k2)
    br, P = _noether_bracket_current(Z1, K1, Z2, K2, L)
    assert check_symmetry(br, L).is_symmetry
    EL = euler_lagrange(L)
    assert (d_H(P) - contract_prolonged(br, EL.as_form())).is_zero


def test_symmetries_close_under_bracket(o2):
    sp, L = o2
    rot = EvoField.make(sp, {"u0": -sp.u("u1"), "u1": sp.u("u0")})
    time = EvoField.make(sp, {"u0": sp.u("u0", "t"), "u1": sp.u("u1", "t")})
    space = EvoField.make(sp, {"u0": sp.u("u0", "x"), "u1": sp.u("u1", "x")})
    fields = [rot, time, space]
    for a in fields:
        assert check_symmetry(a, L).is_symmetry
        for b in fields:
            assert check_symmetry(evo_bracket(a, b), L).is_symmetry
