"""Seeded random generators and the invariant suites built on them.

The same suites back the pytest property tests and ``varform selftest``.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from .eulerlag import euler_lagrange, euler_lagrange_via_interior, ibp_theta, interior_euler
from .forms import (
    BiForm,
    EvoField,
    canonical_word,
    contract_prolonged,
    d_H,
    d_V,
    evo_bracket,
    lie_evolutionary,
    wedge,
)
from .jetcore import Expr, JetSpace, apply_function, mi_all
from .pullback import FieldExpr

COORDS = ("t", "x")
FIELDS = ("u", "v")


def random_space(rng: random.Random, max_dim: int = 2, max_fields: int = 2) -> JetSpace:
    d = rng.randint(1, max_dim)
    n = rng.randint(1, max_fields)
    return JetSpace(COORDS[:d], FIELDS[:n])


def _coeff(rng: random.Random) -> Fraction:
    num = rng.choice([-3, -2, -1, 1, 2, 3])
    return Fraction(num, rng.choice([1, 1, 2, 3]))


def random_monomial(
    rng: random.Random,
    space: JetSpace,
    max_order: int = 2,
    max_factors: int = 3,
    transcendental: float = 0.0,
) -> Expr:
    jets = [(f, i) for f in space.fields for i in mi_all(space.dim, max_order)]
    out = Expr.const(_coeff(rng))
    for _ in range(rng.randint(0, max_factors)):
        roll = rng.random()
        if roll < 0.7 and jets:
            f, i = rng.choice(jets)
            out = out * space.u(f, i)
        elif roll < 0.9:
            out = out * space.x(rng.randrange(space.dim))
        else:
            out = out * space.param("m")
    if transcendental and rng.random() < transcendental:
        fname = rng.choice(["sin", "cos", "exp"])
        if rng.random() < 0.5 or not jets:
            arg = space.x(rng.randrange(space.dim))
        else:
            f, i = rng.choice(jets[: len(space.fields) * (space.dim + 1)])
            arg = space.u(f, i)
        out = out * apply_function(fname, arg)
    return out


def random_expr(
    rng: random.Random,
    space: JetSpace,
    max_order: int = 2,
    max_terms: int = 3,
    max_factors: int = 3,
    transcendental: float = 0.0,
) -> Expr:
    out = Expr()
    for _ in range(rng.randint(1, max_terms)):
        out = out + random_monomial(rng, space, max_order, max_factors, transcendental)
    return out


def random_form(
    rng: random.Random,
    space: JetSpace,
    p: int,
    q: int,
    max_order: int = 2,
    max_terms: int = 2,
    coeff_terms: int = 2,
    transcendental: float = 0.0,
) -> BiForm:
    legs = [(f, i) for f in space.fields for i in mi_all(space.dim, max_order)]
    terms: dict = {}
    for _ in range(rng.randint(1, max_terms)):
        hor = tuple(sorted(rng.sample(range(space.dim), p)))
        if q > len(legs):
            continue
        vert = rng.sample(legs, q)
        sign, w = canonical_word(hor, vert)
        c = random_expr(rng, space, max_order, coeff_terms, 2, transcendental)
        if sign and not c.is_zero:
            terms[w] = terms.get(w, Expr()) + sign * c
    return BiForm(space, p, q, {w: c for w, c in terms.items() if not c.is_zero})


def random_evo(rng: random.Random, space: JetSpace, max_order: int = 1, max_terms: int = 2) -> EvoField:
    comps = {}
    for f in space.fields:
        if rng.random() < 0.8:
            comps[f] = random_expr(rng, space, max_order, max_terms, 2)
    return EvoField.make(space, comps)


def random_lagrangian(rng: random.Random, space: JetSpace, max_order: int = 3, max_terms: int = 3) -> BiForm:
    return BiForm.volume(space, random_expr(rng, space, max_order, max_terms, 3))


def random_field_config(rng: random.Random, space: JetSpace, fields=None) -> FieldExpr:
    """Smooth field configuration built from sin/cos/exp of affine arguments.

    Amplitudes and frequencies stay at most 1 so that third derivatives of pulled-back
    coefficients remain moderate; finite-difference checks use an absolute
    tolerance.
    """
    comps = {}
    for f in fields or space.fields:
        total = Expr()
        for _ in range(rng.randint(1, 2)):
            arg = Expr.const(Fraction(rng.randint(-4, 4), 4))
            for mu in range(space.dim):
                arg = arg + Fraction(rng.choice([-2, -1, 1, 2]), 2) * space.x(mu)
            term = apply_function(rng.choice(["sin", "cos", "exp"]), arg)
            if rng.random() < 0.3:
                term = term * space.x(rng.randrange(space.dim))
            total = total + Fraction(rng.choice([-2, -1, 1, 2]), 2) * term
        comps[f] = total
    return FieldExpr.make(space, comps)


# -- suites ----------------------------------------------------------------


@dataclass
class SuiteResult:
    name: str
    cases: int = 0
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures and self.cases > 0

    def record(self, label: str, good: bool, detail: str = "") -> None:
        self.cases += 1
        if not good:
            self.failures.append(f"{label}: {detail}" if detail else label)

    def summary(self) -> str:
        state = "ok" if self.ok else f"{len(self.failures)} failed"
        return f"{self.name}: {self.cases} cases, {state}"


def interior_euler_suite(rng: random.Random, n: int = 200) -> SuiteResult:
    res = SuiteResult("interior-euler")
    for k in range(n):
        space = random_space(rng)
        d = space.dim
        q = rng.randint(1, 2)
        omega = random_form(rng, space, d, q, max_order=3, transcendental=0.1)
        I1 = interior_euler(omega)
        res.record(f"I∘I=I #{k}", interior_euler(I1) == I1, str(omega))
        beta = random_form(rng, space, d - 1, q, max_order=2)
        res.record(f"I∘d_H=0 #{k}", interior_euler(d_H(beta)).is_zero, str(beta))
        L = random_lagrangian(rng, space, max_order=2)
        E = interior_euler(d_V(L)) if not d_V(L).is_zero else None
        twice = E is None or E.is_zero or d_V(E).is_zero or interior_euler(d_V(E)).is_zero
        res.record(f"(I∘d_V)^2=0 #{k}", twice, str(L))
        gamma = random_form(rng, space, d - 1, 0, max_order=2)
        res.record(f"E∘d_H=0 #{k}", euler_lagrange(_top(d_H(gamma), space)).is_zero, str(gamma))
    return res


def _top(form: BiForm, space: JetSpace) -> BiForm:
    return form if not form.is_zero else BiForm(space, space.dim, 0)


def _leibniz(op: Callable, a: BiForm, b: BiForm) -> bool:
    lhs = op(wedge(a, b))
    sign = -1 if (a.p + a.q) % 2 else 1
    rhs = _wedge_safe(op(a), b) + _wedge_safe(a, op(b)).scale(sign)
    return lhs == rhs


def _wedge_safe(a: BiForm, b: BiForm) -> BiForm:
    d = a.space.dim
    if a.p + b.p > d:
        return BiForm(a.space, d + 1, a.q + b.q)
    return wedge(a, b)


def bicomplex_suite(rng: random.Random, n: int = 500) -> SuiteResult:
    res = SuiteResult("bicomplex")
    for k in range(n):
        space = random_space(rng)
        d = space.dim
        p = rng.randint(0, d)
        q = rng.randint(0, 2)
        a = random_form(rng, space, p, q, max_order=2, transcendental=0.1)
        res.record(f"d_H^2 #{k}", d_H(d_H(a)).is_zero, str(a))
        res.record(f"d_V^2 #{k}", d_V(d_V(a)).is_zero, str(a))
        res.record(f"anticommute #{k}", (d_H(d_V(a)) + d_V(d_H(a))).is_zero, str(a))
        p2 = rng.randint(0, d - p)
        b = random_form(rng, space, p2, rng.randint(0, 1), max_order=1)
        res.record(f"Leibniz d_H #{k}", _leibniz(d_H, a, b), f"{a} | {b}")
        res.record(f"Leibniz d_V #{k}", _leibniz(d_V, a, b), f"{a} | {b}")
    return res


def cartan_suite(rng: random.Random, n: int = 200) -> SuiteResult:
    res = SuiteResult("evolutionary-cartan")
    for k in range(n):
        space = random_space(rng)
        d = space.dim
        p = rng.randint(0, d - 1)
        q = rng.randint(0, 2)
        a = random_form(rng, space, p, q, max_order=1, transcendental=0.1)
        Z1 = random_evo(rng, space)
        Z2 = random_evo(rng, space)
        lhs = contract_prolonged(Z1, d_H(a)) + d_H(contract_prolonged(Z1, a))
        res.record(f"[iota,d_H]=0 #{k}", lhs.is_zero, f"{Z1} {a}")
        res.record(
            f"L d_H = d_H L #{k}",
            lie_evolutionary(Z1, d_H(a)) == d_H(lie_evolutionary(Z1, a)),
            f"{Z1} {a}",
        )
        br = evo_bracket(Z1, Z2)
        comm = lie_evolutionary(Z1, lie_evolutionary(Z2, a)) - lie_evolutionary(Z2, lie_evolutionary(Z1, a))
        res.record(f"L_[Z1,Z2] #{k}", lie_evolutionary(br, a) == comm, f"{Z1} {Z2} {a}")
        comm_i = lie_evolutionary(Z1, contract_prolonged(Z2, a)) - contract_prolonged(Z2, lie_evolutionary(Z1, a))
        res.record(f"iota_[Z1,Z2] #{k}", contract_prolonged(br, a) == comm_i, f"{Z1} {Z2} {a}")
    return res


def lagrangian_suite(rng: random.Random, n: int = 100) -> tuple:
    """Both-paths Euler-Lagrange agreement and the integration-by-parts residual."""
    both = SuiteResult("el-both-paths")
    ibp = SuiteResult("ibp-residual")
    for k in range(n):
        space = random_space(rng)
        L = random_lagrangian(rng, space, max_order=3)
        both.record(f"EL #{k}", euler_lagrange(L) == euler_lagrange_via_interior(L), str(L))
        ibp.record(f"ibp #{k}", ibp_theta(L).ok, str(L))
    return both, ibp


def run_all(seed: int = 0, scale: float = 1.0) -> list:
    rng = random.Random(seed)
    n = lambda k: max(1, int(k * scale))  # noqa: E731
    out = [
        interior_euler_suite(rng, n(200)),
        bicomplex_suite(rng, n(500)),
        cartan_suite(rng, n(200)),
    ]
    out.extend(lagrangian_suite(rng, n(100)))
    return out
