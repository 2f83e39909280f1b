"""Interior Euler operator, Euler-Lagrange source forms and integration by parts."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional

from .forms import (
    BiForm,
    DegreeError,
    Word,
    _accumulate,
    canonical_word,
    contract_coordinate,
    d_H,
    d_V,
    lie_total,
    lie_total_multi,
    vkey,
    wedge,
)
from .jetcore import (
    Expr,
    Jet,
    JetSpace,
    mi_key,
    mi_order,
    mi_sub,
    mi_zero,
    partial,
    total_derivative,
    total_derivative_multi,
)


class ShellError(ValueError):
    """Shell data is insufficient or inconsistent."""


@dataclass(frozen=True)
class SourceForm:
    """``sum_a EL_a δu^a ∧ vol``, stored as its components."""

    space: JetSpace
    components: tuple  # ((field, Expr), ...) in field order

    @staticmethod
    def make(space: JetSpace, components: Mapping) -> "SourceForm":
        order = [f for f in space.fields if f in components]
        order += sorted(f for f in components if f not in space.fields)
        return SourceForm(space, tuple((f, Expr.coerce(components.get(f, Expr()))) for f in order))

    def __getitem__(self, field: str) -> Expr:
        return dict(self.components).get(field, Expr())

    def as_dict(self) -> dict:
        return dict(self.components)

    def nonzero(self) -> dict:
        return {f: e for f, e in self.components if not e.is_zero}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SourceForm):
            return NotImplemented
        return self.space == other.space and self.nonzero() == other.nonzero()

    def __hash__(self) -> int:
        return hash(tuple(sorted(self.nonzero().items(), key=lambda t: t[0])))

    @property
    def is_zero(self) -> bool:
        return all(e.is_zero for _, e in self.components)

    def as_form(self) -> BiForm:
        d = self.space.dim
        sign = (-1) ** d  # δu ∧ vol = (-1)^d vol ∧ δu
        terms = {
            Word(tuple(range(d)), ((f, mi_zero(d)),)): sign * e for f, e in self.components
        }
        return BiForm(self.space, d, 1, terms)

    @staticmethod
    def from_form(form: BiForm) -> "SourceForm":
        """Read components off a (d,1)-form whose vertical legs have order zero."""
        d = form.space.dim
        if form.degree != (d, 1):
            raise DegreeError(f"source forms have degree ({d},1), got {form.degree}")
        comps = {}
        for w, c in form.terms.items():
            (fld, idx), = w.vertical
            if any(idx):
                raise DegreeError(f"not a source form: leg δ{fld} of order {sum(idx)}")
            comps[fld] = comps.get(fld, Expr()) + (-1) ** d * c
        return SourceForm.make(form.space, comps)

    def __sub__(self, other: "SourceForm") -> "SourceForm":
        keys = set(self.as_dict()) | set(other.as_dict())
        return SourceForm.make(self.space, {f: self[f] - other[f] for f in keys})

    def __add__(self, other: "SourceForm") -> "SourceForm":
        keys = set(self.as_dict()) | set(other.as_dict())
        return SourceForm.make(self.space, {f: self[f] + other[f] for f in keys})

    def __str__(self) -> str:
        return "{" + ", ".join(f"{f}: {e}" for f, e in self.components) + "}"


@dataclass(frozen=True)
class IbpCertificate:
    source: SourceForm
    theta: BiForm
    residual: BiForm

    @property
    def ok(self) -> bool:
        return self.residual.is_zero


def _require_top(omega: BiForm, q_min: int = 0) -> None:
    d = omega.space.dim
    if omega.p != d:
        raise DegreeError(f"expected horizontal degree {d}, got {omega.p}")
    if omega.q < q_min:
        raise DegreeError(f"expected vertical degree >= {q_min}, got {omega.q}")


def interior_euler(omega: BiForm) -> BiForm:
    """Interior Euler operator on (d,q)-forms, q >= 1."""
    _require_top(omega, 1)
    space = omega.space
    legs = sorted({v for w in omega.terms for v in w.vertical}, key=vkey)
    by_field: dict = {}
    for fld, idx in legs:
        inner = contract_coordinate(omega, fld, idx)
        if inner.is_zero:
            continue
        term = lie_total_multi(inner, idx)
        if mi_order(idx) % 2:
            term = -term
        by_field[fld] = by_field[fld] + term if fld in by_field else term
    out = BiForm(space, omega.p, omega.q)
    for fld in sorted(by_field):
        out = out + wedge(BiForm.theta(space, fld), by_field[fld])
    if omega.q > 1:
        out = out.scale(Fraction(1, omega.q))
    return out


def _lagrangian_density(L: BiForm) -> Expr:
    d = L.space.dim
    if L.degree != (d, 0):
        raise DegreeError(f"a Lagrangian is a ({d},0)-form, got {L.degree}")
    return L.scalar()


def _fields_of(space: JetSpace, exprs: Iterable[Expr], fields=None) -> list:
    if fields is not None:
        return list(fields)
    seen = list(space.fields)
    for e in exprs:
        for j in sorted(e.jets(), key=lambda j: j.key):
            if j.field not in seen:
                seen.append(j.field)
    return seen


def euler_lagrange(L: BiForm, fields: Optional[Iterable[str]] = None) -> SourceForm:
    """``EL_a = sum_I (-1)^|I| D_I(dL/du^a_I)`` by the direct coordinate formula."""
    lbar = _lagrangian_density(L)
    fields = _fields_of(L.space, [lbar], fields)
    comps = {}
    for fld in fields:
        total = Expr()
        for j in lbar.jets():
            if j.field != fld:
                continue
            term = total_derivative_multi(partial(lbar, j), j.index)
            total = total - term if j.order % 2 else total + term
        comps[fld] = total
    return SourceForm.make(L.space, comps)


def euler_lagrange_via_interior(L: BiForm) -> SourceForm:
    """Second route: ``I(d_V L)``."""
    _lagrangian_density(L)
    dv = d_V(L)
    if dv.is_zero:
        return SourceForm.make(L.space, {})
    return SourceForm.from_form(interior_euler(dv))


def ibp_decompose(omega: BiForm) -> tuple:
    """Split a (d,1)-form as ``source + d_H(eta)`` by repeated integration by parts.

    Legs are peeled one derivative at a time, highest multi-index first.
    Returns ``(source, eta)`` with ``source`` a (d,1)-form with order-zero legs.
    """
    _require_top(omega, 1)
    if omega.q != 1:
        raise DegreeError("ibp_decompose works on (d,1)-forms")
    space = omega.space
    d = space.dim
    vol = tuple(range(d))
    # coefficient of vol ∧ δu^a_I, keyed by leg
    pending = {}
    for w, c in omega.terms.items():
        (leg,) = w.vertical
        pending[leg] = pending.get(leg, Expr()) + c
    eta_terms: dict = {}
    while True:
        high = [v for v, c in pending.items() if any(v[1]) and not c.is_zero]
        if not high:
            break
        leg = max(high, key=vkey)
        f = pending.pop(leg)
        fld, idx = leg
        mu = next(m for m, k in enumerate(idx) if k)
        lower = (fld, idx[:mu] + (idx[mu] - 1,) + idx[mu + 1:])
        # f vol∧δu_{J+mu} = d_H(f ι_mu vol ∧ δu_J) - D_mu(f) vol∧δu_J
        hword = tuple(i for i in vol if i != mu)
        _accumulate(eta_terms, (-1) ** mu, Word(hword, (lower,)), f)
        pending[lower] = pending.get(lower, Expr()) - total_derivative(f, mu)
    source = BiForm(space, d, 1, {Word(vol, (v,)): c for v, c in pending.items()})
    eta = BiForm(space, d - 1, 1, eta_terms)
    return source, eta


def ibp_theta(L: BiForm) -> IbpCertificate:
    """``d_V L = E(L) + d_H theta`` with a deterministic choice of ``theta``."""
    _lagrangian_density(L)
    space = L.space
    dv = d_V(L)
    if dv.is_zero:
        source = SourceForm.make(space, {})
        return IbpCertificate(source, BiForm(space, space.dim - 1, 1), BiForm(space, space.dim, 1))
    src_form, theta = ibp_decompose(dv)
    source = SourceForm.from_form(src_form)
    residual = dv - source.as_form() - d_H(theta)
    return IbpCertificate(source, theta, residual)


def theta_first_order(L: BiForm) -> BiForm:
    """Closed form ``theta = -δu^a ∧ dLbar/du^a_mu · ι_mu vol`` for first-order L."""
    lbar = _lagrangian_density(L)
    space = L.space
    d = space.dim
    out = BiForm(space, d - 1, 1)
    for j in lbar.jets():
        if j.order != 1:
            if j.order > 1:
                raise DegreeError("theta_first_order needs a first-order Lagrangian")
            continue
        mu = j.index.index(1)
        coeff = BiForm.codim_one(space, {mu: partial(lbar, j)})
        out = out - wedge(BiForm.theta(space, j.field), coeff)
    return out


# -- shell -----------------------------------------------------------------


class Shell:
    """Solved leading jets, closed under total derivatives on demand."""

    max_depth = 64

    def __init__(self, space: JetSpace, solved: Mapping):
        self.space = space
        entries = []
        for key, rhs in solved.items():
            if isinstance(key, Expr):
                (key,) = key.atoms()
            if not isinstance(key, Jet):
                raise ShellError(f"shell keys must be jet coordinates, got {key!r}")
            entries.append((key, Expr.coerce(rhs)))
        # prefer the highest-order applicable relation
        self.entries = sorted(entries, key=lambda t: t[0].key, reverse=True)
        self._cache: dict = {}

    def _rule_for(self, jet: Jet):
        for key, rhs in self.entries:
            if key.field == jet.field:
                rest = mi_sub(jet.index, key.index)
                if rest is not None:
                    return key, rhs, rest
        return None

    def reduce_jet(self, jet: Jet, depth: int = 0) -> Optional[Expr]:
        """Reduced value of a jet coordinate, or None if it is not constrained."""
        if jet in self._cache:
            return self._cache[jet]
        rule = self._rule_for(jet)
        if rule is None:
            self._cache[jet] = None
            return None
        if depth > self.max_depth:
            raise ShellError(
                f"insufficient shell data: reduction of {jet.name} does not terminate"
            )
        _, rhs, rest = rule
        value = self.reduce(total_derivative_multi(rhs, rest), depth + 1)
        self._cache[jet] = value
        return value

    def reduce(self, e: Expr, depth: int = 0) -> Expr:
        mapping = {}
        for j in e.jets():
            r = self.reduce_jet(j, depth)
            if r is not None:
                mapping[j] = r
        return e.subs(mapping) if mapping else e

    def reduce_form(self, alpha: BiForm) -> BiForm:
        """Restrict a form to the shell: coefficients and contact legs."""
        space = alpha.space
        out = BiForm(space, alpha.p, alpha.q)
        leg_cache: dict = {}
        for w, c in alpha.terms.items():
            piece = BiForm(space, alpha.p, 0, {Word(w.horizontal, ()): self.reduce(c)})
            for fld, idx in w.vertical:
                if (fld, idx) not in leg_cache:
                    jet = Jet(fld, idx, space.coords)
                    r = self.reduce_jet(jet)
                    if r is None:
                        leg_cache[(fld, idx)] = BiForm.theta(space, fld, idx)
                    else:
                        leg_cache[(fld, idx)] = d_V(BiForm.function(space, r))
                piece = wedge(piece, leg_cache[(fld, idx)])
            out = out + piece
        return out

    def annihilates(self, source: SourceForm) -> bool:
        return all(self.reduce(e).is_zero for _, e in source.components)


def shell_reduce(e: Expr, EL: SourceForm, solved: Mapping) -> Expr:
    """Substitute the solved shell relations (and their prolongations) into ``e``."""
    shell = solved if isinstance(solved, Shell) else Shell(EL.space, solved)
    if not shell.annihilates(EL):
        raise ShellError("solved relations do not annihilate the Euler-Lagrange components")
    return shell.reduce(e)
