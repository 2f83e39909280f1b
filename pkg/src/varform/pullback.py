"""Pull-back of horizontal forms along concrete field configurations."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

from .eulerlag import SourceForm
from .forms import BiForm, DegreeError, EvoField, canonical_word, d_H, prolonged_action
from .jetcore import (
    Expr,
    Func,
    JetSpace,
    Param,
    Recip,
    mi_all,
    total_derivative_multi,
)


@dataclass(frozen=True)
class FieldExpr:
    """A field configuration ``u^a = phi^a(x)`` with jet-free components."""

    space: JetSpace
    components: tuple  # ((field, Expr), ...)
    params: tuple = ()  # ((name, Expr), ...) fixed parameter values

    @staticmethod
    def make(space: JetSpace, components: Mapping, params: Optional[Mapping] = None) -> "FieldExpr":
        comps = []
        for f in sorted(components):
            e = Expr.coerce(components[f])
            if e.jets():
                raise ValueError(f"field expression for {f} depends on jet coordinates")
            comps.append((f, e))
        fixed = tuple(sorted((k, Expr.coerce(v)) for k, v in (params or {}).items()))
        return FieldExpr(space, tuple(comps), fixed)

    def __getitem__(self, field: str) -> Expr:
        return dict(self.components)[field]

    def as_dict(self) -> dict:
        return dict(self.components)


def prolong_field(phi: FieldExpr, k: int) -> dict:
    """Jet substitution ``u^a_I -> d_I phi^a`` for all ``|I| <= k``.

    Fixed parameter values carried by ``phi`` are included in the map.
    """
    out = {Param(name): v for name, v in phi.params}
    for f, e in phi.components:
        for idx in mi_all(phi.space.dim, k):
            out[phi.space.jet_symbol(f, idx)] = total_derivative_multi(e, idx)
    return out


def pullback_form(alpha: BiForm, phi: FieldExpr) -> BiForm:
    if alpha.q != 0:
        raise DegreeError("only horizontal (p,0)-forms can be pulled back")
    sub = prolong_field(phi, alpha.max_jet_order())
    return alpha.map_coefficients(lambda c: c.subs(sub))


def d_base(beta: BiForm) -> BiForm:
    """Exterior derivative on the base for jet-free horizontal forms."""
    return d_H(beta)


@dataclass(frozen=True)
class OnShellReport:
    residuals: dict
    status: dict  # field -> "zero" | "nonzero" | "not syntactically zero"

    @property
    def ok(self) -> bool:
        return all(s == "zero" for s in self.status.values())


def _classify(e: Expr) -> str:
    if e.is_zero:
        return "zero"
    if any(isinstance(a, (Func, Recip)) or k < 0 for m in e.terms for a, k in m):
        return "not syntactically zero"
    return "nonzero"


def check_onshell_field(phi: FieldExpr, EL: SourceForm) -> OnShellReport:
    order = max((max((j.order for j in e.jets()), default=0) for _, e in EL.components), default=0)
    sub = prolong_field(phi, order)
    res = {}
    status = {}
    for f, e in EL.components:
        r = e.subs(sub)
        res[f] = r
        status[f] = _classify(r)
    return OnShellReport(res, status)


def jacobi_check(phi: FieldExpr, b: FieldExpr, EL: SourceForm) -> OnShellReport:
    """Linearized equations at ``phi`` applied to the variation ``b``."""
    pre = check_onshell_field(phi, EL)
    if not pre.ok:
        raise ValueError("base configuration is not on shell")
    Z = EvoField.make(EL.space, b.as_dict())
    lin = {f: prolonged_action(Z, e) for f, e in EL.components}
    order = max((max((j.order for j in e.jets()), default=0) for e in lin.values()), default=0)
    sub = prolong_field(phi, order)
    res = {}
    status = {}
    for f, e in lin.items():
        r = e.subs(sub)
        res[f] = r
        status[f] = _classify(r)
    return OnShellReport(res, status)


def _values(space: JetSpace, point, values: Optional[Mapping]) -> dict:
    if len(point) != space.dim:
        raise ValueError(f"point needs {space.dim} coordinates")
    vals = {space.coord(i): float(v) for i, v in enumerate(point)}
    for name, v in (values or {}).items():
        vals[Param(name)] = float(v)
    return vals


def _fd_derivative(c: Expr, space: JetSpace, vals: dict, mu: int, h: float) -> float:
    coord = space.coord(mu)
    plus = dict(vals)
    minus = dict(vals)
    plus[coord] = vals[coord] + h
    minus[coord] = vals[coord] - h
    return (c.evaluate(plus) - c.evaluate(minus)) / (2 * h)


def fd_check(
    alpha: BiForm,
    phi: FieldExpr,
    point,
    h: float = 1e-4,
    values: Optional[Mapping] = None,
) -> float:
    """Largest deviation between ``phi^*(d_H alpha)`` and a central-difference
    exterior derivative of ``phi^* alpha`` at ``point``."""
    if alpha.q != 0:
        raise DegreeError("fd_check needs a horizontal (p,0)-form")
    space = alpha.space
    vals = _values(space, point, values)
    base = pullback_form(alpha, phi)
    if alpha.p >= space.dim:
        # d_H of a top form vanishes; still make sure the pullback evaluates
        for c in base.terms.values():
            c.evaluate(vals)
        return 0.0
    exact = pullback_form(d_H(alpha), phi)
    numeric: dict = {}
    for w, c in base.terms.items():
        for mu in range(space.dim):
            if mu in w.horizontal:
                continue
            sign, nw = canonical_word((mu,) + w.horizontal, ())
            numeric[nw] = numeric.get(nw, 0.0) + sign * _fd_derivative(c, space, vals, mu, h)
    worst = 0.0
    words = set(numeric) | set(exact.terms)
    for w in words:
        sym = exact.terms[w].evaluate(vals) if w in exact.terms else 0.0
        worst = max(worst, abs(sym - numeric.get(w, 0.0)))
    return worst


def fd_convergence(alpha: BiForm, phi: FieldExpr, point, h: float = 1e-4, values=None) -> tuple:
    """Residuals at ``h`` and ``h/2`` and their ratio (about 4 for O(h^2))."""
    r1 = fd_check(alpha, phi, point, h, values)
    r2 = fd_check(alpha, phi, point, h / 2, values)
    ratio = r1 / r2 if r2 > 0 else float("inf")
    return r1, r2, ratio
