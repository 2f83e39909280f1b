"""Declared theory data and its canonical text form."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from ..eulerlag import Shell
from ..forms import BiForm, EvoField
from ..jetcore import Expr, JetSpace, max_jet_order, render
from ..pullback import FieldExpr
from ..symmetry import GaugeParametrization


@dataclass(frozen=True)
class BackgroundDecl:
    name: str
    deps: tuple  # coordinate names
    attrs: tuple = ()


@dataclass(frozen=True)
class SymmetryDecl:
    name: str
    components: tuple  # ((field, Expr), ...)
    K: Optional[tuple] = None  # ((coord, Expr), ...)


@dataclass(frozen=True)
class GaugeDecl:
    name: str
    param: str
    coefficients: tuple  # ((field, index, Expr), ...)


@dataclass(frozen=True)
class SolutionDecl:
    name: str
    components: tuple  # ((field, Expr), ...)
    param_values: tuple = ()  # ((param, Expr), ...)


@dataclass(frozen=True)
class HamiltonianDecl:
    name: str
    H: tuple  # ((coord, Expr), ...)
    components: tuple  # ((field, Expr), ...)


@dataclass(frozen=True)
class TransgressionDecl:
    name: str
    tangents: tuple  # two solution names
    at: Fraction = Fraction(0)
    base: Optional[str] = None


@dataclass(frozen=True)
class Theory:
    name: str
    coords: tuple
    fields: tuple
    backgrounds: tuple = ()
    params: tuple = ()
    lagrangian: Expr = Expr()
    symmetries: tuple = ()
    gauges: tuple = ()
    solutions: tuple = ()
    shell: tuple = ()  # ((jet name, Expr), ...)
    hamiltonians: tuple = ()
    transgressions: tuple = ()

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def gauge_params(self) -> tuple:
        return tuple(g.param for g in self.gauges)

    @property
    def space(self) -> JetSpace:
        """Jet space including the auxiliary gauge-parameter fields."""
        return JetSpace(self.coords, self.fields + self.gauge_params)

    @property
    def max_order(self) -> int:
        return max_jet_order(self.lagrangian)

    def lagrangian_form(self) -> BiForm:
        return BiForm.volume(self.space, self.lagrangian)

    def symmetry(self, name: str) -> SymmetryDecl:
        return _lookup(self.symmetries, name)

    def solution(self, name: str) -> SolutionDecl:
        return _lookup(self.solutions, name)

    def evo_field(self, components) -> EvoField:
        return EvoField.make(self.space, dict(components))

    def codim_one(self, coeffs) -> BiForm:
        return BiForm.codim_one(self.space, {self.coords.index(c): e for c, e in coeffs})

    def field_expr(self, sol: SolutionDecl) -> FieldExpr:
        return FieldExpr.make(self.space, dict(sol.components), dict(sol.param_values))

    def gauge_parametrization(self, g: GaugeDecl) -> GaugeParametrization:
        return GaugeParametrization.make(
            self.space, [g.param], {(f, idx, g.param): e for f, idx, e in g.coefficients}
        )

    def shell_object(self) -> Optional[Shell]:
        if not self.shell:
            return None
        space = self.space
        solved = {}
        for jname, rhs in self.shell:
            field, _, suffix = jname.partition("_")
            solved[space.jet_symbol(field, suffix or None)] = rhs
        return Shell(space, solved)


def _lookup(items, name):
    for it in items:
        if it.name == name:
            return it
    raise KeyError(name)


# -- rendering -------------------------------------------------------------


def _fmt_number(q: Fraction) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def _kform(coeffs, coords) -> str:
    if not coeffs:
        return "{" + f"{coords[0]}: 0" + "}"
    return "{" + ", ".join(f"{c}: {render(e)}" for c, e in coeffs) + "}"


def _midx(space: JetSpace, idx: tuple) -> str:
    s = "".join(c * k for c, k in zip(space.coords, idx))
    return s or "0"


def render_theory(th: Theory) -> str:
    """Canonical text that parses back to an equal ``Theory``."""
    out = [f"theory {th.name} {{"]
    out.append(f"  dim {th.dim};")
    out.append(f"  coords {', '.join(th.coords)};")
    out.append(f"  fields {', '.join(th.fields)};")
    for b in th.backgrounds:
        attrs = f" [{', '.join(b.attrs)}]" if b.attrs else ""
        out.append(f"  background {b.name}({', '.join(b.deps)}){attrs};")
    for p in th.params:
        out.append(f"  param {p};")
    out.append(f"  lagrangian: {render(th.lagrangian)};")
    for s in th.symmetries:
        out.append(f"  symmetry {s.name} {{")
        for f, e in s.components:
            out.append(f"    Z[{f}] = {render(e)};")
        if s.K is not None:
            out.append(f"    K = {_kform(s.K, th.coords)};")
        out.append("  }")
    space = th.space
    for g in th.gauges:
        out.append(f"  gauge {g.name} {{")
        out.append(f"    param {g.param};")
        for f, idx, e in g.coefficients:
            out.append(f"    R[{f}, {_midx(space, idx)}] = {render(e)};")
        out.append("  }")
    for s in th.solutions:
        out.append(f"  solution {s.name} {{")
        for f, e in s.components:
            out.append(f"    {f} = {render(e)};")
        for p, e in s.param_values:
            out.append(f"    {p} = {render(e)};")
        out.append("  }")
    if th.shell:
        out.append("  shell {")
        for j, e in th.shell:
            out.append(f"    {j} = {render(e)};")
        out.append("  }")
    for h in th.hamiltonians:
        out.append(f"  hamiltonian {h.name} {{")
        out.append(f"    H = {_kform(h.H, th.coords)};")
        for f, e in h.components:
            out.append(f"    Z[{f}] = {render(e)};")
        out.append("  }")
    for t in th.transgressions:
        out.append(f"  transgression {t.name} {{")
        if t.base is not None:
            out.append(f"    base = {t.base};")
        out.append(f"    tangents = {', '.join(t.tangents)};")
        out.append(f"    at = {_fmt_number(t.at)};")
        out.append("  }")
    out.append("}")
    return "\n".join(out) + "\n"
