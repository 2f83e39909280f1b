"""Symmetries of Lagrangians, Noether currents and gauge identities."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

from .eulerlag import SourceForm, euler_lagrange, ibp_decompose, ibp_theta
from .forms import BiForm, DegreeError, EvoField, contract_prolonged, d_H, d_V, lie_evolutionary
from .jetcore import (
    BaseCoord,
    DomainError,
    Expr,
    JetSpace,
    Param,
    jet_degree,
    mi_order,
    total_derivative_multi,
)


class SymmetryError(ValueError):
    def __init__(self, message: str, residual=None):
        super().__init__(message)
        self.residual = residual


class GaugeError(SymmetryError):
    pass


@dataclass(frozen=True)
class SymmetryCertificate:
    field: EvoField
    lie_of_L: BiForm
    residual_source: SourceForm
    is_symmetry: bool
    K: Optional[BiForm] = None
    k_verified: Optional[bool] = None


@dataclass(frozen=True)
class NoetherPair:
    P: BiForm
    Z: EvoField
    K: BiForm
    residual: BiForm  # d_H P - iota_{pr Z} EL

    @property
    def ok(self) -> bool:
        return self.residual.is_zero


def _check_codim_one(space: JetSpace, K: BiForm, what: str = "K") -> None:
    d = space.dim
    if K.degree != (d - 1, 0):
        raise DegreeError(f"{what} must be a ({d - 1},0)-form, got {K.degree}")


def horizontal_primitive(F: BiForm) -> BiForm:
    """Return ``K`` with ``d_H K = F`` for a (d,0)-form with vanishing Euler image.

    Uses the vertical scaling homotopy on the jet-dependent part (requires
    polynomial dependence on jets) and integration in the first base coordinate
    for the jet-free part (requires polynomial dependence on base coordinates).
    """
    space = F.space
    d = space.dim
    fbar = F.scalar()
    jet_part = Expr({m: c for m, c in fbar.terms.items() if jet_degree(m) > 0})
    rest = fbar - jet_part
    if not euler_lagrange(BiForm.volume(space, jet_part)).is_zero:
        raise SymmetryError("form is not horizontally exact: non-zero Euler image")
    K = BiForm(space, d - 1, 0)
    if not jet_part.is_zero:
        theta = ibp_theta(BiForm.volume(space, jet_part)).theta
        fields = sorted({j.field for j in jet_part.jets()})
        scaling = EvoField.make(space, {f: space.u(f) for f in fields})
        raw = contract_prolonged(scaling, theta)
        # integrate lambda^(k-1) over [0, 1] monomial by monomial
        K = -raw.map_coefficients(_homotopy_weights)
    if not rest.is_zero:
        K = K + BiForm.codim_one(space, {0: _antiderivative(space, rest, 0)})
    if d_H(K) != F:
        raise SymmetryError("horizontal primitive failed verification", d_H(K) - F)
    return K


def _homotopy_weights(c: Expr) -> Expr:
    out = {}
    for m, v in c.terms.items():
        k = jet_degree(m)
        if k <= 0:
            raise SymmetryError("automatic primitive needs polynomial jet dependence")
        out[m] = v / k
    return Expr(out)


def _antiderivative(space: JetSpace, e: Expr, mu: int) -> Expr:
    coord = space.coord(mu)
    out = Expr()
    for m, c in e.terms.items():
        k = 0
        others = []
        for a, n in m:
            if a == coord:
                k = n
            elif isinstance(a, (BaseCoord, Param)):
                others.append((a, n))
            else:
                raise SymmetryError(f"cannot integrate {a.name} in closed form")
        if k < 0:
            raise SymmetryError("cannot integrate negative powers in closed form")
        out = out + Expr({tuple(others): c / (k + 1)}) * Expr.of(coord, k + 1)
    return out


def check_symmetry(Z: EvoField, L: BiForm, K: Optional[BiForm] = None) -> SymmetryCertificate:
    """Decide whether ``L_{pr Z} L`` is horizontally exact."""
    space = L.space
    if K is not None:
        _check_codim_one(space, K)
    lie = lie_evolutionary(Z, L)
    if lie.is_zero:
        lie = BiForm(space, space.dim, 0)
    residual = euler_lagrange(lie)
    is_sym = residual.is_zero
    k_ok = None
    if K is not None:
        k_ok = (lie - d_H(K)).is_zero
    elif is_sym:
        K = _primitive(Z, L, lie)
        k_ok = True if K is not None else None
    return SymmetryCertificate(Z, lie, residual, is_sym, K, k_ok)


def _primitive(Z: EvoField, L: BiForm, lie: BiForm) -> Optional[BiForm]:
    space = L.space
    if contract_prolonged(Z, euler_lagrange(L).as_form()).is_zero:
        # L_{pr Z} L = iota EL - d_H(iota theta), so -iota theta is exact here
        return -contract_prolonged(Z, ibp_theta(L).theta) if not lie.is_zero else BiForm(space, space.dim - 1, 0)
    try:
        return horizontal_primitive(lie)
    except (SymmetryError, DomainError):
        return None


def noether_current(Z: EvoField, K: Optional[BiForm], L: BiForm) -> NoetherPair:
    """``P = K + iota_{pr Z} theta_L`` together with its conservation residual."""
    cert = check_symmetry(Z, L, K)
    if not cert.is_symmetry:
        raise SymmetryError("not a symmetry of the Lagrangian", cert.residual_source)
    if cert.K is None:
        raise SymmetryError("no horizontal primitive K available; supply one")
    if cert.k_verified is False:
        raise SymmetryError("supplied K does not satisfy L_{pr Z} L = d_H K", cert.lie_of_L - d_H(cert.K))
    theta = ibp_theta(L).theta
    P = cert.K + contract_prolonged(Z, theta)
    EL = euler_lagrange(L)
    residual = d_H(P) - contract_prolonged(Z, EL.as_form())
    return NoetherPair(P, Z, cert.K, residual)


def trivial_symmetry(T: Mapping, L: BiForm) -> EvoField:
    """``Z^a = T^{ab} EL_b`` for an antisymmetric table ``T[(a, b)]``."""
    EL = euler_lagrange(L)
    fields = [f for f, _ in EL.components]
    table = {k: Expr.coerce(v) for k, v in T.items()}
    for a in fields:
        for b in fields:
            tab = table.get((a, b), Expr())
            tba = table.get((b, a), Expr())
            if not (tab + tba).is_zero:
                raise SymmetryError(f"T is not antisymmetric in ({a}, {b})")
    unknown = {x for k in table for x in k} - set(fields)
    if unknown:
        raise SymmetryError(f"T refers to unknown fields {sorted(unknown)}")
    comps = {}
    for a in fields:
        total = Expr()
        for b in fields:
            total = total + table.get((a, b), Expr()) * EL[b]
        comps[a] = total
    return EvoField.make(L.space, comps)


# -- gauge symmetries ------------------------------------------------------


@dataclass(frozen=True)
class GaugeParametrization:
    """``R^a = sum_{K, beta} c^beta_K R^{aK}_beta`` linear in parameter jets."""

    space: JetSpace
    params: tuple
    coefficients: tuple  # (((field, index, param), Expr), ...)

    @staticmethod
    def make(space: JetSpace, params, coefficients: Mapping) -> "GaugeParametrization":
        params = tuple(params)
        coeffs = []
        for (fld, idx, beta), e in coefficients.items():
            if beta not in params:
                raise GaugeError(f"unknown gauge parameter {beta}")
            e = Expr.coerce(e)
            if any(j.field in params for j in e.jets()):
                raise GaugeError("gauge coefficients must not contain parameter jets")
            coeffs.append(((fld, space.index(idx), beta), e))
        coeffs.sort(key=lambda t: (t[0][0], t[0][2], mi_order(t[0][1]), t[0][1]))
        return GaugeParametrization(space, params, tuple(coeffs))

    @property
    def max_order(self) -> int:
        return max((mi_order(k[1]) for k, _ in self.coefficients), default=0)

    def without(self, field: str, index, param: str) -> "GaugeParametrization":
        key = (field, self.space.index(index), param)
        return GaugeParametrization(self.space, self.params, tuple(t for t in self.coefficients if t[0] != key))

    def symbolic_field(self) -> EvoField:
        """``R_c`` with the parameter jets ``c^beta_K`` as free jet coordinates."""
        comps: dict = {}
        for (fld, idx, beta), e in self.coefficients:
            comps[fld] = comps.get(fld, Expr()) + e * self.space.u(beta, idx)
        return EvoField.make(self.space, comps)


def gauge_apply(R: GaugeParametrization, e: Mapping) -> EvoField:
    """Evolutionary field ``R_e`` for concrete parameter functions of the base."""
    values = {}
    for beta in R.params:
        v = Expr.coerce(e.get(beta, 0))
        if v.jets():
            raise GaugeError(f"gauge parameter {beta} must not depend on jet coordinates")
        values[beta] = v
    comps: dict = {}
    for (fld, idx, beta), coeff in R.coefficients:
        comps[fld] = comps.get(fld, Expr()) + total_derivative_multi(values[beta], idx) * coeff
    return EvoField.make(R.space, comps)


def noether_identity(R: GaugeParametrization, L: BiForm) -> dict:
    """``N_beta = sum_J (-1)^|J| D_J(EL_a R^{aJ}_beta)``; raises unless all vanish."""
    EL = euler_lagrange(L)
    N = _noether_operator(R, EL)
    cert = check_symmetry(R.symbolic_field(), L)
    if not cert.is_symmetry or any(not n.is_zero for n in N.values()):
        raise GaugeError("not a gauge symmetry", N)
    return N


def _noether_operator(R: GaugeParametrization, EL: SourceForm) -> dict:
    N = {beta: Expr() for beta in R.params}
    for (fld, idx, beta), coeff in R.coefficients:
        term = total_derivative_multi(EL[fld] * coeff, idx)
        N[beta] = N[beta] - term if mi_order(idx) % 2 else N[beta] + term
    return N


def gauge_current(R: GaugeParametrization, EL: SourceForm) -> tuple:
    """Split ``iota_{pr R_c} EL = sum_beta N_beta c^beta vol + d_H J``; return ``(N, J)``."""
    space = R.space
    F = contract_prolonged(R.symbolic_field(), EL.as_form())
    if F.is_zero:
        return _noether_operator(R, EL), BiForm(space, space.dim - 1, 0)
    dv = d_V(F, fields=R.params)
    if dv.is_zero:
        return _noether_operator(R, EL), BiForm(space, space.dim - 1, 0)
    _, eta = ibp_decompose(dv)
    scaling = EvoField.make(space, {beta: space.u(beta) for beta in R.params})
    J = -contract_prolonged(scaling, eta)
    return _noether_operator(R, EL), J
