"""Presymplectic current, Hamiltonian pairs and their brackets."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

from .eulerlag import Shell, SourceForm, euler_lagrange, ibp_theta
from .forms import BiForm, DegreeError, EvoField, contract_prolonged, d_H, d_V, evo_bracket
from .jetcore import Expr, JetSpace
from .symmetry import GaugeError, GaugeParametrization, gauge_current


class HamiltonianError(ValueError):
    def __init__(self, message: str, residual=None):
        super().__init__(message)
        self.residual = residual


class InternalConsistencyError(RuntimeError):
    """A result that must hold by construction failed verification."""


@dataclass(frozen=True)
class PresymplecticData:
    theta: BiForm
    omega: BiForm
    source: SourceForm
    identity_residual: BiForm  # d_H omega - d_V E, must vanish

    @property
    def space(self) -> JetSpace:
        return self.omega.space

    @property
    def fields(self) -> tuple:
        return tuple(f for f, _ in self.source.components)

    @property
    def ok(self) -> bool:
        return self.identity_residual.is_zero


def presymplectic_data(L: BiForm, fields=None) -> PresymplecticData:
    """theta from integration by parts, ``omega = d_V theta``, and the check
    ``d_H omega = d_V E`` which follows from ``d_V^2 = 0``."""
    cert = ibp_theta(L)
    if not cert.ok:
        raise InternalConsistencyError("integration by parts left a residual")
    source = euler_lagrange(L, fields=fields)
    theta = cert.theta
    omega = d_V(theta)
    if omega.is_zero:
        omega = BiForm(L.space, L.space.dim - 1, 2)
    dv_source = d_V(source.as_form())
    if dv_source.is_zero:
        dv_source = BiForm(L.space, L.space.dim, 2)
    residual = d_H(omega) - dv_source
    return PresymplecticData(theta, omega, source, residual)


@dataclass(frozen=True)
class HamiltonianPair:
    H: BiForm
    Z: EvoField
    rho: BiForm  # iota_{pr Z} omega + d_V H
    on_shell: bool = False

    def __iter__(self):
        yield self.H
        yield self.Z


def _vertical_of(H: BiForm, fields) -> BiForm:
    out = d_V(H, fields=fields)
    if out.is_zero:
        out = BiForm(H.space, H.p, H.q + 1)
    return out


def hamiltonian_check(
    H: BiForm,
    Z: EvoField,
    P: PresymplecticData,
    shell: Optional[Shell] = None,
    T: Optional[BiForm] = None,
) -> HamiltonianPair:
    """Accept ``(H, Z)`` when ``rho = iota_{pr Z} omega + d_V H`` is d_H-closed.

    Closedness is tested exactly; if that fails and ``shell`` is given, the
    residual ``d_H rho`` is reduced on the shell first. An explicit ``T``
    is checked against ``rho = d_H T``.
    """
    space = P.space
    d = space.dim
    if H.degree != (d - 1, 0):
        raise DegreeError(f"H must be a ({d - 1},0)-form, got {H.degree}")
    rho = contract_prolonged(Z, P.omega) + _vertical_of(H, P.fields)
    if T is not None:
        if T.degree != (d - 2, 1):
            raise DegreeError(f"T must be a ({d - 2},1)-form, got {T.degree}")
        diff = rho - d_H(T)
        if not diff.is_zero:
            raise HamiltonianError("rho differs from d_H T", diff)
        return HamiltonianPair(H, Z, rho)
    r = d_H(rho)
    if r.is_zero:
        return HamiltonianPair(H, Z, rho)
    if shell is not None and shell.reduce_form(r).is_zero:
        return HamiltonianPair(H, Z, rho, on_shell=True)
    raise HamiltonianError("d_H(iota_{pr Z} omega + d_V H) does not vanish", r)


def pair_bracket(
    pair1: HamiltonianPair,
    pair2: HamiltonianPair,
    P: PresymplecticData,
    shell: Optional[Shell] = None,
) -> HamiltonianPair:
    """``H = -iota_{Z1} iota_{Z2} omega`` with ``Z = [Z1, Z2]``."""
    H1, Z1 = pair1
    H2, Z2 = pair2
    H = -contract_prolonged(Z1, contract_prolonged(Z2, P.omega))
    if H.is_zero:
        H = BiForm(P.space, P.space.dim - 1, 0)
    Z = evo_bracket(Z1, Z2)
    try:
        return hamiltonian_check(H, Z, P, shell)
    except HamiltonianError as exc:
        raise InternalConsistencyError("bracket of Hamiltonian pairs failed verification") from exc


def gauge_degeneracy(R: GaugeParametrization, P: PresymplecticData) -> tuple:
    """Verify that ``iota_{pr R_c} omega + d_V J`` is d_H-closed.

    Returns ``(N, J, rho)``; raises ``GaugeError`` when the Noether identity
    fails or the closedness residual is non-zero.
    """
    N, J = gauge_current(R, P.source)
    if any(not n.is_zero for n in N.values()):
        raise GaugeError("Noether identity fails for the gauge parametrization", N)
    Zc = R.symbolic_field()
    rho = contract_prolonged(Zc, P.omega) + _vertical_of(J, P.fields)
    r = d_H(rho)
    if not r.is_zero:
        raise GaugeError("gauge field is not a degenerate direction of omega", r)
    return N, J, rho


# -- mechanics (d = 1) -----------------------------------------------------


def _require_mechanics(P: PresymplecticData) -> None:
    if P.space.dim != 1:
        raise DegreeError("transgression is implemented for mechanics (one base coordinate)")


def _on_solution(e: Expr, space: JetSpace, solution, t0) -> Expr:
    if solution is not None:
        from .pullback import prolong_field

        e = e.subs(prolong_field(solution, max(1, _order(e))))
    return e.subs({space.coord(0): Expr.coerce(t0)})


def _order(e: Expr) -> int:
    return max((j.order for j in e.jets()), default=0)


def _as_field(space: JetSpace, b) -> EvoField:
    if isinstance(b, EvoField):
        return b
    return EvoField.make(space, b.as_dict() if hasattr(b, "as_dict") else b)


def mechanics_transgression(
    P: PresymplecticData,
    tangents,
    t0=0,
    solution=None,
) -> Expr:
    """``iota_{b1} iota_{b2} omega`` at ``t = t0`` for tangent vectors ``b1, b2``.

    Tangents are evolutionary fields whose components depend on ``t`` (and
    parameters) only; ``solution`` optionally fixes the base point.
    """
    _require_mechanics(P)
    b1, b2 = (_as_field(P.space, b) for b in tangents)
    for b in (b1, b2):
        for _, comp in b.components:
            if comp.jets():
                raise ValueError("tangent vectors must not depend on jet coordinates")
    val = contract_prolonged(b1, contract_prolonged(b2, P.omega))
    return _on_solution(val.scalar() if not val.is_zero else Expr(), P.space, solution, t0)


def poisson_bracket_mechanics(
    pair1,
    pair2,
    P: PresymplecticData,
    t0=0,
    solution=None,
    shell: Optional[Shell] = None,
) -> Expr:
    """``{H1, H2} = -iota_{Z1} iota_{Z2} omega`` evaluated at ``t = t0``.

    Each pair must satisfy the Hamiltonian condition either identically
    (optionally on the shell) or at ``t = t0`` after transgression.
    """
    _require_mechanics(P)
    for H, Z in (pair1, pair2):
        check_transgressed_pair(H, Z, P, t0, solution, shell)
    (_, Z1), (_, Z2) = pair1, pair2
    val = contract_prolonged(Z1, contract_prolonged(Z2, P.omega))
    return -_on_solution(val.scalar() if not val.is_zero else Expr(), P.space, solution, t0)


def check_transgressed_pair(H, Z, P, t0=0, solution=None, shell=None) -> None:
    """Raise ``HamiltonianError`` unless ``(H, Z)`` is Hamiltonian identically or at ``t0``."""
    try:
        hamiltonian_check(H, Z, P, shell)
        return
    except HamiltonianError:
        pass
    rho = contract_prolonged(Z, P.omega) + _vertical_of(H, P.fields)
    for _, c in rho.terms.items():
        if not _on_solution(c, P.space, solution, t0).is_zero:
            raise HamiltonianError(f"pair is not Hamiltonian at t = {t0}", rho)
