"""Analyses of a parsed theory, each returning report data and certificate checks."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

from .dsl.theory import Theory
from .eulerlag import ShellError, euler_lagrange, euler_lagrange_via_interior, ibp_theta
from .forms import BiForm, DegreeError, d_H, d_V
from .jetcore import Background, DomainError, EvaluationError, Expr, Param, max_jet_order
from .presymplectic import (
    HamiltonianError,
    InternalConsistencyError,
    PresymplecticData,
    check_transgressed_pair,
    gauge_degeneracy,
    hamiltonian_check,
    mechanics_transgression,
    pair_bracket,
    poisson_bracket_mechanics,
    presymplectic_data,
)
from .pullback import check_onshell_field, fd_check, jacobi_check, pullback_form
from .symmetry import GaugeError, SymmetryError, check_symmetry, noether_current, noether_identity


@dataclass
class Options:
    tol: float = 1e-6
    h: float = 1e-4
    seed: int = 0
    fd_points: int = 3


@dataclass
class Analysis:
    """Lazily computed objects shared between report sections."""

    theory: Theory
    options: Options = field(default_factory=Options)
    report: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    _cache: dict = field(default_factory=dict)

    def check(self, name: str, ok: bool) -> bool:
        self.checks[name] = bool(ok)
        return ok

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    # shared objects
    @property
    def L(self) -> BiForm:
        return self.theory.lagrangian_form()

    @property
    def EL(self):
        if "el" not in self._cache:
            self._cache["el"] = euler_lagrange(self.L, fields=self.theory.fields)
        return self._cache["el"]

    @property
    def presymplectic(self) -> PresymplecticData:
        if "ps" not in self._cache:
            self._cache["ps"] = presymplectic_data(self.L, fields=self.theory.fields)
        return self._cache["ps"]

    @property
    def shell(self):
        if "shell" not in self._cache:
            self._cache["shell"] = self.theory.shell_object()
        return self._cache["shell"]

    def finish(self) -> dict:
        out = dict(self.report)
        out["theory"] = self.theory.name
        out["checks"] = dict(self.checks)
        if self.notes:
            out["notes"] = list(self.notes)
        return out


def theory_max_order(th: Theory) -> int:
    exprs = [th.lagrangian]
    for s in th.symmetries:
        exprs += [e for _, e in s.components] + [e for _, e in (s.K or ())]
    for g in th.gauges:
        exprs += [e for _, _, e in g.coefficients]
        exprs += [Expr.of(th.space.jet_symbol(g.param, idx)) for _, idx, _ in g.coefficients]
    for h in th.hamiltonians:
        exprs += [e for _, e in h.H] + [e for _, e in h.components]
    for _, e in th.shell:
        exprs.append(e)
    order = max(max_jet_order(e) for e in exprs)
    for jname, _ in th.shell:
        order = max(order, len(jname.partition("_")[2]))
    return order


# -- sections --------------------------------------------------------------


def run_el(a: Analysis) -> None:
    el = a.EL
    a.report["el"] = el
    other = euler_lagrange_via_interior(a.L)
    a.check("el_both_paths", other == el)


def run_theta(a: Analysis) -> None:
    cert = ibp_theta(a.L)
    a.report["theta"] = cert.theta
    a.check("ibp_residual", cert.ok)


def run_omega(a: Analysis) -> None:
    P = a.presymplectic
    a.report["omega"] = P.omega
    a.check("omega_closed", d_V(P.omega).is_zero)
    a.check("presymplectic_identity", P.ok)


def run_bicomplex(a: Analysis) -> None:
    P = a.presymplectic
    forms = [a.L, P.theta, P.omega]
    good = True
    for f in forms:
        if f.is_zero:
            continue
        good &= d_V(d_V(f)).is_zero
        good &= (d_H(d_V(f)) + d_V(d_H(f))).is_zero
        if f.p + 2 <= f.space.dim:
            good &= d_H(d_H(f)).is_zero
    a.check("bicomplex", good)


def _symmetry_K(a: Analysis, decl) -> Optional[BiForm]:
    if decl.K is None:
        return None
    return a.theory.codim_one(decl.K)


def run_symmetries(a: Analysis) -> None:
    th = a.theory
    out = {}
    for decl in th.symmetries:
        Z = th.evo_field(decl.components)
        cert = check_symmetry(Z, a.L, _symmetry_K(a, decl))
        entry = {
            "field": Z,
            "is_symmetry": cert.is_symmetry,
            "residual": cert.residual_source,
        }
        if cert.K is not None:
            entry["K"] = cert.K
            entry["K_source"] = "declared" if decl.K is not None else "computed"
        if cert.k_verified is not None:
            entry["K_verified"] = cert.k_verified
        out[decl.name] = entry
        a.check(f"symmetry:{decl.name}", cert.is_symmetry and cert.k_verified is not False)
    a.report["symmetries"] = out


def noether_pairs(a: Analysis) -> dict:
    if "noether" in a._cache:
        return a._cache["noether"]
    th = a.theory
    pairs = {}
    for decl in th.symmetries:
        Z = th.evo_field(decl.components)
        try:
            pairs[decl.name] = noether_current(Z, _symmetry_K(a, decl), a.L)
        except (SymmetryError, DomainError, DegreeError) as exc:
            pairs[decl.name] = exc
    a._cache["noether"] = pairs
    return pairs


def _hamiltonian_status(a: Analysis, H: BiForm, Z) -> tuple:
    """Return ``(status, pair_or_None)``."""
    try:
        pair = hamiltonian_check(H, Z, a.presymplectic, a.shell)
        return ("on shell" if pair.on_shell else "identically"), pair
    except HamiltonianError:
        return "failed", None
    except ShellError as exc:
        a.notes.append(str(exc))
        return "failed", None


def run_noether(a: Analysis) -> None:
    out = {}
    for name, pair in noether_pairs(a).items():
        if isinstance(pair, Exception):
            out[name] = {"error": str(pair)}
            a.check(f"noether:{name}", False)
            continue
        status, _ = _hamiltonian_status(a, pair.P, pair.Z)
        out[name] = {
            "P": pair.P,
            "K": pair.K,
            "conservation_residual": pair.residual,
            "hamiltonian": status,
        }
        a.check(f"noether:{name}", pair.ok)
        if status == "failed":
            if a.shell is None:
                a.notes.append(f"noether:{name}: Hamiltonian property not certified (no shell declared)")
            else:
                a.check(f"noether_hamiltonian:{name}", False)
    a.report["noether_currents"] = out


def run_gauge(a: Analysis) -> None:
    th = a.theory
    out = {}
    for g in th.gauges:
        R = th.gauge_parametrization(g)
        entry: dict = {"parameter": g.param}
        try:
            entry["noether_identity"] = noether_identity(R, a.L)
            ident_ok = True
        except GaugeError as exc:
            entry["noether_identity"] = exc.residual
            entry["error"] = str(exc)
            ident_ok = False
        a.check(f"gauge_identity:{g.name}", ident_ok)
        try:
            _, J, rho = gauge_degeneracy(R, a.presymplectic)
            entry["J"] = J
            entry["rho"] = rho
            degen_ok = True
        except GaugeError as exc:
            entry["degeneracy_residual"] = exc.residual
            degen_ok = False
        a.check(f"gauge_degeneracy:{g.name}", degen_ok)
        out[g.name] = entry
    a.report["gauge"] = out


def run_hamiltonian(a: Analysis) -> None:
    th = a.theory
    out: dict = {"pairs": {}, "brackets": {}}
    verified = {}
    for h in th.hamiltonians:
        H = th.codim_one(h.H) if h.H else BiForm(th.space, th.dim - 1, 0)
        Z = th.evo_field(h.components)
        status, pair = _hamiltonian_status(a, H, Z)
        if status == "failed" and th.dim == 1:
            try:
                check_transgressed_pair(H, Z, a.presymplectic, 0)
                status = "at t=0"
            except HamiltonianError:
                pass
        out["pairs"][h.name] = {"H": H, "Z": Z, "status": status}
        a.check(f"hamiltonian:{h.name}", status != "failed")
        if status != "failed":
            verified[h.name] = (H, Z, pair)
    names = list(verified)
    for i, n1 in enumerate(names):
        for n2 in names[i + 1:]:
            p1, p2 = verified[n1][2], verified[n2][2]
            if p1 is None or p2 is None:
                continue
            try:
                br = pair_bracket(p1, p2, a.presymplectic, a.shell)
                out["brackets"][f"{n1},{n2}"] = {"H": br.H, "Z": br.Z}
            except (InternalConsistencyError, ShellError) as exc:
                out["brackets"][f"{n1},{n2}"] = {"error": str(exc)}
                a.check(f"bracket:{n1},{n2}", False)
    if th.dim == 1 and names:
        table = {}
        for n1 in names:
            for n2 in names:
                H1, Z1, _ = verified[n1]
                H2, Z2, _ = verified[n2]
                table[f"{n1},{n2}"] = poisson_bracket_mechanics((H1, Z1), (H2, Z2), a.presymplectic, 0, shell=a.shell)
        out["poisson_at_t0"] = {"t0": "0", "values": table}
    a.report["hamiltonian"] = out


def _param_values(a: Analysis, rng: random.Random, exprs) -> dict:
    names = set()
    for e in exprs:
        names |= {s.label for s in e.free_symbols() if isinstance(s, Param)}
    return {n: round(rng.uniform(0.5, 1.5), 3) for n in sorted(names)}


def run_onshell(a: Analysis) -> None:
    th = a.theory
    rng = random.Random(a.options.seed)
    out = {}
    pairs = noether_pairs(a) if th.symmetries else {}
    for sol in th.solutions:
        phi = th.field_expr(sol)
        rep = check_onshell_field(phi, a.EL)
        entry: dict = {"residuals": rep.residuals, "status": rep.status}
        a.check(f"onshell:{sol.name}", rep.ok)
        if rep.ok:
            conserved = {}
            fd = {}
            for name, pair in pairs.items():
                if isinstance(pair, Exception):
                    continue
                dP = pullback_form(d_H(pair.P), phi)
                conserved[name] = dP.is_zero
                a.check(f"conservation:{sol.name}:{name}", dP.is_zero)
                worst = _fd_worst(a, rng, pair.P, phi)
                if worst is not None:
                    fd[name] = worst
                    a.check(f"fd:{sol.name}:{name}", worst <= a.options.tol)
            entry["conserved"] = conserved
            if fd:
                entry["fd_residual"] = fd
        out[sol.name] = entry
    a.report["solutions"] = out


def _fd_worst(a: Analysis, rng: random.Random, alpha: BiForm, phi) -> Optional[float]:
    base = pullback_form(alpha, phi)
    exprs = [c for c in base.terms.values()]
    if any(isinstance(s, Background) for e in exprs for s in e.free_symbols()):
        return None
    values = _param_values(a, rng, exprs)
    worst = 0.0
    for _ in range(a.options.fd_points):
        point = [round(rng.uniform(-1.0, 1.0), 3) for _ in range(a.theory.dim)]
        try:
            worst = max(worst, fd_check(alpha, phi, point, a.options.h, values))
        except EvaluationError:
            return None
    return worst


def run_transgress(a: Analysis) -> None:
    th = a.theory
    out = {}
    for tr in th.transgressions:
        entry: dict = {"at": tr.at}
        if th.dim != 1:
            entry["error"] = "transgression is evaluated for one base coordinate only"
            a.check(f"transgression:{tr.name}", False)
            out[tr.name] = entry
            continue
        base = th.field_expr(th.solution(tr.base)) if tr.base else None
        good = True
        if base is not None:
            if not check_onshell_field(base, a.EL).ok:
                good = False
                entry["error"] = f"base {tr.base} is not on shell"
            else:
                for name in tr.tangents:
                    jc = jacobi_check(base, th.field_expr(th.solution(name)), a.EL)
                    if not jc.ok:
                        good = False
                        entry["error"] = f"tangent {name} fails the linearized equations"
        tangents = [th.evo_field(th.solution(n).components) for n in tr.tangents]
        entry["value"] = mechanics_transgression(a.presymplectic, tangents, tr.at, base)
        a.check(f"transgression:{tr.name}", good)
        out[tr.name] = entry
    a.report["transgression"] = out


SECTIONS = {
    "el": [run_el],
    "theta": [run_theta],
    "omega": [run_omega],
    "symmetries": [run_symmetries],
    "noether": [run_noether],
    "gauge": [run_gauge],
    "hamiltonian": [run_hamiltonian],
    "onshell": [run_onshell],
    "transgress": [run_transgress],
    "check-all": [
        run_el,
        run_theta,
        run_omega,
        run_bicomplex,
        run_symmetries,
        run_noether,
        run_gauge,
        run_hamiltonian,
        run_onshell,
        run_transgress,
    ],
}


def analyze(th: Theory, command: str, options: Optional[Options] = None) -> Analysis:
    a = Analysis(th, options or Options())
    for step in SECTIONS[command]:
        step(a)
    return a
