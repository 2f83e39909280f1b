"""Exact symbolic variational bicomplex: Euler-Lagrange forms, Noether
currents, presymplectic currents and Hamiltonian pairs for local field
theories on a jet bundle."""

from pathlib import Path as _Path

from .eulerlag import (
    IbpCertificate,
    Shell,
    ShellError,
    SourceForm,
    euler_lagrange,
    euler_lagrange_via_interior,
    ibp_decompose,
    ibp_theta,
    interior_euler,
    shell_reduce,
    theta_first_order,
)
from .forms import (
    BiForm,
    DegreeError,
    EvoField,
    contract_prolonged,
    d_H,
    d_V,
    evo_bracket,
    lie_evolutionary,
    prolonged_action,
    wedge,
)
from .jetcore import DomainError, EvaluationError, Expr, JetSpace, apply_function, partial, total_derivative
from .presymplectic import (
    HamiltonianError,
    HamiltonianPair,
    InternalConsistencyError,
    PresymplecticData,
    gauge_degeneracy,
    hamiltonian_check,
    mechanics_transgression,
    pair_bracket,
    poisson_bracket_mechanics,
    presymplectic_data,
)
from .pullback import (
    FieldExpr,
    OnShellReport,
    check_onshell_field,
    fd_check,
    fd_convergence,
    jacobi_check,
    prolong_field,
    pullback_form,
)
from .symmetry import (
    GaugeError,
    GaugeParametrization,
    NoetherPair,
    SymmetryCertificate,
    SymmetryError,
    check_symmetry,
    gauge_apply,
    gauge_current,
    horizontal_primitive,
    noether_current,
    noether_identity,
    trivial_symmetry,
)

__version__ = "0.1.0"

CORPUS_DIR = _Path(__file__).parent / "corpus"


def corpus_names() -> list:
    """Names of the bundled example theories."""
    return sorted(p.stem for p in CORPUS_DIR.glob("*.vcth"))


def corpus_path(name: str) -> _Path:
    return CORPUS_DIR / (name if name.endswith(".vcth") else name + ".vcth")
