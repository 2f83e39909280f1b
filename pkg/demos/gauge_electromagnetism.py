"""Maxwell theory in 1+1 dimensions: the gauge symmetry, its Noether
identity, and the degeneracy of the presymplectic current along pure gauge
directions."""

from __future__ import annotations

from fractions import Fraction

from varform import (
    BiForm,
    GaugeParametrization,
    JetSpace,
    euler_lagrange,
    gauge_apply,
    gauge_current,
    gauge_degeneracy,
    noether_identity,
    presymplectic_data,
)

sp = JetSpace(["t", "x"], ["A0", "A1", "c"])
F = sp.u("A1", "t") - sp.u("A0", "x")
L = BiForm.volume(sp, Fraction(1, 2) * F**2)
fields = ["A0", "A1"]

EL = euler_lagrange(L, fields=fields)
for f in fields:
    print(f"E[{f}] =", EL[f])

# delta A_mu = D_mu c
R = GaugeParametrization.make(sp, ["c"], {("A0", "t", "c"): 1, ("A1", "x", "c"): 1})
print("gauge field for c = t*x:", gauge_apply(R, {"c": sp.x(0) * sp.x(1)}))
print("Noether identity:", noether_identity(R, L))

N, J = gauge_current(R, EL)
print("gauge current J:", J)

P = presymplectic_data(L, fields=fields)
print("omega:", P.omega)
_, _, rho = gauge_degeneracy(R, P)
# raises if iota_{R c} omega + d_V J were not d_H-closed
print("iota_{R c} omega + d_V J =", rho)
