"""Free particle L = u_t^2: equations of motion, presymplectic current,
Noether charges and their brackets, evaluated on straight-line motion."""

from __future__ import annotations

from varform import (
    BiForm,
    EvoField,
    FieldExpr,
    JetSpace,
    check_onshell_field,
    check_symmetry,
    euler_lagrange,
    mechanics_transgression,
    noether_current,
    presymplectic_data,
)

sp = JetSpace(["t"], ["u"])
t, ut = sp.x(0), sp.u("u", "t")
L = BiForm.volume(sp, ut**2)

EL = euler_lagrange(L)
print("EL:", EL["u"])

line = FieldExpr.make(sp, {"u": sp.param("v") * t + sp.param("c")})
print("u = v t + c on shell:", check_onshell_field(line, EL).ok)
print("u = t^2 residual:", check_onshell_field(FieldExpr.make(sp, {"u": t**2}), EL).residuals["u"])

P = presymplectic_data(L)
print("theta:", P.theta)
print("omega:", P.omega)
print("d_H omega = d_V E:", P.ok)

# two tangent vectors at the origin of time
for b1, b2 in [({"u": 1}, {"u": t}), ({"u": t}, {"u": 1})]:
    print(f"omega({b1['u']}, {b2['u']}) =", mechanics_transgression(P, (b1, b2), t0=0))

for name, comps in [("shift", {"u": 1}), ("boost", {"u": t}), ("time", {"u": ut})]:
    Z = EvoField.make(sp, comps)
    cert = check_symmetry(Z, L)
    pair = noether_current(Z, cert.K, L)
    print(f"{name:5s} K = {cert.K}   P = {pair.P}")
