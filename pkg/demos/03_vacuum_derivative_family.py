"""Derivative-dependent generators of curl B = 0, div B = 0.

For vacuum fields the generalized class is genuinely larger: any
component can be shifted by a first derivative of the field.
"""

# %%
from pesym import catalog
from pesym.detsolve import AnsatzSpec, solve, verify_generator
from pesym.systems import MAGNETIC, get_system

vac = get_system("vacuum")
basis = solve(vac, AnsatzSpec.coordinate_free(), structure=False)
print(f"constant xi, eta affine in (u, u1): dimension {basis.dimension}")
for g in basis.generators:
    print("  ", g)

# %% Members of the family with a free function f of the field.
A = MAGNETIC.sym("A")
for kw in (dict(beta=1), dict(gamma=1), dict(delta=1), dict(f=(A, 0, 0)), dict(f=(0, A * A, 0))):
    v = catalog.vacuum_operator(**kw)
    print(kw, verify_generator(vac, v).passed)

# %% The f2 coefficient of the third component has to be C_y, not C_x.
bad = catalog.vacuum_operator(f=(0, A, 0), printed=True)
rep = verify_generator(vac, bad)
print("with C_x:", rep.passed, [str(r) for r in rep.residuals])
