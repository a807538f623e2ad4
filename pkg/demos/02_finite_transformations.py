"""From generators to finite transformations, and solutions to solutions.

Each affine generator integrates to z -> exp(aM) z + t(a).  Pushing a
known equilibrium through the flow gives another equilibrium; a map that
is not a symmetry does not.
"""

# %%
import math

import sympy as sp

from pesym import catalog, numcheck
from pesym.liegroup import compose, exponentiate, exponentiate_exact, linearize
from pesym.systems import PLASMA, mhd_equilibrium

gens = {k: linearize(v, k) for k, v in catalog.mhd_generators().items()}
print(exponentiate(gens["rot_xy"], math.pi / 2).describe(PLASMA))

# %% Field scaling: pressure scales with the square of the field.
print(exponentiate(gens["field_scaling"], 1.0).describe(PLASMA))

# %% One-parameter group law.
t = compose(exponentiate(gens["dilation"], 0.3), exponentiate(gens["dilation"], 0.4))
print("composed parameter", t.param)

# %% Transport the ABC field through an exact rotation and check it.
mhd = mhd_equilibrium()
abc = numcheck.seed("abc_beltrami")
rotated = numcheck.transform_field(exponentiate_exact(gens["rot_yz"], sp.Rational(1, 3)), abc)
print(rotated["B"])
rep = numcheck.residual(mhd, rotated, "analytic")
print("exact zero per equation:", rep.exact)

# %% x -> 2x alone is not a symmetry.
aniso = exponentiate(linearize(catalog.anisotropic_scaling()), math.log(2))
broken = numcheck.transform_field(aniso, abc)
rep = numcheck.residual(mhd, broken, "central2")
print(f"relative central2 residual {rep.relative():.3f}")

# %% The screw pinch only depends on x, so it survives the same map.
pinch = numcheck.transform_field(aniso, numcheck.seed("screw_pinch"))
print(f"screw pinch after x -> 2x: {numcheck.residual(mhd, pinch, 'central2').relative():.1e}")
