"""Looking for maps between systems at the infinitesimal level.

Ask the prolonged generator to produce the difference between a source
and a target system, pr X (E_src) = E_src - E_tgt, with the unknown
part of the target (alpha, or the pressure) expanded as a polynomial.
"""

# %%
from pesym.backlund import run_preset

# %% Vacuum fields to force-free fields with alpha = alpha(u, u1).
for degree in (1, 2):
    r = run_preset("vacuum-to-forcefree", degree)
    print(r.summary())
    print("   ", *r.provenance, sep="\n    ")

# %% Force-free fields in cross-product form to equilibria with P(x, u, u1).
r = run_preset("forcefree-to-mhd", 1)
print(r.summary())

# %% Only constant pressure is admissible, and it changes nothing.
print("admissible:", [str(e) for e in r.defect_basis])
print("trivial:   ", [str(e) for e in r.trivial_basis])
