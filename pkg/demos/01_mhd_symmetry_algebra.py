"""Point symmetries of the static plasma equilibrium equations.

curl(B) x B = grad P, div B = 0.  We expand the infinitesimals in an
affine ansatz, build the exact determining matrix and read the symmetry
algebra off its nullspace.
"""

# %%
from pesym import catalog
from pesym.detsolve import AnsatzSpec, basis_report_text, decomposition, solve
from pesym.systems import mhd_equilibrium

s = mhd_equilibrium()
for e in s.equations:
    print("  ", e, "= 0")

# %% The affine ansatz gives 56 unknown coefficients.
basis = solve(s, AnsatzSpec.affine())
print(basis_report_text(basis))

# %% Shifts, scalings and rotations.
print(decomposition(basis.generators))

# %% Nonzero structure constants [X_i, X_j] = c_ij^k X_k.
labels = basis.labels
for i in range(basis.dimension):
    for j in range(i + 1, basis.dimension):
        c = basis.structure[i][j]
        terms = [f"{v}*{labels[k]}" for k, v in enumerate(c) if v]
        if terms:
            print(f"[{labels[i]}, {labels[j]}] = {' + '.join(terms)}")

# %% Does anything appear at higher degree?  Quadratic in x and in (A, B, C, P):
quad = solve(s, AnsatzSpec.quadratic(), structure=False)
print(f"{len(quad.columns)} columns, dimension {quad.dimension}")

# %% The whole operator as LaTeX.
print(basis.to_latex())
assert basis.labels == list(catalog.MHD_LABELS)
