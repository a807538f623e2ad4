"""Named generators: shifts, scalings, rotations and the vacuum derivative family."""

from __future__ import annotations

from .symkernel import Expr, VariableSpace, VectorField, as_expr, param
from .systems import MAGNETIC, PLASMA

# order matches the canonical basis produced by the ansatz solver
MHD_LABELS = (
    "shift_x",
    "dilation",
    "rot_xy",
    "rot_xz",
    "shift_y",
    "rot_yz",
    "shift_z",
    "field_scaling",
    "shift_P",
)

LATEX_CONSTANTS = {
    "shift_x": "l_1",
    "shift_y": "l_2",
    "shift_z": "l_3",
    "shift_P": r"\beta",
    "dilation": "R",
    "field_scaling": r"\alpha",
    "rot_xy": r"\delta",
    "rot_xz": r"\gamma",
    "rot_yz": r"\mu",
}

# symbolic constants of the full operator
OPERATOR_PARAMS = {
    "shift_x": "l1",
    "shift_y": "l2",
    "shift_z": "l3",
    "shift_P": "beta",
    "dilation": "R",
    "field_scaling": "alpha",
    "rot_xy": "delta",
    "rot_xz": "gamma",
    "rot_yz": "mu",
}


def _rotation(sp: VariableSpace, a: str, b: str, fa: str, fb: str) -> dict:
    s = sp.sym
    return {a: s(b), b: -s(a), fa: s(fb), fb: -s(fa)}


def spatial_generators(sp: VariableSpace = PLASMA) -> dict:
    """Translations, dilation, field scaling and rotations over ``sp``.

    The pressure shift and the pressure part of the field scaling are
    included only when ``P`` is one of the dependents.
    """
    s = sp.sym
    has_p = "P" in sp.dependents
    comps = {
        "shift_x": {"x": 1},
        "shift_y": {"y": 1},
        "shift_z": {"z": 1},
        "dilation": {"x": s("x"), "y": s("y"), "z": s("z")},
        "field_scaling": {"A": s("A"), "B": s("B"), "C": s("C")},
        "rot_xy": _rotation(sp, "x", "y", "A", "B"),
        "rot_xz": _rotation(sp, "x", "z", "A", "C"),
        "rot_yz": _rotation(sp, "y", "z", "B", "C"),
    }
    if has_p:
        comps["shift_P"] = {"P": 1}
        comps["field_scaling"]["P"] = 2 * s("P")
    return {k: VectorField.from_dict(sp, v) for k, v in comps.items()}


def mhd_generators() -> dict:
    g = spatial_generators(PLASMA)
    return {k: g[k] for k in MHD_LABELS}


def force_free_generators(sp: VariableSpace | None = None) -> dict:
    """Pressure-free generators; ``dilation`` is included but see ``verify`` flags."""
    sp = sp or MAGNETIC
    return spatial_generators(sp)


def operator(generators: dict, names: dict | None = None) -> VectorField:
    """Sum of generators each multiplied by a symbolic constant."""
    names = names or OPERATOR_PARAMS
    out = None
    for label, v in generators.items():
        term = v * Expr.of(param(names[label]))
        out = term if out is None else out + term
    return out


def mhd_operator() -> VectorField:
    return operator(mhd_generators())


def anisotropic_scaling(sp: VariableSpace = PLASMA) -> VectorField:
    """x -> e^a x alone; not a symmetry of any of the built-in systems."""
    return VectorField.from_dict(sp, {"x": sp.sym("x")})


def vacuum_operator(
    f=(0, 0, 0),
    alpha=0,
    beta=0,
    gamma=0,
    delta=0,
    mu=(0, 0, 0),
    printed: bool = False,
) -> VectorField:
    """Derivative-dependent generator family of the vacuum equations.

    With ``printed=False`` the third eta row uses C_y as the coefficient of
    f2, which is the form that verifies.  ``printed=True`` uses C_x instead,
    a variant that circulates in print, so it can be checked as written.
    """
    sp = MAGNETIC
    s = sp.sym
    f1, f2, f3 = (as_expr(v) for v in f)
    alpha, beta, gamma, delta = (as_expr(v) for v in (alpha, beta, gamma, delta))
    m1, m2, m3 = (as_expr(v) for v in mu)
    third_f2 = s("C_x") if printed else s("C_y")
    eta_a = (
        s("A_x") * f1 + s("B_x") * f2 + s("C_x") * f3
        + alpha * s("A") + beta * s("A_x") + gamma * s("B_x") + delta * s("C_x") + m1
    )
    eta_b = (
        s("B_x") * f1 + s("B_y") * f2 + s("C_y") * f3
        + alpha * s("B") + beta * s("B_x") + gamma * s("B_y") + delta * s("C_y") + m2
    )
    eta_c = (
        s("C_x") * f1 + third_f2 * f2 + s("C_z") * f3
        + alpha * s("C") + beta * s("C_x") + gamma * s("C_y") + delta * s("C_z") + m3
    )
    return VectorField(sp, (f1, f2, f3), (eta_a, eta_b, eta_c))
