"""Infinitesimal search for transformations between two systems.

Instead of annihilating the source equations, the prolonged generator is
asked to produce the difference between source and target equations,

    pr X (E_src) |_{E_src = 0}  =  F,   F = E_src - E_tgt[defect],

where the target differs from the source by one unknown scalar (a
parameter such as alpha, or a dependent such as P) that is replaced by a
polynomial "defect" in (x, u, u1).  F is linear in the defect, so the
unknowns are the generator coefficients and the defect coefficients
together and the admissible set is an exact nullspace.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .detsolve import (
    AnsatzSpec,
    _split_jets,
    field_residuals,
    generate_determining,
    vector_from_columns,
)
from .linalg import Echelon, rref
from .symkernel import (
    Expr,
    expr_to_json,
    jet,
    param,
    substitute,
    total_derivative,
)
from .systems import PDESystem, get_system, on_shell_reduce

# defect masks default to the assumptions of the two classical scans
DEFAULT_MASKS = {"alpha": ("u", "u1"), "P": ("x", "u", "u1")}


class ScanInputError(ValueError):
    pass


@dataclass(frozen=True)
class DefectSpec:
    """Target system and the unknown scalar that separates it from the source.

    ``unknown`` is a parameter name of the target, a dependent of the target
    that the source lacks, or ``None`` for a zero defect.  The defect is a
    polynomial of total degree ``<= degree`` in the ``mask`` blocks of the
    source variables.
    """

    source: str
    target: str
    unknown: str | None = None
    mask: tuple = ()
    degree: int = 1

    def __post_init__(self):
        if self.unknown is not None and not self.mask:
            object.__setattr__(self, "mask", DEFAULT_MASKS.get(self.unknown, ("x", "u", "u1")))
        bad = set(self.mask) - {"x", "u", "u1"}
        if bad:
            raise ScanInputError(f"unknown mask blocks {sorted(bad)}")
        if self.degree < 0:
            raise ScanInputError("defect degree must be non-negative")

    def monomials(self, s: PDESystem) -> list[tuple]:
        if self.unknown is None:
            return []
        d = self.degree
        a = AnsatzSpec("generalized", d, d, d, d)
        return a.monomials(s, self.mask)

    def to_json(self) -> dict:
        return {
            "source": self.source,
            "target": self.target,
            "unknown": self.unknown,
            "mask": list(self.mask),
            "degree": self.degree,
        }


def vacuum_to_forcefree(degree: int = 1) -> DefectSpec:
    return DefectSpec("vacuum", "force-free-const-alpha", "alpha", ("u", "u1"), degree)


def forcefree_to_mhd(degree: int = 1) -> DefectSpec:
    return DefectSpec("force-free-cross", "mhd", "P", ("x", "u", "u1"), degree)


def mhd_to_mhd() -> DefectSpec:
    return DefectSpec("mhd", "mhd", None)


PRESETS = {
    "vacuum-to-forcefree": vacuum_to_forcefree,
    "forcefree-to-mhd": forcefree_to_mhd,
    "mhd-to-mhd": lambda degree=0: mhd_to_mhd(),
}


# --------------------------------------------------------------------------
# inhomogeneity


def _defect_map(target: PDESystem, unknown: str | None, value: Expr) -> dict:
    if unknown is None:
        return {}
    if unknown in target.params:
        return {param(unknown): value}
    if unknown in target.space.dependents:
        out = {jet(unknown): value}
        for n in target.space.independents:
            out[jet(unknown, n)] = total_derivative(value, n, max_order=None)
        return out
    raise ScanInputError(f"{unknown!r} is neither a parameter nor a dependent of {target.name!r}")


def _check_spaces(src: PDESystem, tgt: PDESystem, unknown: str | None) -> None:
    if src.space.independents != tgt.space.independents:
        raise ScanInputError("source and target have different independent variables")
    deps = tuple(d for d in tgt.space.dependents if d != unknown)
    if deps != src.space.dependents:
        raise ScanInputError(
            f"target dependents {tgt.space.dependents} do not extend source {src.space.dependents}"
        )
    if len(src.equations) != len(tgt.equations):
        raise ScanInputError("source and target have different numbers of equations")


def inhomogeneity(src: PDESystem, tgt: PDESystem, unknown: str | None, value: Expr) -> list[Expr]:
    """F = E_src - E_tgt[unknown := value], reduced on the source shell."""
    mapping = _defect_map(tgt, unknown, value)
    out = []
    for es, et in zip(src.equations, tgt.equations):
        f = es - substitute(et, mapping)
        out.append(on_shell_reduce(f, src, depth=1))
    return out


# --------------------------------------------------------------------------
# scan


@dataclass
class ScanResult:
    spec: DefectSpec
    generator_ansatz: AnsatzSpec
    classification: str
    defect_monomials: list
    defect_basis: list  # admissible defects, as Exprs
    trivial_basis: list  # defects with F identically zero
    solutions: list  # (VectorField, defect Expr) pairs spanning the solution set
    n_generator_columns: int
    n_equations: int
    back_substitution_ok: bool
    provenance: list = field(default_factory=list)

    @property
    def trivial_only(self) -> bool:
        return self.classification == "trivial_only"

    def to_json(self) -> dict:
        return {
            "spec": self.spec.to_json(),
            "generator_ansatz": self.generator_ansatz.to_json(),
            "classification": self.classification,
            "defect_basis": [expr_to_json(e) for e in self.defect_basis],
            "trivial_defects": [expr_to_json(e) for e in self.trivial_basis],
            "solution_dimension": len(self.solutions),
            "solutions": [
                {"generator": v.to_json(), "defect": expr_to_json(d)} for v, d in self.solutions
            ],
            "columns": {"generator": self.n_generator_columns, "defect": len(self.defect_monomials)},
            "equations": self.n_equations,
            "back_substitution": self.back_substitution_ok,
            "provenance": self.provenance,
        }

    def summary(self) -> str:
        u = self.spec.unknown or "defect"
        admissible = ", ".join(str(e) for e in self.defect_basis) or "0"
        return (
            f"{self.spec.source} -> {self.spec.target}: {self.classification}; "
            f"admissible {u} in span{{{admissible}}}; solution dimension {len(self.solutions)}"
        )


def _defect_expr(monos: list, vec) -> Expr:
    return Expr({m: Fraction(c) for m, c in zip(monos, vec) if c})


def generate_inhomogeneous(
    src: PDESystem, spec: DefectSpec, a: AnsatzSpec, max_columns: int = 5000
):
    """Determining rows for generator columns followed by defect columns.

    Returns ``(determining system, defect monomials, F columns)``; the rows
    of the determining system already contain the defect columns with
    coefficient ``-F``.
    """
    tgt = get_system(spec.target)
    _check_spaces(src, tgt, spec.unknown)
    monos = spec.monomials(src)
    d = generate_determining(src, a, max_columns=max_columns - len(monos))
    ng = len(d.columns)
    fcols = []
    for k, m in enumerate(monos):
        f = inhomogeneity(src, tgt, spec.unknown, Expr.monomial(m))
        fcols.append(f)
        for n, e in enumerate(f):
            for mono, c in e.terms.items():
                jm, rm = _split_jets(mono)
                d.rows.setdefault((n, jm, rm), {})[ng + k] = -c
    zero = inhomogeneity(src, tgt, spec.unknown, Expr())
    if any(zero):
        raise ScanInputError("source and target differ even with a zero defect")
    return d, monos, fcols


def scan(src: PDESystem | str, spec: DefectSpec, a: AnsatzSpec | None = None) -> ScanResult:
    """Admissible defects and the generators realizing them.

    Stage 1 eliminates the full (generator, defect) system and returns its
    nullspace.  Stage 2 projects onto the defect coordinates; the result is
    compared with the defects whose F vanishes identically.
    """
    if isinstance(src, str):
        src = get_system(src)
    if src.name != spec.source:
        raise ScanInputError(f"spec source {spec.source!r} does not match system {src.name!r}")
    a = a or AnsatzSpec.generalized_affine()
    d, monos, fcols = generate_inhomogeneous(src, spec, a)
    ng, nd = len(d.columns), len(monos)

    ech = Echelon(ng + nd)
    for key in sorted(d.rows):
        ech.add(d.rows[key])
    null = ech.nullspace()

    admissible = rref([v[ng:] for v in null]) if nd else []
    admissible = [r for r in admissible if any(r)]

    triv = Echelon(nd) if nd else None
    if nd:
        for n in range(len(src.equations)):
            keys: dict = {}
            for k, f in enumerate(fcols):
                for mono, c in f[n].terms.items():
                    keys.setdefault(mono, {})[k] = c
            for row in keys.values():
                triv.add(row)
    trivial = triv.nullspace() if nd else []

    contained = len(rref(trivial + admissible)) == len(trivial) if nd else True
    classification = "trivial_only" if contained else "nontrivial_found"

    tgt = get_system(spec.target)
    solutions, ok = [], True
    for v in null:
        g = vector_from_columns(src, d.columns, v[:ng])
        dex = _defect_expr(monos, v[ng:])
        lhs = field_residuals(src, g, depth=1)
        rhs = inhomogeneity(src, tgt, spec.unknown, dex)
        ok = ok and all(not (l - r) for l, r in zip(lhs, rhs))
        solutions.append((g, dex))

    provenance = [
        f"generator columns {ng}; defect columns {nd}",
        f"equations {len(d.rows)}; solution dimension {len(null)}",
        f"admissible defect rank {len(admissible)}; trivial defect rank {len(trivial)}",
    ]
    return ScanResult(
        spec,
        a,
        classification,
        monos,
        [_defect_expr(monos, r) for r in admissible],
        [_defect_expr(monos, r) for r in trivial],
        solutions,
        ng,
        len(d.rows),
        ok,
        provenance,
    )


def run_preset(name: str, degree: int = 1, a: AnsatzSpec | None = None) -> ScanResult:
    try:
        spec = PRESETS[name](degree)
    except KeyError:
        raise ScanInputError(f"unknown scan {name!r}; known: {', '.join(PRESETS)}") from None
    return scan(spec.source, spec, a)

