"""Determining equations, ansatz nullspace solving, verification and brackets.

Two modes share one pipeline.  Symbolic mode keeps the infinitesimals as
unknown functions and returns the coefficient of every jet monomial.
Ansatz mode expands each infinitesimal in a finite monomial basis; because
the determining equations are linear in the vector field, each basis field
contributes one column of an exact rational matrix, and the admitted
algebra (within the ansatz) is that matrix's nullspace.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from . import catalog
from .linalg import DimensionCapError, Echelon, dense_rank, solve_in_span
from .symkernel import (
    JET,
    Expr,
    KernelError,
    VectorField,
    apply_prolonged,
    atom_name,
    expr_to_json,
    fn,
    indep,
    jet,
    param,
    partial_diff,
    prolong,
)
from .systems import PDESystem, on_shell_reduce, validate

log = logging.getLogger(__name__)

DEFAULT_MAX_COLUMNS = 5000
DEFAULT_MAX_ROWS = 500_000


class AnsatzError(ValueError):
    pass


class BracketClosureError(ArithmeticError):
    """A bracket of basis elements left the span of the basis."""


# --------------------------------------------------------------------------
# ansatz


@dataclass(frozen=True)
class AnsatzSpec:
    """Polynomial ansatz for the infinitesimals.

    Degree bounds apply per argument block (``x`` independents, ``u``
    dependents, ``u1`` free first jets) and, optionally, to the total
    degree.  ``xi_blocks``/``eta_blocks`` mask which blocks each group of
    components may depend on.
    """

    kind: str = "point"
    x_degree: int = 1
    u_degree: int = 1
    u1_degree: int = 0
    total_degree: int | None = 1
    xi_blocks: tuple = ("x", "u", "u1")
    eta_blocks: tuple = ("x", "u", "u1")

    def __post_init__(self):
        if self.kind not in ("point", "generalized"):
            raise AnsatzError(f"unknown ansatz class {self.kind!r}")
        if self.kind == "point" and self.u1_degree:
            raise AnsatzError("point class cannot depend on first derivatives")

    @classmethod
    def affine(cls) -> "AnsatzSpec":
        return cls()

    @classmethod
    def quadratic(cls) -> "AnsatzSpec":
        """Degree 2 in the x block and 2 in the u block (completeness probe)."""
        return cls(x_degree=2, u_degree=2, total_degree=None)

    @classmethod
    def generalized_affine(cls) -> "AnsatzSpec":
        return cls(kind="generalized", u1_degree=1)

    @classmethod
    def coordinate_free(cls) -> "AnsatzSpec":
        """Constant xi, eta affine in (u, u1): the vacuum derivative family."""
        return cls(kind="generalized", u1_degree=1, xi_blocks=(), eta_blocks=("u", "u1"))

    @property
    def depth(self) -> int:
        return 1 if self.kind == "generalized" else 0

    def variables(self, s: PDESystem, blocks: Sequence[str]) -> list[tuple[str, tuple]]:
        out = []
        if "x" in blocks:
            out += [("x", indep(n)) for n in s.space.independents]
        if "u" in blocks:
            out += [("u", jet(d)) for d in s.space.dependents]
        if "u1" in blocks and self.kind == "generalized":
            out += [("u1", a) for a in _space_ordered(s, s.free_jets)]
        return out

    def monomials(self, s: PDESystem, blocks: Sequence[str]) -> list[tuple]:
        vars_ = self.variables(s, blocks)
        bounds = {"x": self.x_degree, "u": self.u_degree, "u1": self.u1_degree}
        top = sum(bounds[b] for b in {b for b, _ in vars_})
        if self.total_degree is not None:
            top = min(top, self.total_degree)
        out = []
        for d in range(top + 1):
            for combo in itertools.combinations_with_replacement(range(len(vars_)), d):
                per = {"x": 0, "u": 0, "u1": 0}
                for i in combo:
                    per[vars_[i][0]] += 1
                if any(per[b] > bounds[b] for b in per):
                    continue
                counts: dict = {}
                for i in combo:
                    a = vars_[i][1]
                    counts[a] = counts.get(a, 0) + 1
                out.append(tuple(sorted(counts.items())))
        return out

    def columns(self, s: PDESystem) -> list[tuple[int, tuple]]:
        """Ansatz columns as (component index, monomial), component-major."""
        n_x = len(s.space.independents)
        xi_m = self.monomials(s, self.xi_blocks)
        eta_m = self.monomials(s, self.eta_blocks)
        cols = []
        for c in range(n_x + len(s.space.dependents)):
            for m in xi_m if c < n_x else eta_m:
                cols.append((c, m))
        return cols

    def to_json(self) -> dict:
        return {
            "class": self.kind,
            "x_degree": self.x_degree,
            "u_degree": self.u_degree,
            "u1_degree": self.u1_degree,
            "total_degree": self.total_degree,
            "xi_blocks": list(self.xi_blocks),
            "eta_blocks": list(self.eta_blocks),
        }


def _space_ordered(s: PDESystem, jets) -> list:
    order = {a: i for i, a in enumerate(s.space.first_jets())}
    return sorted(jets, key=order.__getitem__)


def component_names(s: PDESystem) -> list[str]:
    return list(s.space.independents) + list(s.space.dependents)


def column_label(s: PDESystem, col: tuple[int, tuple]) -> str:
    c, m = col
    comp = component_names(s)[c]
    mono = "*".join(atom_name(a) if p == 1 else f"{atom_name(a)}^{p}" for a, p in m) or "1"
    return f"{comp}:{mono}"


def column_field(s: PDESystem, col: tuple[int, tuple], coef=1) -> VectorField:
    c, m = col
    comps = [Expr()] * len(component_names(s))
    comps[c] = Expr.monomial(m, coef)
    n_x = len(s.space.independents)
    return VectorField(s.space, tuple(comps[:n_x]), tuple(comps[n_x:]))


# --------------------------------------------------------------------------
# determining systems


@dataclass
class DeterminingSystem:
    """Determining equations.

    Ansatz mode: ``rows`` maps ``(equation index, jet monomial, remaining
    monomial)`` to a linear form ``{column: coefficient}``.  Symbolic mode:
    ``symbolic`` maps ``(equation index, jet monomial)`` to the coefficient
    Expr in the unknown-function derivatives.
    """

    system: PDESystem
    ansatz: AnsatzSpec | None
    mode: str
    columns: list = field(default_factory=list)
    rows: dict = field(default_factory=dict)
    symbolic: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.rows) if self.mode == "ansatz" else len(self.symbolic)

    @property
    def labels(self) -> list[str]:
        return [column_label(self.system, c) for c in self.columns]

    def equations(self) -> list[Expr]:
        """Equations as Exprs (linear in one Param per ansatz column)."""
        if self.mode == "symbolic":
            return [self.symbolic[k] for k in sorted(self.symbolic)]
        labels = self.labels
        out = []
        for key in sorted(self.rows):
            e = Expr()
            for j, c in sorted(self.rows[key].items()):
                e = e + Expr.of(param(labels[j])) * c
            out.append(e)
        return out

    def to_json(self) -> dict:
        def mono(m):
            return "*".join(atom_name(a) if p == 1 else f"{atom_name(a)}^{p}" for a, p in m) or "1"

        if self.mode == "symbolic":
            eqs = [
                {"source": n, "jet": mono(m), "expr": expr_to_json(self.symbolic[(n, m)])}
                for n, m in sorted(self.symbolic)
            ]
        else:
            exprs = self.equations()
            eqs = [
                {"source": n, "jet": mono(jm), "monomial": mono(rm), "expr": expr_to_json(e)}
                for (n, jm, rm), e in zip(sorted(self.rows), exprs)
            ]
        return {
            "system": self.system.name,
            "mode": self.mode,
            "ansatz": self.ansatz.to_json() if self.ansatz else None,
            "columns": self.labels,
            "equations": eqs,
        }


def _split_jets(m: tuple) -> tuple[tuple, tuple]:
    jm = tuple((a, p) for a, p in m if a[0] == JET and a[2])
    rm = tuple((a, p) for a, p in m if not (a[0] == JET and a[2]))
    return jm, rm


def _check_first_order(s: PDESystem) -> None:
    validate(s)
    if any(e.max_jet_order() > 1 for e in s.equations):
        raise AnsatzError(f"system {s.name!r} is not first order")


def field_residuals(
    s: PDESystem, v: VectorField, depth: int, param_action: Mapping | None = None
) -> list[Expr]:
    """On-shell action of the prolonged field on every equation."""
    p = prolong(v)
    return [on_shell_reduce(apply_prolonged(p, e, param_action), s, depth) for e in s.equations]


def symbolic_field(s: PDESystem, kind: str = "point") -> VectorField:
    """Vector field whose components are undetermined functions."""
    args = list(s.space.coordinates)
    if kind == "generalized":
        args += _space_ordered(s, s.free_jets)
    xi = [Expr.of(fn(f"xi{i + 1}", args)) for i in range(len(s.space.independents))]
    eta = [Expr.of(fn(f"eta{k + 1}", args)) for k in range(len(s.space.dependents))]
    return VectorField(s.space, tuple(xi), tuple(eta))


def generate_determining(
    s: PDESystem,
    a: AnsatzSpec | str = "symbolic",
    kind: str = "point",
    max_columns: int = DEFAULT_MAX_COLUMNS,
) -> DeterminingSystem:
    """Build the determining equations of ``s``.

    Pass an :class:`AnsatzSpec` for ansatz mode, or ``"symbolic"`` (with
    ``kind``) to keep the infinitesimals as unknown functions.
    """
    _check_first_order(s)
    if isinstance(a, str):
        if a != "symbolic":
            raise AnsatzError(f"unknown mode {a!r}")
        depth = 1 if kind == "generalized" else 0
        res = field_residuals(s, symbolic_field(s, kind), depth)
        out = DeterminingSystem(s, None, "symbolic")
        for n, r in enumerate(res):
            groups: dict = {}
            for m, c in r.terms.items():
                jm, rm = _split_jets(m)
                groups.setdefault(jm, {})[rm] = c
            for jm, terms in groups.items():
                out.symbolic[(n, jm)] = Expr(terms, _trusted=True)
        return out

    cols = a.columns(s)
    if len(cols) > max_columns:
        raise DimensionCapError(f"ansatz has {len(cols)} columns, cap is {max_columns}")
    log.info("ansatz for %s: %d unknown coefficients", s.name, len(cols))
    out = DeterminingSystem(s, a, "ansatz", columns=cols)
    for j, col in enumerate(cols):
        res = field_residuals(s, column_field(s, col), a.depth)
        for n, r in enumerate(res):
            for m, c in r.terms.items():
                jm, rm = _split_jets(m)
                out.rows.setdefault((n, jm, rm), {})[j] = c
    return out


# --------------------------------------------------------------------------
# solving


@dataclass
class GeneratorBasis:
    system: PDESystem
    ansatz: AnsatzSpec | None
    columns: list
    vectors: list
    generators: list
    labels: list
    structure: list | None = None

    @property
    def dimension(self) -> int:
        return len(self.generators)

    def to_json(self) -> dict:
        return {
            "system": self.system.name,
            "ansatz": self.ansatz.to_json() if self.ansatz else None,
            "dimension": self.dimension,
            "labels": list(self.labels),
            "generators": [g.to_json() for g in self.generators],
            "structure_constants": (
                None
                if self.structure is None
                else [
                    [[f"{c.numerator}/{c.denominator}" for c in row] for row in plane]
                    for plane in self.structure
                ]
            ),
        }

    def to_latex(self) -> str:
        return generators_to_latex(self.generators, self.labels)


def vector_from_columns(s: PDESystem, cols: Sequence, vec: Sequence) -> VectorField:
    n = len(component_names(s))
    comps = [dict() for _ in range(n)]
    for (c, m), w in zip(cols, vec):
        if w:
            comps[c][m] = comps[c].get(m, 0) + Fraction(w)
    exprs = [Expr(d) for d in comps]
    n_x = len(s.space.independents)
    return VectorField(s.space, tuple(exprs[:n_x]), tuple(exprs[n_x:]))


def label_generators(gens: Sequence[VectorField]) -> list[str]:
    known = catalog.spatial_generators(gens[0].space) if gens else {}
    labels = []
    for i, g in enumerate(gens):
        name = next((k for k, v in known.items() if v == g), None)
        labels.append(name or f"X{i + 1}")
    return labels


def solve_nullspace(
    d: DeterminingSystem,
    a: AnsatzSpec | None = None,
    max_rows: int = DEFAULT_MAX_ROWS,
    structure: bool = True,
) -> GeneratorBasis:
    """Exact nullspace of the determining matrix, mapped back to vector fields."""
    if d.mode != "ansatz":
        raise AnsatzError("solve_nullspace needs an ansatz-mode determining system")
    if a is not None and a != d.ansatz:
        raise AnsatzError("determining system was produced under a different ansatz")
    if len(d.rows) > max_rows:
        raise DimensionCapError(f"{len(d.rows)} determining equations exceed cap {max_rows}")
    s = d.system
    ech = Echelon(len(d.columns))
    for key in sorted(d.rows):
        ech.add(d.rows[key])
    vecs = ech.nullspace()
    gens = [vector_from_columns(s, d.columns, v) for v in vecs]
    basis = GeneratorBasis(s, d.ansatz, d.columns, vecs, gens, label_generators(gens))
    if structure and d.ansatz.kind == "point" and gens:
        basis.structure = structure_constants(gens)
    return basis


def solve(s: PDESystem, a: AnsatzSpec | None = None, **kw) -> GeneratorBasis:
    a = a or AnsatzSpec.affine()
    return solve_nullspace(generate_determining(s, a), a, **kw)


# --------------------------------------------------------------------------
# verification


@dataclass
class VerifyReport:
    passed: bool
    residuals: list

    def to_json(self) -> dict:
        return {
            "pass": self.passed,
            "residuals": [expr_to_json(r) for r in self.residuals],
        }


def verify_generator(
    s: PDESystem, v: VectorField, param_action: Mapping | None = None
) -> VerifyReport:
    """Exact check that the prolonged field annihilates ``s`` on shell.

    ``param_action`` lets the generator act on system parameters, e.g.
    ``{"alpha": -alpha}`` to let a constant force-free factor scale.
    """
    if v.space.dependents != s.space.dependents or v.space.independents != s.space.independents:
        raise KernelError("vector field and system live on different spaces")
    depth = 1 if v.kind == "generalized" else 0
    res = field_residuals(s, v, depth, param_action)
    return VerifyReport(all(not r for r in res), res)


# --------------------------------------------------------------------------
# brackets


def lie_bracket(v1: VectorField, v2: VectorField) -> VectorField:
    """Commutator [v1, v2] of point-class vector fields."""
    if v1.kind != "point" or v2.kind != "point":
        raise KernelError("brackets are only supported for point-class fields")
    coords = v1.space.coordinates
    a1, a2 = v1.components, v2.components
    out = []
    for c in range(len(coords)):
        e = Expr()
        for k, z in enumerate(coords):
            if a1[k]:
                e = e + a1[k] * partial_diff(a2[c], z)
            if a2[k]:
                e = e - a2[k] * partial_diff(a1[c], z)
        out.append(e)
    n_x = len(v1.space.independents)
    return VectorField(v1.space, tuple(out[:n_x]), tuple(out[n_x:]))


def _coordinates(fields: Sequence[VectorField]) -> tuple[list, list]:
    keys = sorted({(c, m) for f in fields for c, e in enumerate(f.components) for m in e.terms})
    index = {k: i for i, k in enumerate(keys)}
    vecs = []
    for f in fields:
        v = [Fraction(0)] * len(keys)
        for c, e in enumerate(f.components):
            for m, w in e.terms.items():
                v[index[(c, m)]] = w
        vecs.append(v)
    return keys, vecs


def structure_constants(gens: Sequence[VectorField]) -> list:
    """c[i][j][k] with [X_i, X_j] = sum_k c[i][j][k] X_k, exact."""
    n = len(gens)
    brackets = {(i, j): lie_bracket(gens[i], gens[j]) for i in range(n) for j in range(i + 1, n)}
    _, vecs = _coordinates(list(gens) + list(brackets.values()))
    base = vecs[:n]
    zero = [Fraction(0)] * n
    c = [[list(zero) for _ in range(n)] for _ in range(n)]
    for idx, (i, j) in enumerate(brackets):
        coeffs = solve_in_span(base, vecs[n + idx])
        if coeffs is None:
            raise BracketClosureError(f"[X{i + 1}, X{j + 1}] is not in the span of the basis")
        c[i][j] = coeffs
        c[j][i] = [-x for x in coeffs]
    return c


def span_rank(fields: Sequence[VectorField]) -> int:
    if not fields:
        return 0
    _, vecs = _coordinates(fields)
    return dense_rank(vecs)


def same_span(f1: Sequence[VectorField], f2: Sequence[VectorField]) -> bool:
    r = span_rank(list(f1) + list(f2))
    return r == span_rank(f1) == span_rank(f2)


def decomposition(gens: Sequence[VectorField]) -> dict:
    """Dimensions of the shift, scaling and rotation parts of an affine algebra."""
    from .liegroup import linearize

    affine = [linearize(g) for g in gens]
    n = len(gens[0].space.coordinates) if gens else 0
    mats = [[x for row in g.M for x in row] for g in affine]
    m_rank = dense_rank(mats) if mats else 0
    anti, diag = [], []
    for i in range(n):
        e = [Fraction(0)] * (n * n)
        e[i * n + i] = Fraction(1)
        diag.append(e)
        for j in range(i + 1, n):
            e = [Fraction(0)] * (n * n)
            e[i * n + j], e[j * n + i] = Fraction(1), Fraction(-1)
            anti.append(e)

    def meet(extra):
        return m_rank + len(extra) - dense_rank(mats + extra)

    return {"shifts": len(gens) - m_rank, "scalings": meet(diag), "rotations": meet(anti)}


# --------------------------------------------------------------------------
# generalized class: trivial recombinations


def trivial_family(s: PDESystem, a: AnsatzSpec) -> list[VectorField]:
    """Fields chi^i d/dx^i + u^k_i chi^i d/du^k, on shell, for ansatz chi.

    Every such field acts on solutions as a total-derivative combination,
    so it carries no information about genuine symmetries.
    """
    out = []
    sp = s.space
    for m in a.monomials(s, a.xi_blocks):
        chi = Expr.monomial(m)
        for i, xn in enumerate(sp.independents):
            xi = [Expr()] * len(sp.independents)
            xi[i] = chi
            eta = [on_shell_reduce(Expr.of(jet(d, xn)), s, 0) * chi for d in sp.dependents]
            out.append(VectorField(sp, tuple(xi), tuple(eta)))
    return out


@dataclass
class QuotientReport:
    raw_dimension: int
    trivial_dimension: int
    quotient_dimension: int
    matches_point: bool | None = None

    def to_json(self) -> dict:
        return dict(self.__dict__)


def quotient_by_trivial(
    basis: GeneratorBasis, point: Sequence[VectorField] | None = None
) -> QuotientReport:
    """Dimension of span(basis) modulo trivial recombinations."""
    triv = trivial_family(basis.system, basis.ansatz)
    t = span_rank(triv)
    joint = span_rank(basis.generators + triv)
    rep = QuotientReport(basis.dimension, t, joint - t)
    if point is not None:
        rep.matches_point = joint == span_rank(list(point) + triv) == span_rank(
            basis.generators + triv + list(point)
        )
    return rep


# --------------------------------------------------------------------------
# output


def expr_to_latex(e: Expr) -> str:
    if not e:
        return "0"
    parts = []
    for m, c in e.items():
        fac = []
        for a, p in m:
            if a[0] == JET and a[2]:
                name = f"\\frac{{\\partial {a[1]}}}{{\\partial {''.join(n * k for n, k in a[2])}}}"
            else:
                name = atom_name(a)
            fac.append(name if p == 1 else f"{name}^{{{p}}}")
        mag = abs(c)
        if not fac:
            body = _frac_latex(mag)
        elif mag == 1:
            body = r" \cdot ".join(fac)
        else:
            body = _frac_latex(mag) + r" \cdot " + r" \cdot ".join(fac)
        parts.append(("-" if c < 0 else "+", body))
    s = ("-" if parts[0][0] == "-" else "") + parts[0][1]
    for sign, body in parts[1:]:
        s += f" {sign} {body}"
    return s


def _frac_latex(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"\\frac{{{c.numerator}}}{{{c.denominator}}}"


def field_to_latex(v: VectorField) -> str:
    names = component_names_of(v)
    parts = []
    for e, n in zip(v.components, names):
        if not e:
            continue
        d = f"\\frac{{\\partial}}{{\\partial {n}}}"
        body = expr_to_latex(e)
        if len(e) > 1:
            body = f"\\left({body}\\right)"
        if body == "1":
            term = d
        elif body == "-1":
            term = "-" + d
        else:
            term = f"{body} {d}"
        parts.append(term)
    s = " + ".join(parts)
    return s.replace("+ -", "- ")


def component_names_of(v: VectorField) -> list[str]:
    return list(v.space.independents) + list(v.space.dependents)


def generators_to_latex(gens: Sequence[VectorField], labels: Sequence[str]) -> str:
    lines = []
    for g, lab in zip(gens, labels):
        const = catalog.LATEX_CONSTANTS.get(lab, lab.replace("_", r"\_"))
        lines.append(f"{const} \\cdot \\left( {field_to_latex(g)} \\right)")
    return "\\begin{aligned}\nX = & " + " \\\\\n& + ".join(lines) + "\n\\end{aligned}\n"


def basis_report_text(b: GeneratorBasis) -> str:
    lines = [f"system {b.system.name}: dimension {b.dimension}"]
    for lab, g in zip(b.labels, b.generators):
        lines.append(f"  {lab}: {g}")
    return "\n".join(lines)

