"""Numeric verification that finite symmetries map solutions to solutions.

Closed-form fields are sympy expressions in ``x, y, z`` restricted to
polynomials and the functions sin, cos, exp.  Residuals are evaluated
either analytically (exact derivatives; exact-zero certificate via
``sympy.simplify``, then sampling) or with second-order central
differences on a lattice.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
import sympy as sp

from .liegroup import FiniteTransform
from .symkernel import INDEP, JET, PARAM, Expr, atom_name
from .systems import PDESystem

X, Y, Z = sp.symbols("x y z", real=True)
COORDS = (X, Y, Z)
ALLOWED_FUNCTIONS = (sp.sin, sp.cos, sp.exp)
DEFAULT_N = 32
DEFAULT_BOX = (0.0, 2 * np.pi)


class FieldError(ValueError):
    pass


@dataclass(frozen=True)
class FieldDef:
    name: str
    components: Mapping[str, sp.Expr]

    def __post_init__(self):
        for dep, e in self.components.items():
            e = sp.sympify(e)
            bad = {f.func for f in e.atoms(sp.Function)} - set(ALLOWED_FUNCTIONS)
            if bad:
                raise FieldError(f"{dep}: functions outside sin/cos/exp: {sorted(map(str, bad))}")
            extra = e.free_symbols - set(COORDS)
            if extra:
                raise FieldError(f"{dep}: unexpected symbols {sorted(map(str, extra))}")

    def __getitem__(self, dep: str) -> sp.Expr:
        return sp.sympify(self.components.get(dep, 0))

    def lambdified(self, deps) -> dict:
        return {d: sp.lambdify(COORDS, self[d], "numpy") for d in deps}


def seed(name: str, a=1, b=1, c=1) -> FieldDef:
    """Closed-form equilibria used as fixtures.

    ``screw_pinch``: B = (0, cos x, sin x), P = 1.
    ``abc_beltrami``: Arnold-Beltrami-Childress field, curl B = B, P = 1.
    ``linear_vacuum``: B = (y, x, 0), P = 1.
    """
    if name == "screw_pinch":
        comps = {"A": 0, "B": sp.cos(X), "C": sp.sin(X), "P": 1}
    elif name == "abc_beltrami":
        a, b, c = (sp.nsimplify(v) for v in (a, b, c))
        comps = {
            "A": a * sp.sin(Z) + c * sp.cos(Y),
            "B": b * sp.sin(X) + a * sp.cos(Z),
            "C": c * sp.sin(Y) + b * sp.cos(X),
            "P": 1,
        }
    elif name == "linear_vacuum":
        comps = {"A": Y, "B": X, "C": 0, "P": 1}
    else:
        raise FieldError(f"unknown seed {name!r}")
    return FieldDef(name, {k: sp.sympify(v) for k, v in comps.items()})


SEEDS = ("screw_pinch", "abc_beltrami", "linear_vacuum")


# --------------------------------------------------------------------------
# lattices


@dataclass(frozen=True)
class Lattice:
    origin: tuple = (0.0, 0.0, 0.0)
    n: tuple = (DEFAULT_N,) * 3
    h: tuple = ((DEFAULT_BOX[1] - DEFAULT_BOX[0]) / DEFAULT_N,) * 3

    def __post_init__(self):
        if any(v <= 0 for v in self.h):
            raise FieldError("lattice spacing must be positive")

    @classmethod
    def box(cls, lo: float, hi: float, n: int, endpoint: bool = False) -> "Lattice":
        h = (hi - lo) / (n - 1 if endpoint else n)
        return cls((lo,) * 3, (n,) * 3, (h,) * 3)

    @property
    def size(self) -> int:
        return int(np.prod(self.n))

    def mesh(self):
        axes = [o + h * np.arange(n) for o, h, n in zip(self.origin, self.h, self.n)]
        return np.meshgrid(*axes, indexing="ij")

    def to_json(self) -> dict:
        return {"origin": [repr(v) for v in self.origin], "n": list(self.n), "h": [repr(v) for v in self.h]}

    @classmethod
    def from_json(cls, d) -> "Lattice":
        return cls(
            tuple(float(v) for v in d["origin"]), tuple(int(v) for v in d["n"]), tuple(float(v) for v in d["h"])
        )


@dataclass
class GridSolution:
    lattice: Lattice
    values: dict  # dep -> array of shape lattice.n

    def __post_init__(self):
        for d, v in self.values.items():
            v = np.asarray(v, dtype=float).reshape(self.lattice.n)
            self.values[d] = v

    def to_json(self) -> dict:
        return {
            "lattice": self.lattice.to_json(),
            "order": "row-major",
            "values": {d: [repr(float(x)) for x in v.ravel()] for d, v in sorted(self.values.items())},
        }

    @classmethod
    def from_json(cls, d) -> "GridSolution":
        lat = Lattice.from_json(d["lattice"])
        vals = {k: np.array([float(x) for x in v]) for k, v in d["values"].items()}
        for k, v in vals.items():
            if v.size != lat.size:
                raise FieldError(f"component {k} has {v.size} values, lattice has {lat.size}")
        return cls(lat, vals)

    def write_sidecar(self, path) -> list[str]:
        """Flat little-endian binary64 arrays, components in sorted order."""
        deps = sorted(self.values)
        with open(path, "wb") as fh:
            for d in deps:
                fh.write(self.values[d].astype("<f8").ravel().tobytes())
        return deps

    @classmethod
    def read_sidecar(cls, path, lattice: Lattice, deps) -> "GridSolution":
        raw = np.fromfile(path, dtype="<f8")
        if raw.size != lattice.size * len(deps):
            raise FieldError("sidecar size does not match lattice")
        return cls(lattice, {d: raw[i * lattice.size:(i + 1) * lattice.size] for i, d in enumerate(deps)})


def sample(f: FieldDef, lattice: Lattice, deps=("A", "B", "C", "P")) -> GridSolution:
    X_, Y_, Z_ = lattice.mesh()
    vals = {}
    for d, fn_ in f.lambdified(deps).items():
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            v = np.broadcast_to(np.asarray(fn_(X_, Y_, Z_), dtype=float), X_.shape).copy()
        if not np.all(np.isfinite(v)):
            raise FieldError(f"{f.name}: component {d} is singular on the lattice")
        vals[d] = v
    return GridSolution(lattice, vals)


# --------------------------------------------------------------------------
# residuals


@dataclass
class ResidualReport:
    system: str
    stencil: str
    h: tuple | None
    stencil_order: int | None
    max_norm: list = field(default_factory=list)
    rms: list = field(default_factory=list)
    exact: list = field(default_factory=list)
    field_max: float = 0.0

    @property
    def worst(self) -> float:
        return max(self.max_norm, default=0.0)

    def relative(self) -> float:
        return self.worst / (1.0 + self.field_max)

    def to_json(self) -> dict:
        return {
            "system": self.system,
            "stencil": self.stencil,
            "h": None if self.h is None else [repr(float(v)) for v in self.h],
            "stencil_order": self.stencil_order,
            "max_norm": [repr(float(v)) for v in self.max_norm],
            "rms": [repr(float(v)) for v in self.rms],
            "exact": list(self.exact),
            "field_max": repr(float(self.field_max)),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))


def expr_to_sympy(e: Expr, f: FieldDef, params: Mapping[str, object] | None = None) -> sp.Expr:
    """Evaluate a kernel expression on a closed-form field."""
    params = params or {}
    cache: dict = {}

    def value(a):
        if a in cache:
            return cache[a]
        if a[0] == INDEP:
            v = COORDS[("x", "y", "z").index(a[1])]
        elif a[0] == JET:
            v = f[a[1]]
            for n, k in a[2]:
                v = sp.diff(v, COORDS[("x", "y", "z").index(n)], k)
        elif a[0] == PARAM:
            if a[1] not in params:
                raise FieldError(f"no value for parameter {a[1]!r}")
            v = sp.sympify(params[a[1]])
        else:
            raise FieldError(f"cannot evaluate unknown function {atom_name(a)}")
        cache[a] = v
        return v

    out = sp.Integer(0)
    for m, c in e.terms.items():
        t = sp.Rational(c.numerator, c.denominator)
        for a, p in m:
            t = t * value(a) ** p
        out += t
    return out


def _is_zero(r: sp.Expr) -> bool:
    if r == 0:
        return True
    return sp.simplify(r) == 0


def residual(
    s: PDESystem,
    f: FieldDef | GridSolution,
    stencil: str = "analytic",
    lattice: Lattice | None = None,
    params: Mapping[str, object] | None = None,
) -> ResidualReport:
    """Residuals of every equation of ``s`` for the field ``f``.

    Norms are taken over interior nodes (one boundary layer dropped).
    """
    deps = s.space.dependents
    if isinstance(f, GridSolution):
        if stencil != "central2":
            raise FieldError("grid solutions only support the central2 stencil")
        grid = f
    else:
        grid = sample(f, lattice or Lattice(), deps)
    lat = grid.lattice
    fmax = max(float(np.abs(grid.values[d]).max()) for d in deps)
    inner = tuple(slice(1, -1) for _ in range(3))
    if stencil == "analytic":
        rep = ResidualReport(s.name, "analytic", lat.h, None, field_max=fmax)
        X_, Y_, Z_ = (m[inner] for m in lat.mesh())
        for e in s.equations:
            r = expr_to_sympy(e, f, params)
            if _is_zero(r):
                rep.exact.append(True)
                rep.max_norm.append(0.0)
                rep.rms.append(0.0)
                continue
            vals = np.broadcast_to(np.asarray(sp.lambdify(COORDS, r, "numpy")(X_, Y_, Z_), dtype=float), X_.shape)
            rep.exact.append(False)
            rep.max_norm.append(float(np.abs(vals).max()))
            rep.rms.append(float(np.sqrt(np.mean(vals**2))))
        return rep
    if stencil != "central2":
        raise FieldError(f"unknown stencil {stencil!r}")
    if any(n < 3 for n in lat.n):
        raise FieldError("central2 needs at least 3 nodes per axis")
    env = _central_env(s, grid, params)
    rep = ResidualReport(s.name, "central2", lat.h, 2, field_max=fmax)
    for e in s.equations:
        vals = np.broadcast_to(np.asarray(e.evaluate(env), dtype=float), grid.values[deps[0]][inner].shape)
        rep.exact.append(False)
        rep.max_norm.append(float(np.abs(vals).max()))
        rep.rms.append(float(np.sqrt(np.mean(vals**2))))
    return rep


def _central_env(s: PDESystem, grid: GridSolution, params) -> dict:
    lat = grid.lattice
    inner = (slice(1, -1),) * 3
    env = {}
    X_, Y_, Z_ = lat.mesh()
    for a, m in zip(("x", "y", "z"), (X_, Y_, Z_)):
        env[(INDEP, a)] = m[inner]
    for d in s.space.dependents:
        u = grid.values[d]
        env[(JET, d, ())] = u[inner]
        for axis, name in enumerate(("x", "y", "z")):
            hi = [slice(1, -1)] * 3
            lo = [slice(1, -1)] * 3
            hi[axis] = slice(2, None)
            lo[axis] = slice(None, -2)
            env[(JET, d, ((name, 1),))] = (u[tuple(hi)] - u[tuple(lo)]) / (2 * lat.h[axis])
    for k, v in (params or {}).items():
        env[(PARAM, k)] = float(v)
    return env


# --------------------------------------------------------------------------
# transport


def _block(L, rows, cols):
    return sp.Matrix([[sp.sympify(L[i, j]) for j in cols] for i in rows])


def transform_field(t: FiniteTransform | tuple, f: FieldDef) -> FieldDef:
    """Push a field forward along a finite transformation.

    ``t`` is a :class:`FiniteTransform` or an exact ``(L, t)`` pair of
    sympy matrices.  A point (x, u(x)) goes to (x', u'), with
    x' = L_xx x + t_x and u' = L_ux x + L_uu u + t_u; the new field is u'
    expressed as a function of x'.  Transforms that mix u into x' are
    rejected.
    """
    exact = not isinstance(t, FiniteTransform)
    if not exact:
        L = sp.Matrix(t.L.tolist())
        tv = sp.Matrix(list(t.t))
        # exact zeros keep sympy from carrying 0.0 terms
        L = L.applyfunc(lambda v: 0 if abs(float(v)) < 1e-15 else v)
        tv = tv.applyfunc(lambda v: 0 if abs(float(v)) < 1e-15 else v)
    else:
        L, tv = sp.Matrix(t[0]), sp.Matrix(t[1])
    n = L.shape[0]
    deps = ["A", "B", "C", "P"][: n - 3]
    xs, us = range(3), range(3, n)
    if any(v != 0 for v in _block(L, xs, us)):
        raise FieldError("transform mixes field values into coordinates")
    inv = _block(L, xs, xs).inv()
    if exact:
        inv = inv.applyfunc(sp.simplify)
    old = inv * (sp.Matrix(COORDS) - tv[:3, 0])
    sub = dict(zip(COORDS, old))
    u_old = sp.Matrix([f[d].xreplace(sub) for d in deps])
    u_new = _block(L, us, xs) * old + _block(L, us, us) * u_old + tv[3:, 0]
    comps = {d: u_new[i] for i, d in enumerate(deps)}
    return FieldDef(f"{f.name}*", comps)
