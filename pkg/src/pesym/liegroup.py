"""Finite one-parameter groups generated by affine vector fields.

An affine generator ``z -> M z + b`` on the point coordinates
``(x, y, z, A, B, C, P)`` integrates to ``z -> exp(aM) z + t(a)``; both
pieces come out of one matrix exponential of the homogenized generator
``[[M, b], [0, 0]]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .symkernel import Expr, KernelError, VariableSpace, VectorField, atom_name

# Padé(13) coefficients and the 1-norm bound below which it is accurate to
# double precision (Higham 2005).  Degree is fixed; only the scaling varies.
_PADE13 = (
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
)
_THETA13 = 5.371920351148152


def expm(A: np.ndarray) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a fixed Padé(13) approximant."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    norm = np.linalg.norm(A, 1)
    s = max(0, math.ceil(math.log2(norm / _THETA13))) if norm > _THETA13 else 0
    A = A / 2.0**s
    b = _PADE13
    ident = np.eye(n)
    A2 = A @ A
    A4 = A2 @ A2
    A6 = A2 @ A4
    U = A @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * ident)
    V = A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * ident
    R = np.linalg.solve(V - U, V + U)
    for _ in range(s):
        R = R @ R
    return R


@dataclass(frozen=True)
class AffineGenerator:
    space: VariableSpace
    M: tuple
    b: tuple
    label: str | None = None

    @property
    def n(self) -> int:
        return len(self.b)

    def to_field(self) -> VectorField:
        coords = [Expr.of(a) for a in self.space.coordinates]
        comps = []
        for row, bi in zip(self.M, self.b):
            e = Expr.const(bi)
            for c, z in zip(row, coords):
                if c:
                    e = e + z * c
            comps.append(e)
        n_x = len(self.space.independents)
        return VectorField(self.space, tuple(comps[:n_x]), tuple(comps[n_x:]))

    def homogenized(self) -> np.ndarray:
        n = self.n
        H = np.zeros((n + 1, n + 1))
        H[:n, :n] = np.array([[float(x) for x in row] for row in self.M])
        H[:n, n] = [float(x) for x in self.b]
        return H


def linearize(v: VectorField, label: str | None = None) -> AffineGenerator:
    """Exact (M, b) with M z + b equal to the components of ``v``."""
    coords = v.space.coordinates
    index = {a: i for i, a in enumerate(coords)}
    n = len(coords)
    M = [[Fraction(0)] * n for _ in range(n)]
    b = [Fraction(0)] * n
    for c, e in enumerate(v.components):
        for m, w in e.terms.items():
            if not m:
                b[c] = w
            elif len(m) == 1 and m[0][1] == 1 and m[0][0] in index:
                M[c][index[m[0][0]]] = w
            else:
                term = "*".join(atom_name(a) if p == 1 else f"{atom_name(a)}^{p}" for a, p in m)
                raise KernelError(f"generator is not affine: term {w}*{term} in component {c}")
    return AffineGenerator(v.space, tuple(map(tuple, M)), tuple(b), label)


@dataclass(frozen=True)
class FiniteTransform:
    L: np.ndarray
    t: np.ndarray
    param: float | None = None
    provenance: str | None = None
    generator: AffineGenerator | None = None

    @property
    def n(self) -> int:
        return len(self.t)

    def inverse(self) -> "FiniteTransform":
        if self.generator is not None and self.param is not None:
            return exponentiate(self.generator, -self.param)
        Li = np.linalg.inv(self.L)
        return FiniteTransform(Li, -Li @ self.t, None, f"inv({self.provenance})")

    def to_json(self) -> dict:
        return {
            "L": [repr(float(x)) for x in self.L.ravel()],
            "n": self.n,
            "t": [repr(float(x)) for x in self.t],
            "param": None if self.param is None else repr(float(self.param)),
            "provenance": self.provenance,
        }

    @classmethod
    def from_json(cls, d: dict) -> "FiniteTransform":
        n = int(d["n"])
        L = np.array([float(x) for x in d["L"]]).reshape(n, n)
        t = np.array([float(x) for x in d["t"]])
        p = None if d.get("param") is None else float(d["param"])
        return cls(L, t, p, d.get("provenance"))

    def describe(self, space: VariableSpace | None = None) -> str:
        """Component notation, one line per coordinate: ``x' = ...``."""
        names = (
            [atom_name(a) for a in space.coordinates]
            if space is not None
            else [f"z{i}" for i in range(self.n)]
        )
        lines = []
        for i, name in enumerate(names):
            parts = [
                f"{self.L[i, j]:+.12g}*{names[j]}" for j in range(self.n) if abs(self.L[i, j]) > 1e-15
            ]
            if abs(self.t[i]) > 1e-15:
                parts.append(f"{self.t[i]:+.12g}")
            lines.append(f"{name}' = " + (" ".join(parts) if parts else "0"))
        return "\n".join(lines)


def exponentiate(g: AffineGenerator, a: float) -> FiniteTransform:
    """Flow of the generator for group parameter ``a``."""
    E = expm(a * g.homogenized())
    n = g.n
    return FiniteTransform(E[:n, :n].copy(), E[:n, n].copy(), float(a), g.label, g)


def compose(t1: FiniteTransform, t2: FiniteTransform) -> FiniteTransform:
    """``t1 ∘ t2``: apply t2 first."""
    if t1.n != t2.n:
        raise ValueError(f"dimension mismatch: {t1.n} vs {t2.n}")
    same = t1.provenance is not None and t1.provenance == t2.provenance
    param = t1.param + t2.param if same and None not in (t1.param, t2.param) else None
    prov = t1.provenance if same else f"{t1.provenance}∘{t2.provenance}"
    return FiniteTransform(
        t1.L @ t2.L, t1.L @ t2.t + t1.t, param, prov, t1.generator if same else None
    )


def apply_point(t: FiniteTransform, p) -> np.ndarray:
    """``L p + t`` for one point or an array of points (last axis = coordinates)."""
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != t.n:
        raise ValueError(f"point has dimension {p.shape[-1]}, transform acts on {t.n}")
    return p @ t.L.T + t.t


def exponentiate_exact(g: AffineGenerator, a):
    """Exact (L, t) as sympy matrices for a sympy-exact parameter ``a``.

    Used by the analytic residual path only; numeric work goes through
    :func:`exponentiate`.
    """
    import sympy as sp

    n = g.n
    H = sp.zeros(n + 1, n + 1)
    for i in range(n):
        for j in range(n):
            H[i, j] = sp.Rational(g.M[i][j].numerator, g.M[i][j].denominator)
        H[i, n] = sp.Rational(g.b[i].numerator, g.b[i].denominator)
    E = (sp.sympify(a) * H).exp()
    E = E.applyfunc(lambda x: sp.simplify(sp.expand_complex(x)))
    return E[:n, :n], E[:n, n]
