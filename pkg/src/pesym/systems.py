"""Built-in first-order PDE systems for static magnetic fields and plasma equilibria.

Every system carries a solved form: a map from leading first-order jets to
expressions in the remaining ("free") jets.  On-shell reduction uses that
map and its total derivatives to restrict expressions to solutions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from .symkernel import (
    JET,
    Expr,
    KernelError,
    VariableSpace,
    atom_from_json,
    atom_name,
    atom_to_json,
    expr_from_json,
    expr_to_json,
    jet,
    jet_order,
    param,
    substitute,
    total_derivative,
)

MAGNETIC = VariableSpace(("x", "y", "z"), ("A", "B", "C"))
PLASMA = VariableSpace(("x", "y", "z"), ("A", "B", "C", "P"))


class InvalidSystemError(ValueError):
    pass


class ReductionDepthError(ValueError):
    pass


@dataclass(frozen=True)
class PDESystem:
    name: str
    space: VariableSpace
    equations: tuple
    solved: Mapping[tuple, Expr]
    params: tuple = ()
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def free_jets(self) -> tuple:
        """First-order jets that are not solved for, in canonical order."""
        return tuple(a for a in sorted(self.space.first_jets()) if a not in self.solved)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "space": self.space.to_json(),
            "params": list(self.params),
            "equations": [expr_to_json(e) for e in self.equations],
            "solved": [
                {"jet": atom_to_json(k), "value": expr_to_json(v)}
                for k, v in sorted(self.solved.items())
            ],
        }

    @classmethod
    def from_json(cls, d: Mapping) -> "PDESystem":
        try:
            space = VariableSpace.from_json(d["space"])
            solved = {atom_from_json(s["jet"]): expr_from_json(s["value"]) for s in d["solved"]}
            return cls(
                d["name"],
                space,
                tuple(expr_from_json(e) for e in d["equations"]),
                solved,
                tuple(d.get("params", ())),
            )
        except (KeyError, TypeError, KernelError) as exc:
            raise InvalidSystemError(f"malformed system JSON: {exc}") from exc


def validate(s: PDESystem) -> bool:
    """Check the solved form against the equations; raises on failure."""
    keys = set(s.solved)
    if len(keys) != len(s.solved):
        raise InvalidSystemError("duplicate solved jets")
    for k, v in s.solved.items():
        if k[0] != JET or jet_order(k) != 1:
            raise InvalidSystemError(f"solved key {k!r} is not a first-order jet")
        if keys & v.atoms():
            raise InvalidSystemError(f"solved value for {atom_name(k)} mentions a solved jet")
    for n, e in enumerate(s.equations):
        r = substitute(e, s.solved)
        if r:
            raise InvalidSystemError(f"equation {n} does not vanish on the solved form: {r}")
    return True


def _dominates(big: tuple, small: tuple) -> tuple | None:
    """Multi-index difference big - small when it is non-negative."""
    b = dict(big[2])
    for n, c in small[2]:
        if b.get(n, 0) < c:
            return None
        b[n] -= c
    return tuple(sorted((n, c) for n, c in b.items() if c))


def _reduce_jet(s: PDESystem, a: tuple, depth: int, stack: tuple = ()) -> Expr | None:
    """Reduced form of a single jet, or None when the jet is free."""
    cache = s._cache.setdefault("jets", {})
    if a in cache:
        return cache[a]
    if a in s.solved:
        cache[a] = s.solved[a]
        return cache[a]
    routes = []
    for k in sorted(s.solved):
        if k[1] != a[1]:
            continue
        diff = _dominates(a, k)
        if diff is not None:
            routes.append((k, diff))
    if not routes:
        cache[a] = None
        return None
    k, diff = routes[0]
    extra = sum(c for _, c in diff)
    if extra > depth:
        raise ReductionDepthError(
            f"{atom_name(a)} needs reduction depth {extra}, only {depth} allowed"
        )
    if a in stack:
        raise ReductionDepthError(f"cyclic reduction through {atom_name(a)}")
    e = s.solved[k]
    for n, c in diff:
        for _ in range(c):
            e = total_derivative(e, n, max_order=None)
    e = _reduce(e, s, depth, stack + (a,))
    cache[a] = e
    return e


def _reduce(e: Expr, s: PDESystem, depth: int, stack: tuple = ()) -> Expr:
    mapping = {}
    for a in e.jets(1):
        r = _reduce_jet(s, a, depth, stack)
        if r is not None:
            mapping[a] = r
    return substitute(e, mapping) if mapping else e


def on_shell_reduce(e: Expr, s: PDESystem, depth: int = 0) -> Expr:
    """Restrict ``e`` to the solution manifold of ``s``.

    Solved jets are replaced by their solved values; derivatives of solved
    jets (allowed up to ``depth`` extra orders) are replaced by total
    derivatives of the solved values.  When several solved jets divide a
    higher jet, the first in canonical atom order is used, so the result is
    unique for a given solved form.
    """
    if e.max_jet_order() > depth + 1:
        raise ReductionDepthError(f"expression has jets above order {depth + 1}")
    return _reduce(e, s, depth)


# --------------------------------------------------------------------------
# built-in systems


def _curl(space: VariableSpace) -> tuple:
    u = space.sym
    return (
        u("C_y") - u("B_z"),
        u("A_z") - u("C_x"),
        u("B_x") - u("A_y"),
    )


def _div(space: VariableSpace) -> Expr:
    u = space.sym
    return u("A_x") + u("B_y") + u("C_z")


def _lorentz(space: VariableSpace) -> tuple:
    """Components of curl(B) x B."""
    u = space.sym
    A, B, C = u("A"), u("B"), u("C")
    jx, jy, jz = _curl(space)
    return (jy * C - jz * B, jz * A - jx * C, jx * B - jy * A)


def mhd_equilibrium() -> PDESystem:
    """curl(B) x B = grad P together with div B = 0."""
    sp = PLASMA
    u = sp.sym
    A, B, C = u("A"), u("B"), u("C")
    fx, fy, fz = _lorentz(sp)
    eqs = (fx - u("P_x"), fy - u("P_y"), fz - u("P_z"), _div(sp))
    solved = {
        jet("C", "z"): -u("A_x") - u("B_y"),
        jet("P", "x"): C * u("A_z") - C * u("C_x") - B * u("B_x") + B * u("A_y"),
        jet("P", "y"): A * u("B_x") - A * u("A_y") - C * u("C_y") + C * u("B_z"),
        jet("P", "z"): B * u("C_y") - B * u("B_z") - A * u("A_z") + A * u("C_x"),
    }
    return PDESystem("mhd", sp, eqs, solved)


def _curl_alpha(alpha: Expr | int, name: str, params: tuple) -> PDESystem:
    sp = VariableSpace(MAGNETIC.independents, MAGNETIC.dependents, params)
    u = sp.sym
    A, B, C = u("A"), u("B"), u("C")
    cx, cy, cz = _curl(sp)
    eqs = (cx - alpha * A, cy - alpha * B, cz - alpha * C, _div(sp))
    solved = {
        jet("A", "y"): u("B_x") - alpha * C,
        jet("A", "z"): u("C_x") + alpha * B,
        jet("B", "z"): u("C_y") - alpha * A,
        jet("C", "z"): -u("A_x") - u("B_y"),
    }
    return PDESystem(name, sp, eqs, solved, params)


def vacuum_field() -> PDESystem:
    """curl B = 0, div B = 0, solved for A_y, A_z, B_z, C_z."""
    return _curl_alpha(0, "vacuum", ())


def force_free(mode: str = "const_alpha") -> PDESystem:
    """Force-free fields.

    ``const_alpha``: curl B = alpha B with alpha a parameter, plus div B.
    ``cross_form``: curl(B) x B = 0 plus div B.  Only two of the three cross
    components are independent; the solved form divides by C, so it lives
    on the chart C != 0.
    """
    if mode == "const_alpha":
        return _curl_alpha(Expr.of(param("alpha")), "force-free-const-alpha", ("alpha",))
    if mode == "cross_form":
        sp = MAGNETIC
        u = sp.sym
        A, B, C = u("A"), u("B"), u("C")
        fx, fy, fz = _lorentz(sp)
        jz = u("B_x") - u("A_y")
        solved = {
            jet("A", "z"): u("C_x") + B * jz / C,
            jet("B", "z"): u("C_y") - A * jz / C,
            jet("C", "z"): -u("A_x") - u("B_y"),
        }
        return PDESystem("force-free-cross", sp, (fx, fy, fz, _div(sp)), solved)
    raise ValueError(f"unknown force-free mode {mode!r}")


_REGISTRY = {
    "mhd": mhd_equilibrium,
    "vacuum": vacuum_field,
    "force-free-const-alpha": lambda: force_free("const_alpha"),
    "force-free-cross": lambda: force_free("cross_form"),
}


def system_names() -> tuple:
    return tuple(_REGISTRY)


def get_system(name: str) -> PDESystem:
    try:
        return _REGISTRY[name]()
    except KeyError:
        raise InvalidSystemError(f"unknown system {name!r}; known: {', '.join(_REGISTRY)}") from None
