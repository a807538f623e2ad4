"""Exact differential-polynomial algebra over a first-order jet space.

Atoms are plain tuples so that monomials hash and sort quickly:

    (INDEP, name)                      independent variable x^i
    (JET, dep, mi)                     u^k differentiated by multi-index ``mi``
    (PARAM, name)                      constant parameter
    (FN, name, args, orders)           derivative of an unknown function

``mi`` is a tuple of ``(indep_name, count)`` pairs sorted by name with zero
counts dropped, so mixed partials are identified at construction.  For
``FN`` atoms ``orders`` is aligned with the declared ``args`` tuple.

An :class:`Expr` is a dict ``monomial -> Fraction`` where a monomial is a
sorted tuple of ``(atom, power)``.  Powers are integers; negative powers are
allowed (Laurent monomials) because some solved forms divide by a field
component.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

INDEP, JET, PARAM, FN = 0, 1, 2, 3
_KIND_NAMES = {INDEP: "indep", JET: "jet", PARAM: "param", FN: "fn"}
_KIND_CODES = {v: k for k, v in _KIND_NAMES.items()}


class KernelError(ValueError):
    """Malformed input to a kernel operation."""


class OrderOverflowError(KernelError):
    """A total derivative would exceed the permitted jet order."""


# --------------------------------------------------------------------------
# atoms


def indep(name: str) -> tuple:
    return (INDEP, name)


def param(name: str) -> tuple:
    return (PARAM, name)


def multi_index(orders: Mapping[str, int] | Iterable[tuple[str, int]] = ()) -> tuple:
    items = orders.items() if isinstance(orders, Mapping) else orders
    acc: dict[str, int] = {}
    for name, n in items:
        if n < 0:
            raise KernelError(f"negative derivative order for {name!r}")
        acc[name] = acc.get(name, 0) + n
    return tuple(sorted((k, v) for k, v in acc.items() if v))


def jet(dep: str, mi: Mapping[str, int] | Iterable[tuple[str, int]] | str = ()) -> tuple:
    """Jet atom; ``mi`` may be a string of independent names, e.g. ``"xy"``."""
    if isinstance(mi, str):
        mi = [(c, 1) for c in mi]
    return (JET, dep, multi_index(mi))


def fn(name: str, args: Iterable[tuple], orders: Iterable[int] | None = None) -> tuple:
    args = tuple(args)
    for a in args:
        if a[0] not in (INDEP, JET):
            raise KernelError(f"function argument must be a coordinate atom, got {a!r}")
    orders = tuple(orders) if orders is not None else (0,) * len(args)
    if len(orders) != len(args) or any(o < 0 for o in orders):
        raise KernelError(f"bad derivative orders {orders!r} for {name!r}")
    return (FN, name, args, orders)


def jet_order(a: tuple) -> int:
    """Derivative order of a jet atom (0 for the dependent variable itself)."""
    return sum(n for _, n in a[2]) if a[0] == JET else 0


def is_derivative_jet(a: tuple) -> bool:
    return a[0] == JET and bool(a[2])


def _check_atom(a) -> None:
    if not isinstance(a, tuple) or not a or a[0] not in _KIND_NAMES:
        raise KernelError(f"unknown atom {a!r}")
    kind = a[0]
    if kind in (INDEP, PARAM) and (len(a) != 2 or not isinstance(a[1], str)):
        raise KernelError(f"malformed atom {a!r}")
    if kind == JET and (len(a) != 3 or not isinstance(a[1], str)):
        raise KernelError(f"malformed jet {a!r}")
    if kind == FN and len(a) != 4:
        raise KernelError(f"malformed function atom {a!r}")


def atom_name(a: tuple) -> str:
    kind = a[0]
    if kind in (INDEP, PARAM):
        return a[1]
    if kind == JET:
        if not a[2]:
            return a[1]
        return a[1] + "_" + "".join(n * c for n, c in a[2])
    name = a[1]
    subs = [
        atom_name(arg) if o == 1 else f"{atom_name(arg)}^{o}"
        for arg, o in zip(a[2], a[3])
        if o
    ]
    return name if not subs else f"{name}_{{{','.join(subs)}}}"


# --------------------------------------------------------------------------
# monomials


def _mono_mul(m1: tuple, m2: tuple) -> tuple:
    if not m1:
        return m2
    if not m2:
        return m1
    d = dict(m1)
    for a, p in m2:
        q = d.get(a, 0) + p
        if q:
            d[a] = q
        else:
            del d[a]
    return tuple(sorted(d.items()))


def _mono_without(m: tuple, atom: tuple) -> tuple:
    """Monomial with one power of ``atom`` removed."""
    out = []
    for a, p in m:
        if a == atom:
            if p != 1:
                out.append((a, p - 1))
        else:
            out.append((a, p))
    return tuple(out)


def mono_degree(m: tuple) -> int:
    return sum(p for _, p in m)


def term_key(m: tuple):
    """Graded-lexicographic key used for canonical term order."""
    return (mono_degree(m), m)


# --------------------------------------------------------------------------
# expressions


class Expr:
    """Immutable exact-rational (Laurent) polynomial in atoms."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[tuple, Fraction] | None = None, *, _trusted=False):
        if terms is None:
            self._terms = {}
        elif _trusted:
            self._terms = terms
        else:
            clean = {}
            for m, c in terms.items():
                c = Fraction(c)
                if c:
                    m = tuple(sorted((a, p) for a, p in m if p))
                    clean[m] = clean.get(m, 0) + c
            self._terms = {m: c for m, c in clean.items() if c}
        self._hash = None

    # constructors
    @classmethod
    def const(cls, c) -> "Expr":
        c = Fraction(c)
        return cls({(): c}, _trusted=True) if c else cls()

    @classmethod
    def of(cls, a: tuple, power: int = 1) -> "Expr":
        _check_atom(a)
        if power == 0:
            return cls.const(1)
        return cls({((a, power),): Fraction(1)}, _trusted=True)

    @classmethod
    def monomial(cls, m: tuple, c=1) -> "Expr":
        return cls({m: Fraction(c)}, _trusted=True) if c else cls()

    # inspection
    @property
    def terms(self) -> dict:
        return self._terms

    def items(self):
        return sorted(self._terms.items(), key=lambda t: term_key(t[0]))

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def atoms(self) -> set:
        return {a for m in self._terms for a, _ in m}

    def jets(self, min_order: int = 1) -> set:
        return {a for a in self.atoms() if a[0] == JET and jet_order(a) >= min_order}

    def max_jet_order(self) -> int:
        return max((jet_order(a) for a in self.atoms() if a[0] == JET), default=0)

    def constant_value(self) -> Fraction | None:
        if not self._terms:
            return Fraction(0)
        if list(self._terms) == [()]:
            return self._terms[()]
        return None

    def coefficient(self, m: tuple) -> Fraction:
        return self._terms.get(m, Fraction(0))

    # arithmetic
    @staticmethod
    def _lift(other) -> "Expr":
        if isinstance(other, Expr):
            return other
        if isinstance(other, (int, Fraction)):
            return Expr.const(other)
        return NotImplemented

    def __add__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        if not other._terms:
            return self
        if not self._terms:
            return other
        acc = dict(self._terms)
        for m, c in other._terms.items():
            s = acc.get(m, 0) + c
            if s:
                acc[m] = s
            else:
                acc.pop(m, None)
        return Expr(acc, _trusted=True)

    __radd__ = __add__

    def __neg__(self):
        return Expr({m: -c for m, c in self._terms.items()}, _trusted=True)

    def __sub__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            if not other:
                return Expr()
            return Expr({m: c * other for m, c in self._terms.items()}, _trusted=True)
        other = self._lift(other)
        if other is NotImplemented:
            return other
        acc: dict = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = _mono_mul(m1, m2)
                s = acc.get(m, 0) + c1 * c2
                if s:
                    acc[m] = s
                else:
                    acc.pop(m, None)
        return Expr(acc, _trusted=True)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return self * (1 / Fraction(other))
        other = self._lift(other)
        if len(other._terms) != 1:
            raise KernelError("division is only defined by a single term")
        (m, c), = other._terms.items()
        inv = tuple((a, -p) for a, p in m)
        return self * Expr.monomial(inv, 1 / c)

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            if len(self._terms) != 1:
                raise KernelError("negative power of a multi-term expression")
            return ONE / (self ** (-n))
        out = Expr.const(1)
        base = self
        while n:
            if n & 1:
                out = out * base
            n >>= 1
            if n:
                base = base * base
        return out

    # comparison
    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Expr.const(other)
        if not isinstance(other, Expr):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    # display
    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for m, c in self.items():
            factors = [atom_name(a) if p == 1 else f"{atom_name(a)}^{p}" for a, p in m]
            if not factors:
                body = str(abs(c))
            elif abs(c) == 1:
                body = "*".join(factors)
            else:
                body = f"{abs(c)}*" + "*".join(factors)
            sign = "-" if c < 0 else "+"
            parts.append((sign, body))
        s = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        for sign, body in parts[1:]:
            s += f" {sign} {body}"
        return s

    def __repr__(self):
        return f"Expr({self})"

    # evaluation
    def evaluate(self, env: Mapping[tuple, object]):
        """Numeric value with atoms looked up in ``env`` (floats or arrays)."""
        total = 0
        for m, c in self._terms.items():
            v = float(c)
            for a, p in m:
                try:
                    v = v * env[a] ** p
                except KeyError:
                    raise KernelError(f"no value for atom {atom_name(a)}") from None
            total = total + v
        return total


ZERO = Expr()
ONE = Expr.const(1)


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, tuple):
        return Expr.of(x)
    return Expr.const(x)


# --------------------------------------------------------------------------
# differentiation


def partial_diff(e: Expr, a: tuple) -> Expr:
    """Formal partial derivative treating distinct atoms as independent.

    Unknown-function atoms that list ``a`` among their arguments are
    differentiated by the chain rule into the next multi-index.
    """
    _check_atom(a)
    acc: dict = {}
    for m, c in e.terms.items():
        for i, (b, p) in enumerate(m):
            if b == a:
                rest = m[:i] + (((b, p - 1),) if p != 1 else ()) + m[i + 1:]
                _acc_add(acc, rest, c * p)
            elif b[0] == FN and a in b[2]:
                db = Expr.of(_fn_bump(b, b[2].index(a)))
                rest = m[:i] + (((b, p - 1),) if p != 1 else ()) + m[i + 1:]
                for m2, c2 in db.terms.items():
                    _acc_add(acc, _mono_mul(rest, m2), c * p * c2)
    return Expr(acc, _trusted=True)


def _acc_add(acc: dict, m: tuple, c) -> None:
    s = acc.get(m, 0) + c
    if s:
        acc[m] = s
    else:
        acc.pop(m, None)


def _fn_bump(a: tuple, idx: int) -> tuple:
    orders = list(a[3])
    orders[idx] += 1
    return (FN, a[1], a[2], tuple(orders))


def _jet_bump(a: tuple, i: str) -> tuple:
    return (JET, a[1], multi_index(list(a[2]) + [(i, 1)]))


def _total_derivative_atom(a: tuple, i: str, max_order: int | None) -> Expr:
    kind = a[0]
    if kind == INDEP:
        return ONE if a[1] == i else ZERO
    if kind == PARAM:
        return ZERO
    if kind == JET:
        b = _jet_bump(a, i)
        if max_order is not None and jet_order(b) > max_order:
            raise OrderOverflowError(
                f"D_{i}({atom_name(a)}) needs jet order {jet_order(b)} > {max_order}"
            )
        return Expr.of(b)
    out = ZERO
    for idx, arg in enumerate(a[2]):
        d = _total_derivative_atom(arg, i, max_order)
        if d:
            out = out + Expr.of(_fn_bump(a, idx)) * d
    return out


def total_derivative(e: Expr, i: str, max_order: int | None = 2) -> Expr:
    """Total derivative D_i, chaining through jets and unknown functions.

    Raises :class:`OrderOverflowError` instead of truncating when a jet
    would exceed ``max_order``.
    """
    acc: dict = {}
    cache: dict = {}
    for m, c in e.terms.items():
        for b, p in m:
            d = cache.get(b)
            if d is None:
                d = cache[b] = _total_derivative_atom(b, i, max_order)
            if not d:
                continue
            rest = _mono_without(m, b) if p == 1 else _mono_mul(m, ((b, -1),))
            for m2, c2 in d.terms.items():
                _acc_add(acc, _mono_mul(rest, m2), c * p * c2)
    return Expr(acc, _trusted=True)


# --------------------------------------------------------------------------
# substitution and collection


def substitute(e: Expr, mapping: Mapping[tuple, Expr]) -> Expr:
    """Simultaneous substitution of atoms, followed by canonicalization."""
    mapping = {k: as_expr(v) for k, v in mapping.items()}
    if not mapping:
        return e
    for k in mapping:
        _check_atom(k)
    keys = set(mapping)
    for k, v in mapping.items():
        if keys & v.atoms():
            raise KernelError(f"substitution for {atom_name(k)} mentions another key")
    acc: dict = {}
    powers: dict = {}
    for m, c in e.terms.items():
        kept = []
        value = None
        for a, p in m:
            if a in mapping:
                pw = powers.get((a, p))
                if pw is None:
                    pw = powers[(a, p)] = mapping[a] ** p
                value = pw if value is None else value * pw
            else:
                kept.append((a, p))
        if value is None:
            _acc_add(acc, m, c)
            continue
        kept = tuple(kept)
        for m2, c2 in value.terms.items():
            _acc_add(acc, _mono_mul(kept, m2), c * c2)
    return Expr(acc, _trusted=True)


def collect(e: Expr, pred) -> dict:
    """Split ``e`` by the part of each monomial whose atoms satisfy ``pred``."""
    groups: dict = {}
    for m, c in e.terms.items():
        key = tuple((a, p) for a, p in m if pred(a))
        rest = tuple((a, p) for a, p in m if not pred(a))
        groups.setdefault(key, {})[rest] = c
    return {k: Expr(v, _trusted=True) for k, v in groups.items()}


def collect_jet(e: Expr, jets: Iterable[tuple]) -> dict:
    """Coefficients of ``e`` keyed by monomials in the listed jets (``()`` is 1)."""
    jets = set(jets)
    return collect(e, jets.__contains__)


def reassemble(groups: Mapping[tuple, Expr]) -> Expr:
    out = ZERO
    for key, coef in groups.items():
        out = out + Expr.monomial(key) * coef
    return out


# --------------------------------------------------------------------------
# spaces and vector fields


_JET_NAME = re.compile(r"^([A-Za-z][A-Za-z0-9]*)_([A-Za-z]+)$")


@dataclass(frozen=True)
class VariableSpace:
    independents: tuple = ("x", "y", "z")
    dependents: tuple = ("A", "B", "C", "P")
    params: tuple = ()

    def __post_init__(self):
        names = list(self.independents) + list(self.dependents) + list(self.params)
        if len(set(names)) != len(names):
            raise KernelError(f"duplicate ids in variable space {names}")

    def x(self, name: str) -> tuple:
        if name not in self.independents:
            raise KernelError(f"unknown independent {name!r}")
        return indep(name)

    def u(self, dep: str, mi="") -> tuple:
        if dep not in self.dependents:
            raise KernelError(f"unknown dependent {dep!r}")
        a = jet(dep, mi)
        for n, _ in a[2]:
            if n not in self.independents:
                raise KernelError(f"unknown independent {n!r}")
        return a

    def atom(self, name: str) -> tuple:
        """Parse ``x``, ``A``, ``A_xy`` or a parameter name."""
        if name in self.independents:
            return indep(name)
        if name in self.dependents:
            return jet(name)
        if name in self.params:
            return param(name)
        m = _JET_NAME.match(name)
        if m and m.group(1) in self.dependents:
            return self.u(m.group(1), m.group(2))
        raise KernelError(f"unknown symbol {name!r}")

    def sym(self, name: str) -> Expr:
        return Expr.of(self.atom(name))

    def symbols(self, names: str) -> list:
        return [self.sym(n) for n in names.split()]

    @property
    def coordinates(self) -> tuple:
        """Point coordinates (independents then dependents) as atoms."""
        return tuple(indep(n) for n in self.independents) + tuple(
            jet(d) for d in self.dependents
        )

    def first_jets(self) -> tuple:
        return tuple(jet(d, i) for d in self.dependents for i in self.independents)

    def to_json(self) -> dict:
        return {
            "independents": list(self.independents),
            "dependents": list(self.dependents),
            "params": list(self.params),
        }

    @classmethod
    def from_json(cls, d: Mapping) -> "VariableSpace":
        return cls(tuple(d["independents"]), tuple(d["dependents"]), tuple(d.get("params", ())))


@dataclass(frozen=True)
class VectorField:
    """Tangent field with components ``xi`` (independents) and ``eta`` (dependents)."""

    space: VariableSpace
    xi: tuple
    eta: tuple

    def __post_init__(self):
        object.__setattr__(self, "xi", tuple(as_expr(e) for e in self.xi))
        object.__setattr__(self, "eta", tuple(as_expr(e) for e in self.eta))
        if len(self.xi) != len(self.space.independents) or len(self.eta) != len(
            self.space.dependents
        ):
            raise KernelError("vector field components do not match the space")
        for e in self.components:
            for a in e.atoms():
                if a[0] == INDEP and a[1] not in self.space.independents:
                    raise KernelError(f"unknown independent {a[1]!r}")
                if a[0] == JET:
                    if a[1] not in self.space.dependents:
                        raise KernelError(f"unknown dependent {a[1]!r}")
                    if jet_order(a) > 1:
                        raise KernelError("vector fields may depend on first jets at most")

    @classmethod
    def from_dict(cls, space: VariableSpace, comps: Mapping[str, object]) -> "VectorField":
        """Build from ``{"x": expr, "A": expr, ...}``; missing components are 0."""
        unknown = set(comps) - set(space.independents) - set(space.dependents)
        if unknown:
            raise KernelError(f"unknown components {sorted(unknown)}")
        xi = [as_expr(comps.get(n, 0)) for n in space.independents]
        eta = [as_expr(comps.get(n, 0)) for n in space.dependents]
        return cls(space, tuple(xi), tuple(eta))

    @property
    def components(self) -> tuple:
        return self.xi + self.eta

    @property
    def kind(self) -> str:
        return "generalized" if any(e.jets() for e in self.components) else "point"

    def is_zero(self) -> bool:
        return not any(self.components)

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField(
            self.space,
            tuple(a + b for a, b in zip(self.xi, other.xi)),
            tuple(a + b for a, b in zip(self.eta, other.eta)),
        )

    def __sub__(self, other: "VectorField") -> "VectorField":
        return self + other * -1

    def __mul__(self, c) -> "VectorField":
        return VectorField(self.space, tuple(e * c for e in self.xi), tuple(e * c for e in self.eta))

    __rmul__ = __mul__

    def __str__(self):
        names = list(self.space.independents) + list(self.space.dependents)
        parts = [f"({e})*d/d{n}" for e, n in zip(self.components, names) if e]
        return " + ".join(parts) if parts else "0"

    def to_json(self) -> dict:
        return {
            "space": self.space.to_json(),
            "xi": [expr_to_json(e) for e in self.xi],
            "eta": [expr_to_json(e) for e in self.eta],
        }

    @classmethod
    def from_json(cls, d: Mapping) -> "VectorField":
        space = VariableSpace.from_json(d["space"])
        return cls(
            space,
            tuple(expr_from_json(e) for e in d["xi"]),
            tuple(expr_from_json(e) for e in d["eta"]),
        )


@dataclass(frozen=True)
class ProlongedField:
    base: VectorField
    zeta: dict = field(default_factory=dict)


def prolong(v: VectorField, max_order: int = 1) -> ProlongedField:
    """First prolongation: zeta[k, i] = D_i eta^k - u^k_m D_i xi^m."""
    if max_order != 1:
        raise KernelError("only first-order prolongation is supported")
    sp = v.space
    dxi = {
        (m, i): total_derivative(v.xi[a], i)
        for a, m in enumerate(sp.independents)
        for i in sp.independents
    }
    zeta = {}
    for k, dep in enumerate(sp.dependents):
        for i in sp.independents:
            z = total_derivative(v.eta[k], i)
            for m in sp.independents:
                d = dxi[(m, i)]
                if d:
                    z = z - Expr.of(jet(dep, m)) * d
            zeta[(dep, i)] = z
    return ProlongedField(v, zeta)


def apply_prolonged(
    p: ProlongedField, e: Expr, param_action: Mapping[str, Expr] | None = None
) -> Expr:
    """Action of the prolonged operator on a first-order expression.

    ``param_action`` optionally lets the generator move parameters too
    (``{"alpha": -alpha}`` for example).
    """
    if e.max_jet_order() > 1:
        raise KernelError("expression contains jets above first order")
    sp = p.base.space
    out = ZERO
    for a in sorted(e.atoms()):
        if a[0] == INDEP:
            coef = p.base.xi[sp.independents.index(a[1])]
        elif a[0] == JET and not a[2]:
            coef = p.base.eta[sp.dependents.index(a[1])]
        elif a[0] == JET:
            (i, _), = a[2]
            coef = p.zeta[(a[1], i)]
        elif a[0] == PARAM and param_action and a[1] in param_action:
            coef = as_expr(param_action[a[1]])
        else:
            continue
        if coef:
            out = out + coef * partial_diff(e, a)
    return out


# --------------------------------------------------------------------------
# JSON


def atom_to_json(a: tuple) -> dict:
    kind = a[0]
    out = {"kind": _KIND_NAMES[kind], "id": a[1]}
    if kind == JET:
        out["mi"] = {n: c for n, c in a[2]}
    elif kind == FN:
        out["args"] = [atom_to_json(b) for b in a[2]]
        out["mi"] = list(a[3])
    return out


def atom_from_json(d: Mapping) -> tuple:
    try:
        kind = _KIND_CODES[d["kind"]]
        if kind == INDEP:
            return indep(d["id"])
        if kind == PARAM:
            return param(d["id"])
        if kind == JET:
            return jet(d["id"], d.get("mi", {}))
        return fn(d["id"], [atom_from_json(b) for b in d["args"]], d["mi"])
    except (KeyError, TypeError) as exc:
        raise KernelError(f"malformed atom JSON {d!r}") from exc


def expr_to_json(e: Expr) -> dict:
    return {
        "terms": [
            {
                "coef": f"{c.numerator}/{c.denominator}",
                "factors": [{"atom": atom_to_json(a), "pow": p} for a, p in m],
            }
            for m, c in e.items()
        ]
    }


def expr_from_json(d: Mapping) -> Expr:
    try:
        terms = {}
        for t in d["terms"]:
            m = tuple((atom_from_json(f["atom"]), int(f["pow"])) for f in t["factors"])
            terms[m] = terms.get(m, 0) + Fraction(t["coef"])
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise KernelError("malformed expression JSON") from exc
    return Expr(terms)


def dumps(obj) -> str:
    """Deterministic JSON text used for every file this package writes."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
