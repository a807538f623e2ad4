"""Acceptance criteria, one check per criterion.

Run under pytest (the PASS/FAIL lines are repeated in the terminal
summary) or directly: ``python3 tests/test_acceptance.py``.
"""

from __future__ import annotations

import math
import random
import sys
import tempfile
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
import sympy as sp

from pesym import catalog, cli, numcheck
from pesym.backlund import run_preset
from pesym.detsolve import (
    AnsatzSpec,
    lie_bracket,
    quotient_by_trivial,
    same_span,
    solve,
    verify_generator,
)
from pesym.liegroup import apply_point, compose, exponentiate, exponentiate_exact, linearize
from pesym.symkernel import (
    Expr,
    VectorField,
    collect_jet,
    indep,
    jet,
    param,
    prolong,
    reassemble,
    total_derivative,
)
from pesym.systems import MAGNETIC, PLASMA, force_free, get_system, mhd_equilibrium

RESULTS: dict[int, tuple[bool, str]] = {}


def record(n: int, ok: bool, detail: str) -> bool:
    RESULTS[n] = (ok, detail)
    print(line(n))
    return ok


def line(n: int) -> str:
    ok, detail = RESULTS[n]
    return f"criterion {n}: {'PASS' if ok else 'FAIL'} ({detail})"


# --------------------------------------------------------------------------


def check_1() -> bool:
    t = time.perf_counter()
    with tempfile.TemporaryDirectory() as d:
        rc = cli.main(["solve", "--system", "mhd", "--ansatz", "affine", "--out", d])
        text = (Path(d) / "basis.json").read_text() if rc == 0 else ""
    b = solve(mhd_equilibrium(), AnsatzSpec.affine())
    dt = time.perf_counter() - t
    spans = same_span(b.generators, list(catalog.mhd_generators().values()))
    ok = rc == 0 and '"dimension":9' in text and b.dimension == 9 and spans and dt < 60
    return record(1, ok, f"dimension {b.dimension}, span matches catalog {spans}, {dt:.1f}s")


def check_2() -> bool:
    t = time.perf_counter()
    b = solve(mhd_equilibrium(), AnsatzSpec.quadratic(), structure=False)
    dt = time.perf_counter() - t
    ok = b.dimension == 9 and dt < 600
    return record(2, ok, f"{len(b.columns)} columns, dimension {b.dimension}, {dt:.1f}s")


def check_3() -> bool:
    notes = []
    ok = verify_generator(mhd_equilibrium(), catalog.mhd_operator()).passed
    notes.append(f"full operator {ok}")

    ff = force_free("const_alpha")
    gens = catalog.force_free_generators(ff.space)
    names = ["shift_x", "shift_y", "shift_z", "rot_xy", "rot_xz", "rot_yz", "field_scaling"]
    ff_ok = all(verify_generator(ff, gens[k]).passed for k in names)
    al = Expr.of(param("alpha"))
    r_plain = verify_generator(ff, gens["dilation"]).passed
    r_scaled = verify_generator(ff, gens["dilation"], {"alpha": -al}).passed
    notes.append(f"force-free 7 generators {ff_ok}; R term {r_plain} with alpha fixed, {r_scaled} with alpha scaled")
    ok = ok and ff_ok and r_scaled

    vac = get_system("vacuum")
    A = MAGNETIC.sym("A")
    family = {
        "mu": dict(mu=(1, 1, 1)),
        "alpha": dict(alpha=1),
        "beta": dict(beta=1),
        "gamma": dict(gamma=1),
        "delta": dict(delta=1),
        "f1=A": dict(f=(A, 0, 0)),
    }
    passed = [k for k, kw in family.items() if verify_generator(vac, catalog.vacuum_operator(**kw)).passed]
    notes.append(f"vacuum family {len(passed)}/{len(family)}")
    ok = ok and len(passed) == len(family)
    return record(3, ok, "; ".join(notes))


def check_4() -> bool:
    t = time.perf_counter()
    s = mhd_equilibrium()
    b = solve(s, AnsatzSpec.generalized_affine(), structure=False)
    q = quotient_by_trivial(b, list(catalog.mhd_generators().values()))
    dt = time.perf_counter() - t
    ok = q.quotient_dimension == 9 and q.matches_point and dt < 600
    return record(
        4, ok, f"raw {q.raw_dimension}, trivial {q.trivial_dimension}, quotient {q.quotient_dimension}, {dt:.1f}s"
    )


def _closed(label, a, p):
    x, y, z, A, B, C, P = p
    e, c, s = math.exp(a), math.cos(a), math.sin(a)
    return {
        "shift_x": [x + a, y, z, A, B, C, P],
        "shift_y": [x, y + a, z, A, B, C, P],
        "shift_z": [x, y, z + a, A, B, C, P],
        "shift_P": [x, y, z, A, B, C, P + a],
        "dilation": [e * x, e * y, e * z, A, B, C, P],
        "field_scaling": [x, y, z, e * A, e * B, e * C, e * e * P],
        "rot_xy": [c * x + s * y, -s * x + c * y, z, c * A + s * B, -s * A + c * B, C, P],
        "rot_xz": [c * x + s * z, y, -s * x + c * z, c * A + s * C, B, -s * A + c * C, P],
        "rot_yz": [x, c * y + s * z, -s * y + c * z, A, c * B + s * C, -s * B + c * C, P],
    }[label]


def check_5() -> bool:
    gens = {k: linearize(v, k) for k, v in catalog.mhd_generators().items()}
    rng = np.random.default_rng(0)
    pts = rng.uniform(-2, 2, (4, 7))
    params = (-1.3, -0.25, 0.4, 1.0, 2.7)
    closed = law = orth = deriv = 0.0
    for k, g in gens.items():
        v = catalog.mhd_generators()[k]
        for a in params:
            t = exponentiate(g, a)
            for p in pts:
                closed = max(closed, np.abs(apply_point(t, p) - _closed(k, a, p)).max())
            ab = compose(exponentiate(g, a), exponentiate(g, 0.7))
            ref = exponentiate(g, a + 0.7)
            law = max(law, np.abs(ab.L - ref.L).max(), np.abs(ab.t - ref.t).max())
            if k.startswith("rot"):
                for blk in (t.L[:3, :3], t.L[3:6, 3:6]):
                    orth = max(orth, np.abs(blk @ blk.T - np.eye(3)).max())
        h = 1e-6
        for p in pts:
            d = (apply_point(exponentiate(g, h), p) - apply_point(exponentiate(g, -h), p)) / (2 * h)
            env = dict(zip(PLASMA.coordinates, p))
            ref = np.array([float(e.evaluate(env)) if e else 0.0 for e in v.components])
            deriv = max(deriv, np.abs(d - ref).max() / max(1.0, np.abs(ref).max()))
    ok = closed < 1e-12 and law < 1e-10 and orth < 1e-12 and deriv < 1e-6
    return record(
        5, ok, f"closed form {closed:.1e}, group law {law:.1e}, orthogonality {orth:.1e}, d/da {deriv:.1e}"
    )


def check_6() -> bool:
    t0 = time.perf_counter()
    mhd, vac = mhd_equilibrium(), get_system("vacuum")
    params = (sp.Rational(-1, 2), sp.Rational(1, 3), sp.Integer(1))
    vac_gens = catalog.spatial_generators(MAGNETIC)
    cases = bad = 0
    for label, g in catalog.mhd_generators().items():
        aff = linearize(g, label)
        for name in numcheck.SEEDS:
            for a in params:
                f = numcheck.transform_field(exponentiate_exact(aff, a), numcheck.seed(name))
                cases += 1
                if not all(numcheck.residual(mhd, f, "analytic").exact):
                    bad += 1
                # the vacuum seed is also checked against its own system when applicable
                if name == "linear_vacuum" and label in vac_gens and verify_generator(vac, vac_gens[label]).passed:
                    cases += 1
                    if not all(numcheck.residual(vac, f, "analytic").exact):
                        bad += 1
    # float transforms on the central2 path where the stencil is exact
    worst_c2 = 0.0
    for label, g in catalog.mhd_generators().items():
        t = exponentiate(linearize(g, label), 0.9)
        r = numcheck.residual(vac, numcheck.transform_field(t, numcheck.seed("linear_vacuum")), "central2")
        worst_c2 = max(worst_c2, r.relative())
    aniso = exponentiate(linearize(catalog.anisotropic_scaling()), math.log(2))
    control = numcheck.residual(mhd, numcheck.transform_field(aniso, numcheck.seed("abc_beltrami")), "central2")
    pinch = numcheck.residual(mhd, numcheck.transform_field(aniso, numcheck.seed("screw_pinch")), "central2")
    dt = time.perf_counter() - t0
    ok = bad == 0 and worst_c2 < 1e-6 and control.relative() > 1e-2
    return record(
        6,
        ok,
        f"{cases - bad}/{cases} transported fields exact, central2 worst {worst_c2:.1e}, "
        f"anisotropic control on abc_beltrami {control.relative():.2e}, "
        f"on screw_pinch {pinch.relative():.1e} (x-only field stays a solution), {dt:.0f}s",
    )


def check_7() -> bool:
    notes, ok = [], True
    for degree in (1, 2):
        t = time.perf_counter()
        r = run_preset("vacuum-to-forcefree", degree)
        dt = time.perf_counter() - t
        good = r.trivial_only and not r.defect_basis and r.back_substitution_ok and dt < 600
        ok = ok and good
        notes.append(f"vacuum->force-free degree {degree}: {r.classification}, alpha basis {len(r.defect_basis)}, {dt:.1f}s")
    t = time.perf_counter()
    r = run_preset("forcefree-to-mhd", 1)
    dt = time.perf_counter() - t
    good = r.trivial_only and r.defect_basis == [Expr.const(1)] and r.back_substitution_ok and dt < 600
    ok = ok and good
    notes.append(f"force-free->mhd: P in span{{{', '.join(map(str, r.defect_basis))}}}, {dt:.1f}s")
    return record(7, ok, "; ".join(notes))


# random polynomial expressions for the kernel checks

_ATOMS = [indep("x"), indep("y"), indep("z"), jet("A"), jet("B"), jet("C"),
          jet("A", "x"), jet("B", "y"), jet("C", "z"), jet("A", "xy"), param("alpha")]
_POINT = _ATOMS[:6]


def _rand_expr(rng, atoms, terms=4):
    out = {}
    for _ in range(rng.randint(0, terms)):
        m = {}
        for _ in range(rng.randint(0, 3)):
            a = rng.choice(atoms)
            m[a] = m.get(a, 0) + rng.randint(1, 2)
        out[tuple(sorted(m.items()))] = Fraction(rng.randint(-5, 5), rng.randint(1, 4))
    return Expr(out)


def _rand_field(rng):
    cs = [_rand_expr(rng, _POINT, 3) for _ in range(6)]
    return VectorField(MAGNETIC, tuple(cs[:3]), tuple(cs[3:]))


def check_8() -> bool:
    rng = random.Random(2024)
    fails = {"commute": 0, "leibniz": 0, "collect": 0, "prolong": 0}
    first = [a for a in _ATOMS if a[0] == 1 and a[2] and len(a[2]) == 1 and a[2][0][1] == 1]
    for _ in range(100):
        e = _rand_expr(rng, _ATOMS)
        i, j = rng.choice("xyz"), rng.choice("xyz")
        if total_derivative(total_derivative(e, i, None), j, None) != total_derivative(
            total_derivative(e, j, None), i, None
        ):
            fails["commute"] += 1
        f, g = _rand_expr(rng, _ATOMS), _rand_expr(rng, _ATOMS)
        d = lambda q: total_derivative(q, i, None)  # noqa: E731
        if d(f * g) != d(f) * g + f * d(g):
            fails["leibniz"] += 1
        if reassemble(collect_jet(e, rng.sample(first, rng.randint(0, len(first))))) != e:
            fails["collect"] += 1
        v1, v2 = _rand_field(rng), _rand_field(rng)
        a, b = Fraction(rng.randint(-4, 4), 3), Fraction(rng.randint(-4, 4), 5)
        p, p1, p2 = prolong(v1 * a + v2 * b), prolong(v1), prolong(v2)
        if any(p.zeta[k] != p1.zeta[k] * a + p2.zeta[k] * b for k in p.zeta):
            fails["prolong"] += 1
    gens = solve(mhd_equilibrium(), AnsatzSpec.affine()).generators
    jacobi = 0
    for x in range(9):
        for y in range(x + 1, 9):
            for z in range(y + 1, 9):
                t = (
                    lie_bracket(lie_bracket(gens[x], gens[y]), gens[z])
                    + lie_bracket(lie_bracket(gens[y], gens[z]), gens[x])
                    + lie_bracket(lie_bracket(gens[z], gens[x]), gens[y])
                )
                jacobi += not t.is_zero()
    ok = not any(fails.values()) and jacobi == 0
    summary = ", ".join(f"{k} {100 - v}/100" for k, v in fails.items())
    return record(8, ok, f"{summary}, Jacobi failures {jacobi}/84")


CHECKS = {n: globals()[f"check_{n}"] for n in range(1, 9)}


@pytest.mark.slow
@pytest.mark.parametrize("n", sorted(CHECKS))
def test_criterion(n):
    assert CHECKS[n](), line(n)


if __name__ == "__main__":
    results = [CHECKS[n]() for n in sorted(CHECKS)]
    sys.exit(0 if all(results) else 1)
