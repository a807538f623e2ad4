import json
import random
from fractions import Fraction

import pytest

from pesym.symkernel import Expr, dumps, jet, substitute, total_derivative
from pesym.systems import (
    InvalidSystemError,
    PDESystem,
    ReductionDepthError,
    force_free,
    get_system,
    mhd_equilibrium,
    on_shell_reduce,
    system_names,
    validate,
)


@pytest.mark.parametrize("name", system_names())
def test_builtins_validate(name):
    assert validate(get_system(name))


@pytest.mark.parametrize("name", system_names())
def test_json_round_trip(name):
    s = get_system(name)
    text = dumps(s.to_json())
    back = PDESystem.from_json(json.loads(text))
    assert back.equations == s.equations
    assert dict(back.solved) == dict(s.solved)
    assert dumps(back.to_json()) == text


def test_free_jets():
    names = lambda s: [f"{a[1]}_{a[2][0][0]}" for a in s.free_jets]  # noqa: E731
    assert names(mhd_equilibrium()) == ["A_x", "A_y", "A_z", "B_x", "B_y", "B_z", "C_x", "C_y"]
    assert names(get_system("vacuum")) == ["A_x", "B_x", "B_y", "C_x", "C_y"]
    assert names(force_free("cross_form")) == ["A_x", "A_y", "B_x", "B_y", "C_x", "C_y"]


def test_reduction_is_zero_on_equations():
    for name in system_names():
        s = get_system(name)
        for e in s.equations:
            assert not on_shell_reduce(e, s)


def test_second_order_reduction_along_solved_direction():
    s = mhd_equilibrium()
    u = s.space.sym
    # each equation differentiated along its own solved jet reduces to zero
    for e, i in zip(s.equations, "xyzz"):
        assert not on_shell_reduce(total_derivative(e, i), s, depth=1)
    assert on_shell_reduce(u("C_zz"), s, depth=1) == -u("A_xz") - u("B_yz")


def test_mixed_jets_follow_first_route_only():
    """P_xy is reduced through P_x; the y-derivative of the P_x equation
    and the x-derivative of the P_y equation then differ by an
    integrability condition, which is not adjoined."""
    s = mhd_equilibrium()
    e0, e1 = s.equations[:2]
    r0 = on_shell_reduce(total_derivative(e0, "y"), s, depth=1)
    r1 = on_shell_reduce(total_derivative(e1, "x"), s, depth=1)
    assert not r0
    assert r1


def test_depth_is_enforced():
    s = mhd_equilibrium()
    with pytest.raises(ReductionDepthError):
        on_shell_reduce(s.space.sym("C_zz"), s, depth=0)


def test_cross_form_agrees_with_const_alpha_on_beltrami_jets():
    """Random jets that satisfy curl B = a B also satisfy the cross form."""
    ff = force_free("const_alpha")
    cross = force_free("cross_form")
    rng = random.Random(3)
    for _ in range(20):
        env = {a: Fraction(rng.randint(-9, 9), rng.randint(1, 5)) for a in ff.free_jets}
        env.update({jet(d): Fraction(rng.randint(1, 9), rng.randint(1, 4)) for d in "ABC"})
        al = Fraction(rng.randint(-5, 5), 3)
        full = {k: substitute(v, {ff.space.atom("alpha"): Expr.const(al)}) for k, v in ff.solved.items()}
        consts = {a: Expr.const(v) for a, v in env.items()}
        vals = dict(consts)
        vals.update({k: substitute(v, consts) for k, v in full.items()})
        for e in cross.equations:
            assert not substitute(e, vals)


def test_invalid_solved_form_rejected():
    s = mhd_equilibrium()
    bad = dict(s.solved)
    bad[jet("C", "z")] = Expr()
    with pytest.raises(InvalidSystemError):
        validate(PDESystem("bad", s.space, s.equations, bad))
    with pytest.raises(InvalidSystemError):
        get_system("nope")
    with pytest.raises(InvalidSystemError):
        PDESystem.from_json({"name": "x"})
