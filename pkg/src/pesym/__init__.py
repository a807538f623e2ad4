"""Lie symmetry analysis of static magnetic field and plasma equilibrium equations."""

__version__ = "0.1.0"

from .symkernel import (  # noqa: E402
    Expr,
    VariableSpace,
    VectorField,
    prolong,
    total_derivative,
)
from .systems import PDESystem, get_system, on_shell_reduce, system_names  # noqa: E402
from .detsolve import (  # noqa: E402
    AnsatzSpec,
    generate_determining,
    solve,
    solve_nullspace,
    verify_generator,
)
from .liegroup import exponentiate, linearize  # noqa: E402

__all__ = [
    "AnsatzSpec",
    "Expr",
    "PDESystem",
    "VariableSpace",
    "VectorField",
    "exponentiate",
    "generate_determining",
    "get_system",
    "linearize",
    "on_shell_reduce",
    "prolong",
    "solve",
    "solve_nullspace",
    "system_names",
    "total_derivative",
    "verify_generator",
]
