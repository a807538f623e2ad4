"""Command-line entry point: ``pesym <command> [options]``.

Every run writes ``manifest.json`` (inputs, settings, versions, time)
before any result, and results are written atomically, so a failed run
never leaves a partial result file.  Exit codes: 0 success, 1 the
mathematics says no (failed verification, residual above tolerance,
unexpected classification), 2 bad input.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import os
import platform
import sys
import tempfile
from pathlib import Path

import numpy as np
import sympy as sp

from . import __version__, backlund, catalog, detsolve, liegroup, numcheck
from .linalg import DimensionCapError
from .symkernel import Expr, KernelError, VectorField, dumps, expr_from_json, param
from .systems import PLASMA, InvalidSystemError, PDESystem, get_system, system_names

OUT_ENV = "PESYM_OUT"
CENTRAL2_TOL = 1e-6

ANSATZ = {
    "affine": detsolve.AnsatzSpec.affine,
    "quadratic": detsolve.AnsatzSpec.quadratic,
    "generalized-affine": detsolve.AnsatzSpec.generalized_affine,
    "coordinate-free": detsolve.AnsatzSpec.coordinate_free,
}

# natural system for each seed when none is given
SEED_SYSTEM = {"screw_pinch": "mhd", "abc_beltrami": "mhd", "linear_vacuum": "vacuum"}


class InputError(Exception):
    pass


# --------------------------------------------------------------------------
# I/O


def _out_dir(args) -> Path:
    d = Path(args.out or os.environ.get(OUT_ENV) or ".")
    d.mkdir(parents=True, exist_ok=True)
    return d


def _atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_manifest(out: Path, args) -> None:
    settings = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    manifest = {
        "command": args.command,
        "settings": settings,
        "versions": {
            "pesym": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "sympy": sp.__version__,
        },
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }
    _atomic_write(out / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _emit(out: Path, stem: str, fmt: str, payload: dict, latex: str | None = None, text: str | None = None):
    if fmt == "json":
        path = out / f"{stem}.json"
        _atomic_write(path, dumps(payload) + "\n")
    elif fmt == "latex":
        path = out / f"{stem}.tex"
        _atomic_write(path, latex if latex is not None else "% no LaTeX form\n")
    else:
        path = out / f"{stem}.txt"
        _atomic_write(path, (text if text is not None else json.dumps(payload, indent=2)) + "\n")
    return path


def _load_json(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from None


def _system(args) -> PDESystem:
    if getattr(args, "system_file", None):
        return PDESystem.from_json(_load_json(args.system_file))
    return get_system(args.system)


def _named_generator(name: str, space) -> VectorField:
    if name == "anisotropic_x":
        return catalog.anisotropic_scaling(space)
    gens = catalog.spatial_generators(space)
    if name not in gens:
        raise InputError(f"unknown generator {name!r}; known: {', '.join(sorted(gens))}, anisotropic_x")
    return gens[name]


def _generators(args, s: PDESystem) -> list[tuple[str, VectorField]]:
    if args.generator_file:
        d = _load_json(args.generator_file)
        items = d.get("generators", [d]) if isinstance(d, dict) else None
        if not items:
            raise InputError("generator file holds no vector field")
        labels = d.get("labels") or [f"X{i + 1}" for i in range(len(items))]
        try:
            return [(lab, VectorField.from_json(g)) for lab, g in zip(labels, items)]
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed generator JSON: {exc}") from None
    if args.generator == "operator":
        if s.name == "mhd":
            return [("operator", catalog.mhd_operator())]
        return [("operator", catalog.operator(catalog.spatial_generators(s.space), _ff_names()))]
    if args.generator:
        return [(args.generator, _named_generator(args.generator, s.space))]
    raise InputError("give --generator or --generator-file")


def _ff_names() -> dict:
    # the force-free system already owns a parameter called alpha
    names = dict(catalog.OPERATOR_PARAMS)
    names["field_scaling"] = "a_scale"
    return names


def _param_values(pairs) -> dict:
    out = {}
    for p in pairs or ():
        if "=" not in p:
            raise InputError(f"parameter {p!r} is not NAME=VALUE")
        k, v = p.split("=", 1)
        try:
            out[k] = sp.nsimplify(v)
        except (sp.SympifyError, ValueError):
            raise InputError(f"bad parameter value {v!r}") from None
    return out


# --------------------------------------------------------------------------
# commands


def cmd_detgen(args) -> int:
    s = _system(args)
    a = "symbolic" if args.mode == "symbolic" else ANSATZ[args.ansatz]()
    out = _out_dir(args)
    _write_manifest(out, args)
    d = detsolve.generate_determining(s, a, kind=args.kind)
    text = "\n".join(
        f"[{e['source']}] {e['jet']}: {expr_from_json(e['expr'])}" for e in d.to_json()["equations"]
    )
    path = _emit(out, "determining", args.format, d.to_json(), text=text)
    print(f"{len(d)} determining equations -> {path}")
    return 0


def cmd_solve(args) -> int:
    s = _system(args)
    a = ANSATZ[args.ansatz]()
    out = _out_dir(args)
    _write_manifest(out, args)
    b = detsolve.solve(s, a, structure=a.kind == "point")
    path = _emit(out, "basis", args.format, b.to_json(), b.to_latex(), detsolve.basis_report_text(b))
    if args.format != "latex":
        _atomic_write(out / "basis.tex", b.to_latex())
    print(f"dimension {b.dimension}: {', '.join(b.labels)} -> {path}")
    return 0


def cmd_verify(args) -> int:
    s = _system(args)
    gens = _generators(args, s)
    action = {}
    if args.scale_alpha:
        if "alpha" not in s.params:
            raise InputError(f"system {s.name!r} has no alpha parameter")
        # alpha has dimension 1/length, so it moves against the dilation
        rate = s.space.sym("alpha")
        if args.generator == "operator":
            rate = rate * Expr.of(param(_ff_names()["dilation"]))
        action = {"alpha": -rate}
    out = _out_dir(args)
    _write_manifest(out, args)
    reports = []
    for lab, g in gens:
        if g.space.dependents != s.space.dependents:
            raise InputError(f"generator {lab} lives on {g.space.dependents}, system on {s.space.dependents}")
        r = detsolve.verify_generator(s, g, action)
        reports.append({"label": lab, **r.to_json()})
        status = "pass" if r.passed else "FAIL"
        print(f"{lab}: {status}")
        for n, e in enumerate(r.residuals):
            if e:
                print(f"  equation {n}: {e}")
    ok = all(r["pass"] for r in reports)
    _emit(out, "verify", args.format, {"system": s.name, "pass": ok, "generators": reports})
    return 0 if ok else 1


def _transform(args, space) -> liegroup.FiniteTransform:
    if args.generator_file:
        d = _load_json(args.generator_file)
        try:
            g = VectorField.from_json(d.get("generators", [d])[0])
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise InputError(f"malformed generator JSON: {exc}") from None
        label = "file"
    elif args.generator:
        g, label = _named_generator(args.generator, space), args.generator
    else:
        raise InputError("give --generator or --generator-file")
    try:
        affine = liegroup.linearize(g, label)
    except KernelError as exc:
        raise InputError(str(exc)) from None
    return liegroup.exponentiate(affine, args.param)


def _residual_ok(rep: numcheck.ResidualReport) -> bool:
    if rep.stencil == "analytic":
        return all(rep.exact)
    return rep.relative() < CENTRAL2_TOL


def cmd_exp(args) -> int:
    t = _transform(args, PLASMA)
    seed_name = None
    if args.apply:
        if not args.apply.startswith("seed:"):
            raise InputError("--apply expects seed:NAME")
        seed_name = args.apply[5:]
        if seed_name not in numcheck.SEEDS:
            raise InputError(f"unknown seed {seed_name!r}")
    out = _out_dir(args)
    _write_manifest(out, args)
    payload = {"transform": t.to_json(), "components": t.describe(PLASMA).splitlines()}
    ok = True
    if seed_name:
        s = get_system(args.system or SEED_SYSTEM[seed_name])
        f = numcheck.transform_field(t, numcheck.seed(seed_name))
        rep = numcheck.residual(s, f, args.stencil, params=_param_values(args.set))
        ok = _residual_ok(rep)
        payload["field"] = {k: str(v) for k, v in sorted(f.components.items())}
        payload["residual"] = rep.to_json()
        payload["within_tolerance"] = ok
    print(t.describe(PLASMA))
    if seed_name:
        print(f"residual on {s.name}: max {rep.worst:.3e} relative {rep.relative():.3e} ({'ok' if ok else 'FAIL'})")
    _emit(out, "transform", args.format, payload)
    return 0 if ok else 1


def cmd_residual(args) -> int:
    s = _system(args)
    if args.grid:
        try:
            f = numcheck.GridSolution.from_json(_load_json(args.grid))
        except (KeyError, ValueError) as exc:
            raise InputError(f"malformed grid JSON: {exc}") from None
    elif args.seed:
        f = numcheck.seed(args.seed)
    else:
        raise InputError("give --seed or --grid")
    params = _param_values(args.set)
    missing = set(s.params) - set(params)
    if missing:
        raise InputError(f"system {s.name!r} needs --set for {sorted(missing)}")
    lattice = numcheck.Lattice.box(args.lo, args.hi, args.n) if args.n else None
    out = _out_dir(args)
    _write_manifest(out, args)
    rep = numcheck.residual(s, f, args.stencil, lattice=lattice, params=params)
    ok = _residual_ok(rep)
    for n, (m, r) in enumerate(zip(rep.max_norm, rep.rms)):
        tag = " exact" if rep.exact[n] else ""
        print(f"equation {n}: max {m:.3e} rms {r:.3e}{tag}")
    _emit(out, "residual", args.format, rep.to_json())
    return 0 if ok else 1


def cmd_backlund(args) -> int:
    degree = args.degree
    if degree is None:
        degree = args.alpha_degree if args.mode == "vacuum-to-forcefree" else args.p_degree
    try:
        spec = backlund.PRESETS[args.mode](degree)
    except KeyError:
        raise InputError(f"unknown mode {args.mode!r}") from None
    a = ANSATZ[args.ansatz]()
    out = _out_dir(args)
    _write_manifest(out, args)
    r = backlund.scan(spec.source, spec, a)
    print(r.summary())
    _emit(out, "backlund", args.format, r.to_json(), text=r.summary())
    return 0 if r.trivial_only and r.back_substitution_ok else 1


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pesym", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"pesym {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(q, formats=("json", "latex", "text")):
        q.add_argument("--out", help=f"output directory (default ${OUT_ENV} or .)")
        q.add_argument("--format", choices=formats, default="json")

    def system(q, required=True):
        g = q.add_mutually_exclusive_group(required=required)
        g.add_argument("--system", choices=system_names())
        g.add_argument("--system-file", help="system JSON")

    q = sub.add_parser("detgen", help="write determining equations")
    system(q)
    q.add_argument("--class", dest="kind", choices=("point", "generalized"), default="point")
    q.add_argument("--mode", choices=("symbolic", "ansatz"), default="symbolic")
    q.add_argument("--ansatz", choices=tuple(ANSATZ), default="affine")
    common(q, ("json", "text"))
    q.set_defaults(func=cmd_detgen)

    q = sub.add_parser("solve", help="solve the determining equations under an ansatz")
    system(q)
    q.add_argument("--ansatz", choices=tuple(ANSATZ), default="affine")
    common(q)
    q.set_defaults(func=cmd_solve)

    q = sub.add_parser("verify", help="check that generators are symmetries")
    system(q)
    q.add_argument("--generator", help="catalog name, anisotropic_x, or operator")
    q.add_argument("--generator-file")
    q.add_argument("--scale-alpha", action="store_true", help="let the generator scale alpha as 1/length")
    common(q, ("json", "text"))
    q.set_defaults(func=cmd_verify)

    q = sub.add_parser("exp", help="exponentiate a generator, optionally transport a seed")
    q.add_argument("--generator")
    q.add_argument("--generator-file")
    q.add_argument("--param", type=float, required=True)
    q.add_argument("--apply", help="seed:NAME")
    q.add_argument("--system", choices=system_names())
    q.add_argument("--stencil", choices=("analytic", "central2"), default="central2")
    q.add_argument("--set", action="append", metavar="NAME=VALUE", help="system parameter value")
    common(q, ("json", "text"))
    q.set_defaults(func=cmd_exp)

    q = sub.add_parser("residual", help="residual report of a seed or grid")
    system(q)
    q.add_argument("--seed", choices=numcheck.SEEDS)
    q.add_argument("--grid", help="GridSolution JSON")
    q.add_argument("--stencil", choices=("analytic", "central2"), default="analytic")
    q.add_argument("--set", action="append", metavar="NAME=VALUE", help="system parameter value")
    q.add_argument("--n", type=int, help="nodes per axis (default 32 on [0, 2pi))")
    q.add_argument("--lo", type=float, default=0.0)
    q.add_argument("--hi", type=float, default=2 * np.pi)
    common(q, ("json", "text"))
    q.set_defaults(func=cmd_residual)

    q = sub.add_parser("backlund", help="scan for transformations between systems")
    q.add_argument("--mode", choices=tuple(backlund.PRESETS), required=True)
    q.add_argument("--alpha-degree", type=int, default=1)
    q.add_argument("--p-degree", type=int, default=1)
    q.add_argument("--degree", type=int, help="overrides the mode-specific degree")
    q.add_argument("--ansatz", choices=tuple(ANSATZ), default="generalized-affine")
    common(q, ("json", "text"))
    q.set_defaults(func=cmd_backlund)
    return p


INPUT_ERRORS = (
    InputError,
    InvalidSystemError,
    KernelError,
    DimensionCapError,
    detsolve.AnsatzError,
    backlund.ScanInputError,
    numcheck.FieldError,
)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except INPUT_ERRORS as exc:
        print(f"pesym {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
