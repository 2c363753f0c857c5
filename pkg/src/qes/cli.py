"""Command line: construct, verify, export and preset runs.

Exit codes: 0 verified, 1 a check failed, 2 configuration or validation error.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import sys
import warnings

import numpy as np

from . import presets
from .config import RunConfig, load_config
from .errors import QESError
from .expr import ExpressionError, to_string
from .hamiltonian import GridSpec, build_grid
from .model import QESModel, TieFunction, build_model
from .verification import Settings, check_separability, default_samples, full_report

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
EXPORTS = ("potential", "psi0", "psi1", "F")


class UsageError(Exception):
    pass


def _floats(text):
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text):
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_run_flags(p, with_source=True):
    if with_source:
        src = p.add_mutually_exclusive_group()
        src.add_argument("--config", metavar="PATH", help="key-value run configuration")
        src.add_argument("--preset", metavar="NAME", help="start from a named preset")
    p.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    p.add_argument("--grid", type=_ints, metavar="N[,N...]", help="grid points per axis, boundary included")
    p.add_argument("--box", type=_floats, metavar="L[,L...]", help="half-extent of the box per axis")
    p.add_argument("--k", type=int, help="number of eigenpairs")
    p.add_argument("--tol", type=float, help="eigensolver residual tolerance (relative to ||A||)")
    p.add_argument("--seed", type=int, help="start-vector seed")
    p.add_argument("--allow-singular-tie", action="store_true", default=None,
                   help="accept ties with log/pole singularities")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qes", description="Construct and verify two-level QES potentials.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="log progress (-vv for debug)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", help="build the model and print a summary")
    _add_run_flags(p)
    p = sub.add_parser("verify", help="run every check and write a JSON report")
    _add_run_flags(p)
    p = sub.add_parser("export", help="write a field on the grid as CSV")
    p.add_argument("what", choices=EXPORTS)
    _add_run_flags(p)
    p = sub.add_parser("preset", help="list presets or run one")
    p.add_argument("name", help="preset name, or 'list'")
    _add_run_flags(p, with_source=False)
    return parser


def resolve_config(args) -> RunConfig:
    if getattr(args, "config", None):
        cfg = load_config(args.config)
    elif getattr(args, "preset", None):
        cfg = presets.get(args.preset).config
    else:
        raise UsageError("one of --config or --preset is required")
    overrides = dict(domain=args.box, grid=args.grid, k=args.k, tol=args.tol, seed=args.seed,
                     allow_singular_tie=args.allow_singular_tie, out=args.out)
    return cfg.with_overrides(**overrides)


def make_model(cfg: RunConfig) -> QESModel:
    gs = cfg.generating_set()
    tie = TieFunction.parse(cfg.tie, gs.variables) if cfg.tie else None
    return build_model(gs, tie, cfg.domain, allow_singular_tie=cfg.allow_singular_tie)


def make_grid(cfg: RunConfig):
    return build_grid(GridSpec(cfg.domain, cfg.grid))


def _fmt(value) -> str:
    value = float(value)
    if not np.isfinite(value):
        return "undefined"
    return f"{value:.12g}"


def _probes(cfg: RunConfig):
    return [tuple(0.0 for _ in cfg.domain), tuple(0.5 * L for L in cfg.domain)]


def construct_summary(cfg: RunConfig, model: QESModel) -> str:
    out = io.StringIO()
    gs = model.gs
    out.write(f"case: {gs.case.value}, n = {gs.n}, variables: {', '.join(gs.variables)}\n")
    for v, phi in zip(gs.variables, gs.phi):
        out.write(f"phi_{v} = {to_string(phi)}\n")
    out.write(f"E0 = {_fmt(model.E0)}\nE1 = {_fmt(model.E1)}\n")
    lam = "(" + ", ".join(_fmt(v) for v in gs.lambdas) + ")"
    if cfg.lambdas == "auto":
        zeros = "; ".join(f"{v}: {', '.join(_fmt(z) for z in a.zeros) or 'none'}"
                          for v, a in zip(gs.variables, model.axes))
        out.write(f"lambda = {lam} (regularized at zeros of phi': {zeros})\n")
    else:
        out.write(f"lambda = {lam} (given)\n")
    for v, a in zip(gs.variables, model.axes):
        f_axis = to_string(a.f_closed) if a.f_closed is not None else f"integral of {to_string(a.f_prime)}"
        out.write(f"f_{v} = {f_axis}\n")
    out.write(f"tie = {to_string(model.tie.expr) if not model.tie.is_zero else 'none'}\n")
    F = model.F_expression()
    out.write(f"F = {to_string(F) if F is not None else 'numerical (no closed form)'}\n")
    mixed = check_separability(model, default_samples(model, 50))
    out.write(f"separable V: {'yes' if mixed <= 1e-6 else 'no'} (max mixed partial {mixed:.3g})\n")
    for point in _probes(cfg):
        pt = [np.array(c) for c in point]
        with np.errstate(all="ignore"), warnings.catch_warnings():
            warnings.simplefilter("ignore")
            values = [(name, getattr(model, name)(pt)) for name in ("F", "potential", "psi0", "psi1")]
        label = ", ".join(_fmt(c) for c in point)
        out.write(f"at ({label}): " + ", ".join(
            f"{'V' if n == 'potential' else n} = {_fmt(v)}" for n, v in values) + "\n")
    return out.getvalue()


def export_csv(cfg: RunConfig, model: QESModel, what: str, stream) -> int:
    """Full grid (boundary included), last axis fastest; returns the row count."""
    grid = make_grid(cfg)
    fn = {"potential": model.potential, "psi0": model.psi0, "psi1": model.psi1, "F": model.F}[what]
    with np.errstate(all="ignore"):
        values = grid.sample(fn, interior=False) + 0.0
    mesh = np.meshgrid(*grid.axes, indexing="ij")
    columns = [m.ravel() + 0.0 for m in mesh] + [values]
    stream.write(",".join([f"x{i + 1}" for i in range(grid.n)] + ["value"]) + "\n")
    for row in zip(*columns):
        stream.write(",".join(repr(float(v)) for v in row) + "\n")
    return values.size


def _write(text: str, path):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def run_construct(cfg: RunConfig) -> int:
    model = make_model(cfg)
    _write(construct_summary(cfg, model), cfg.out)
    return EXIT_OK


def run_verify(cfg: RunConfig, settings: Settings = None, extra=None) -> int:
    model = make_model(cfg)
    grid = make_grid(cfg)
    settings = settings or Settings(k=cfg.k, tol=cfg.tol, seed=cfg.seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        report = full_report(model, grid, settings)
    ok = report.passed
    payload = report.to_dict()
    if extra is not None:
        expectations = extra(report)
        payload["expectations"] = {k: {"ok": v[0], "detail": v[1]} for k, v in expectations.items()}
        ok = ok and all(v[0] for v in expectations.values())
    _write(json.dumps(payload, indent=2, default=_json_default) + "\n", cfg.out)
    for name in report.failed_checks:
        print(f"check failed: {name}", file=sys.stderr)
    return EXIT_OK if ok else EXIT_FAIL


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    raise TypeError(type(obj).__name__)


def run_export(cfg: RunConfig, what: str) -> int:
    model = make_model(cfg)
    try:
        if cfg.out:
            with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
                export_csv(cfg, model, what, fh)
        else:
            export_csv(cfg, model, what, sys.stdout)
    except OSError as err:
        print(f"error: cannot write {cfg.out}: {err.strerror}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def run_preset(name: str, args) -> int:
    preset = presets.get(name)
    cfg = preset.config.with_overrides(domain=args.box, grid=args.grid, k=args.k, tol=args.tol,
                                       seed=args.seed, allow_singular_tie=args.allow_singular_tie,
                                       out=args.out)
    return run_verify(cfg, preset.verify_settings(cfg), extra=lambda r: presets.compare(preset, r))


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=[logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)],
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "preset":
            if args.name == "list":
                for name in presets.names():
                    print(f"{name:18s} {presets.PRESETS[name].description}")
                return EXIT_OK
            return run_preset(args.name, args)
        cfg = resolve_config(args)
        if args.command == "construct":
            return run_construct(cfg)
        if args.command == "verify":
            return run_verify(cfg)
        return run_export(cfg, args.what)
    except (QESError, ExpressionError, UsageError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
