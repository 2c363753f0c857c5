"""Run configuration: a flat ``key = value`` text format.

Example::

    # Example 1 with a tie
    n = 2
    case = sum
    phi.1 = x^2/2
    phi.2 = -y^2/2
    lambda = auto
    epsilon = 2
    tie = 0.5*(x*y)^2
    domain.1 = 7
    domain.2 = 7
    grid.1 = 201
    grid.2 = 201
    k = 8

Per-axis keys are 1-based.  ``lambda.i`` entries replace ``lambda = auto``.
An unindexed ``domain`` or ``grid`` applies to every axis.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace
from typing import Optional

from . import expr as ex
from .errors import ConfigError
from .generators import Case, GeneratingSet, default_variables

_KEY = re.compile(r"[A-Za-z_][A-Za-z0-9_]*(\.[0-9]+)?$")
_SCALAR_KEYS = {"n", "case", "lambda", "epsilon", "tie", "allow_singular_tie", "domain", "grid",
                "k", "tol", "seed", "out", "variables"}
_INDEXED_KEYS = {"phi", "lambda", "domain", "grid"}


@dataclass(frozen=True)
class RunConfig:
    n: int
    case: Case
    phi: tuple
    epsilon: float
    lambdas: object = "auto"  # "auto" or a tuple of floats
    tie: Optional[str] = None
    allow_singular_tie: bool = False
    domain: tuple = ()
    grid: tuple = ()
    k: int = 8
    tol: float = 1e-10
    seed: int = 0
    out: Optional[str] = None
    variables: tuple = ()

    def __post_init__(self):
        if not self.variables:
            object.__setattr__(self, "variables", default_variables(self.n))
        if not self.domain:
            object.__setattr__(self, "domain", (7.0,) * self.n)
        if not self.grid:
            object.__setattr__(self, "grid", (101,) * self.n)
        check_consistency(self)

    def generating_set(self) -> GeneratingSet:
        return GeneratingSet.from_sources(self.case, self.phi, self.lambdas, self.epsilon, self.variables)

    def with_overrides(self, **changes) -> "RunConfig":
        """Replace fields whose new value is not None; scalar box/grid fill every axis."""
        changes = {k: v for k, v in changes.items() if v is not None}
        for key in ("domain", "grid"):
            if key in changes:
                value = tuple(changes[key])
                changes[key] = value * self.n if len(value) == 1 else value
        return replace(self, **changes)


def check_consistency(cfg: RunConfig) -> None:
    n = cfg.n
    if n < 2:
        raise ConfigError(f"n must be >= 2, got {n}")
    for name, value in (("phi", cfg.phi), ("domain", cfg.domain), ("grid", cfg.grid),
                        ("variables", cfg.variables)):
        if len(value) != n:
            raise ConfigError(f"{name} has {len(value)} entries, expected n = {n}")
    if cfg.lambdas != "auto" and len(cfg.lambdas) != n:
        raise ConfigError(f"lambda has {len(cfg.lambdas)} entries, expected n = {n}")
    if any(not (L > 0 and math.isfinite(L)) for L in cfg.domain):
        raise ConfigError("domain half-extents must be positive")
    if any(N < 3 for N in cfg.grid):
        raise ConfigError("grid counts must be >= 3")
    if not 1 <= cfg.k <= 50:
        raise ConfigError(f"k must be in [1, 50], got {cfg.k}")
    if not cfg.tol >= 1e-12:
        raise ConfigError(f"tol must be >= 1e-12, got {cfg.tol}")


class _Entry:
    def __init__(self, value, line, column):
        self.value = value
        self.line = line
        self.column = column


def _fail(source, line, column, message):
    raise ConfigError(f"{source}:{line}:{column}: {message}")


def _tokenize(text: str, source: str) -> dict:
    entries = {}
    last_line = 1
    for number, raw in enumerate(text.splitlines(), start=1):
        last_line = number
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        if "=" not in line:
            _fail(source, number, len(line) + 1, "expected '=' after key")
        key_part, value_part = line.split("=", 1)
        key = key_part.strip()
        key_col = len(key_part) - len(key_part.lstrip()) + 1
        if not _KEY.match(key):
            _fail(source, number, key_col, f"malformed key {key!r}")
        base = key.split(".")[0]
        indexed = "." in key
        if (indexed and base not in _INDEXED_KEYS) or (not indexed and base not in _SCALAR_KEYS):
            _fail(source, number, key_col, f"unknown key {key!r}")
        value_col = len(key_part) + 2 + (len(value_part) - len(value_part.lstrip()))
        value = value_part.strip()
        if not value:
            _fail(source, number, value_col, f"missing value for {key!r}")
        if key in entries:
            _fail(source, number, key_col, f"duplicate key {key!r}")
        entries[key] = _Entry(value, number, value_col)
    entries["__end__"] = _Entry("", last_line, 1)
    return entries


def _number(entry, kind, source, key):
    try:
        return kind(entry.value)
    except ValueError:
        _fail(source, entry.line, entry.column, f"{key} must be {'an integer' if kind is int else 'a number'}, "
                                                f"got {entry.value!r}")


def _per_axis(entries, base, n, kind, source, required):
    if base in entries and base != "lambda":
        value = _number(entries[base], kind, source, base)
        return (value,) * n
    values = []
    for i in range(1, n + 1):
        key = f"{base}.{i}"
        if key not in entries:
            if required:
                end = entries["__end__"]
                _fail(source, end.line, end.column, f"missing key {key!r}")
            return ()
        values.append(_number(entries[key], kind, source, key) if kind else entries[key].value)
    extra = [k for k in entries if k.startswith(base + ".") and int(k.split(".")[1]) not in range(1, n + 1)]
    if extra:
        entry = entries[extra[0]]
        _fail(source, entry.line, 1, f"{extra[0]} is outside axes 1..{n}")
    return tuple(values)


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    """Parse config text; errors carry ``source:line:column``."""
    entries = _tokenize(text, source)
    end = entries["__end__"]
    if "n" not in entries:
        _fail(source, end.line, end.column, "missing key 'n'")
    n = _number(entries["n"], int, source, "n")
    if n < 2:
        _fail(source, entries["n"].line, entries["n"].column, f"n must be >= 2, got {n}")
    if "case" not in entries:
        _fail(source, end.line, end.column, "missing key 'case'")
    case_entry = entries["case"]
    try:
        case = Case(case_entry.value)
    except ValueError:
        _fail(source, case_entry.line, case_entry.column,
              f"case must be 'sum' or 'product', got {case_entry.value!r}")

    variables = ()
    if "variables" in entries:
        variables = tuple(v.strip() for v in entries["variables"].value.split(","))
        if len(variables) != n or not all(re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", v) for v in variables):
            e = entries["variables"]
            _fail(source, e.line, e.column, f"variables needs {n} comma-separated names")
    names = variables or default_variables(n)

    phi = _per_axis(entries, "phi", n, None, source, required=True)
    for i, src in enumerate(phi, start=1):
        _check_expression(entries[f"phi.{i}"], names, source)

    if "epsilon" not in entries:
        _fail(source, end.line, end.column, "missing key 'epsilon'")

    if "lambda" in entries:
        if entries["lambda"].value != "auto":
            e = entries["lambda"]
            _fail(source, e.line, e.column, "lambda must be 'auto'; give numbers as lambda.1 ... lambda.n")
        if any(k.startswith("lambda.") for k in entries):
            e = entries["lambda"]
            _fail(source, e.line, 1, "use either 'lambda = auto' or lambda.i entries, not both")
    lambdas = _per_axis(entries, "lambda", n, float, source, required=False) or "auto"

    tie = None
    if "tie" in entries and entries["tie"].value != "none":
        _check_expression(entries["tie"], names, source)
        tie = entries["tie"].value

    allow = False
    if "allow_singular_tie" in entries:
        e = entries["allow_singular_tie"]
        if e.value.lower() not in ("true", "false", "yes", "no", "1", "0"):
            _fail(source, e.line, e.column, f"allow_singular_tie must be true or false, got {e.value!r}")
        allow = e.value.lower() in ("true", "yes", "1")

    options = {}
    for key, kind in (("epsilon", float), ("k", int), ("tol", float), ("seed", int)):
        if key in entries:
            options[key] = _number(entries[key], kind, source, key)
    if "out" in entries:
        options["out"] = entries["out"].value
    domain = _per_axis(entries, "domain", n, float, source, required=False)
    grid = _per_axis(entries, "grid", n, int, source, required=False)

    try:
        return RunConfig(n=n, case=case, phi=phi, lambdas=lambdas, tie=tie, allow_singular_tie=allow,
                         domain=domain, grid=grid, variables=variables, **options)
    except ConfigError as err:
        raise ConfigError(f"{source}: {err}") from None


def _check_expression(entry, names, source):
    try:
        ex.parse(entry.value, names)
    except ex.ParseError as err:
        _fail(source, entry.line, entry.column + err.position, err.message)


def load_config(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err.strerror}") from None
    return parse_config(text, source=path)


def format_config(cfg: RunConfig) -> str:
    """Inverse of ``parse_config`` (up to comments and key order)."""
    lines = [f"n = {cfg.n}", f"case = {cfg.case.value}"]
    if cfg.variables != default_variables(cfg.n):
        lines.append("variables = " + ", ".join(cfg.variables))
    lines += [f"phi.{i} = {src}" for i, src in enumerate(cfg.phi, start=1)]
    if cfg.lambdas == "auto":
        lines.append("lambda = auto")
    else:
        lines += [f"lambda.{i} = {v!r}" for i, v in enumerate(cfg.lambdas, start=1)]
    lines.append(f"epsilon = {cfg.epsilon!r}")
    lines.append(f"tie = {cfg.tie or 'none'}")
    lines.append(f"allow_singular_tie = {'true' if cfg.allow_singular_tie else 'false'}")
    lines += [f"domain.{i} = {v!r}" for i, v in enumerate(cfg.domain, start=1)]
    lines += [f"grid.{i} = {v}" for i, v in enumerate(cfg.grid, start=1)]
    lines += [f"k = {cfg.k}", f"tol = {cfg.tol!r}", f"seed = {cfg.seed}"]
    if cfg.out:
        lines.append(f"out = {cfg.out}")
    return "\n".join(lines) + "\n"
