"""Named runs reproducing the two worked examples and their oscillator limits."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .config import RunConfig
from .errors import ConfigError
from .generators import Case
from .verification import Settings


@dataclass(frozen=True)
class Expectation:
    """What a preset run should show; checked after the verification report."""

    verified: bool = True
    levels: tuple = ()  # lowest computed eigenvalues, in order
    level_tol: float = 5e-2
    overlap_min: float = 0.99
    failing: tuple = ()  # checks that must fail
    not_applicable: tuple = ()  # checks that must be reported n/a
    note: str = ""


@dataclass(frozen=True)
class Preset:
    name: str
    description: str
    config: RunConfig
    expect: Expectation
    settings: dict = field(default_factory=dict)

    def verify_settings(self, config: Optional[RunConfig] = None) -> Settings:
        cfg = config or self.config
        return Settings(k=cfg.k, tol=cfg.tol, seed=cfg.seed, level_tol=self.expect.level_tol,
                        overlap_min=self.expect.overlap_min, **self.settings)


_EX1 = dict(n=2, case=Case.SUM, phi=("x^2/2", "-y^2/2"), epsilon=2.0)
_EX2 = dict(n=3, case=Case.PRODUCT, phi=("x", "y", "z"), epsilon=3.0)

PRESETS = {p.name: p for p in (
    Preset(
        "ex1-oscillator",
        "phi = (x^2 - y^2)/2, no tie: isotropic 2D oscillator, psi1 in the threefold level 2",
        RunConfig(**_EX1, domain=(7.0, 7.0), grid=(201, 201), k=6),
        Expectation(levels=(0, 1, 1, 2, 2, 2), level_tol=2e-2, overlap_min=0.999),
    ),
    Preset(
        "ex1-qes",
        "phi = (x^2 - y^2)/2 with tie 0.5*(x*y)^2: nonseparable 2D potential",
        RunConfig(**_EX1, tie="0.5*(x*y)^2", domain=(7.0, 7.0), grid=(201, 201), k=8),
        Expectation(level_tol=2e-2, overlap_min=0.999),
    ),
    Preset(
        "ex1-bottomless",
        "tie -0.5*(x*y)^2: F is unbounded below along |x| = |y|, psi0 not normalizable",
        RunConfig(**_EX1, tie="-0.5*(x*y)^2", domain=(7.0, 7.0), grid=(201, 201), k=8),
        Expectation(verified=False, failing=("normalizability",)),
    ),
    Preset(
        "ex2-oscillator",
        "phi = xyz, no tie: isotropic 3D oscillator, psi1 in the tenfold level 3",
        RunConfig(**_EX2, domain=(7.0,) * 3, grid=(71,) * 3, k=20),
        Expectation(levels=(0, 1, 1, 1, 2, 2, 2, 2, 2, 2), level_tol=5e-2, overlap_min=0.999),
    ),
    Preset(
        "ex2-qes",
        "phi = xyz with tie 0.02*(2x^2 - y^2 - z^2)^2: nonseparable 3D potential",
        RunConfig(**_EX2, tie="0.02*(2*x^2-y^2-z^2)^2", domain=(6.0,) * 3, grid=(61,) * 3, k=20),
        Expectation(level_tol=5e-2, overlap_min=0.99),
    ),
    Preset(
        "ex1-singular-tie",
        "tie -ln(x*y): psi0 = x*y*exp(-r^2/2) has nodes, V = r^2/2 - 3",
        RunConfig(**_EX1, tie="-ln(x*y)", allow_singular_tie=True, domain=(8.0, 8.0), grid=(200, 200), k=16),
        Expectation(level_tol=2e-2, overlap_min=0.999, not_applicable=("nodeless0",),
                    note="E0 is measured as the second excited level of V = r^2/2 - 3"),
    ),
)}


def names() -> list:
    return sorted(PRESETS)


def get(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; known presets: {', '.join(names())}") from None


def compare(preset: Preset, report) -> dict:
    """Expected-outcome checks for a finished report: name -> (ok, detail)."""
    exp = preset.expect
    out = {"verified": (report.passed == exp.verified, f"report passed = {report.passed}")}
    for name in exp.failing:
        status = report.verdict.get(name, {}).get("status")
        out[f"{name} fails"] = (status == "fail", f"status {status}")
    for name in exp.not_applicable:
        status = report.verdict.get(name, {}).get("status")
        out[f"{name} n/a"] = (status == "n/a", f"status {status}")
    if exp.levels:
        computed = report.extras.get("levels") or []
        ok = len(computed) >= len(exp.levels) and all(
            abs(c - e) <= exp.level_tol for c, e in zip(computed, exp.levels))
        out["levels"] = (ok, f"computed {[round(c, 4) for c in computed[:len(exp.levels)]]}")
    return out
