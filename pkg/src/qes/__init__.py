"""Construction and numerical verification of two-level quasi-exactly solvable potentials.

Typical use::

    from qes import GeneratingSet, TieFunction, build_model
    gs = GeneratingSet.from_sources("sum", ["x^2/2", "-y^2/2"], "auto", 2.0)
    model = build_model(gs, TieFunction.parse("0.5*(x*y)^2", gs.variables), [7, 7])
    model.potential([1.0, 1.0])  # 2.0
"""

from .errors import QESError
from .expr import evaluate, parse, simplify, to_string
from .generators import Case, GeneratingSet, regularize_lambdas
from .hamiltonian import Grid, GridSpec, build_grid, discretize
from .model import QESModel, TieFunction, build_model
from .spectral import dense_eigen_oracle, lowest_eigenpairs, subspace_overlap
from .verification import Settings, VerificationReport, full_report

__all__ = [
    "Case", "GeneratingSet", "Grid", "GridSpec", "QESError", "QESModel", "Settings", "TieFunction",
    "VerificationReport", "build_grid", "build_model", "dense_eigen_oracle", "discretize", "evaluate",
    "full_report", "lowest_eigenpairs", "parse", "regularize_lambdas", "simplify", "subspace_overlap",
    "to_string",
]
__version__ = "0.1.0"
