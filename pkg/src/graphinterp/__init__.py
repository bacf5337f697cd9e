"""Graph-based image interpolation toolkit."""

__version__ = "0.1.0"

from .sparse import CsrMatrix, CgParams, CgResult, cg_solve, cg_parametrized

__all__ = [
    "CsrMatrix",
    "CgParams",
    "CgResult",
    "cg_solve",
    "cg_parametrized",
    "__version__",
]
