"""QC-LDPC layered decoding, trapping-set error-floor estimation and schedule search."""

from .codes import (ExponentMatrix, TannerGraph, BaseGraph, parse_exponent_matrix,
                    load_exponent_matrix, lift)

__all__ = ["ExponentMatrix", "TannerGraph", "BaseGraph", "parse_exponent_matrix",
           "load_exponent_matrix", "lift"]

__version__ = "0.1.0"
