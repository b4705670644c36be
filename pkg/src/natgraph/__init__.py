"""Natural differential operators on connections and vector fields, computed with graph complexes."""
from __future__ import annotations

__version__ = "0.1.0"

from .graphcore import CanonGraph, Graph, LinComb, canonicalize
from .complex import Bigrade, Bounds, delta, delta_h, delta_v, enumerate_basis
from .permgroup import GroupRingElem, LeadingTermElem, Perm, is_generator, leading_K, leading_N
from .perturb import PerturbationState, beta, ideal_cocycle, zh_basis
from .opalg import (
    ContractionScheme, GeneratorFamily, NotGenerating, bianchi_suite, normalize_leading, parse,
    quasi_symmetries,
)

__all__ = [
    "Bigrade", "Bounds", "CanonGraph", "ContractionScheme", "GeneratorFamily", "Graph", "GroupRingElem",
    "LeadingTermElem", "LinComb", "NotGenerating", "Perm", "PerturbationState", "beta", "bianchi_suite",
    "canonicalize", "delta", "delta_h", "delta_v", "enumerate_basis", "ideal_cocycle", "is_generator",
    "leading_K", "leading_N", "normalize_leading", "parse", "quasi_symmetries", "zh_basis",
]
