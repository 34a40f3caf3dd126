"""Convolution algebras of finite and discrete hypergroups and the
Krengel-Lin decomposition of their convolution operators."""

from .core import (AxiomError, DiscreteHypergroup, FiniteHypergroup, StructureError,
                   ValidationReport, center, convolve_points, haar_from_structure,
                   maximal_subgroup, validate_axioms)
from .measure import (Measure, alternating_sequence, convolve, involute, is_idempotent,
                      limit_detect)

__version__ = "0.1.0"
