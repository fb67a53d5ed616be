"""Multipoint Krichever-Novikov bases, residue calculus, and
Knizhnik-Zamolodchikov systems on genus 0 and 1 marked curves."""

from .curves import INFINITY, MarkedCurve
from .weierstrass import Lattice
from .laurent import ContourSpec, LaurentExpansion, contour_integral, expand_at
from .basis import KNBasis, KNForm, FormProduct
from .algebra import (cocycle_chi, cocycle_gamma, duality_matrix,
                      expand_in_basis, kn_pairing, lie_derivative,
                      structure_constants)
from .liealg import (SimpleLieAlgebraData, WeightedTensorSpace, abelian,
                     casimir_two_site, sl2)
from .modules import (SugawaraOperator, TruncatedAdmissibleModule,
                      build_truncated_module)
from .kz import (CoefficientTable, KZSystem, assemble_kz_g0, assemble_kz_g1,
                 classify_contribution, l_coefficient, adjust_vector_field,
                 moduli_field_g1)
from .errors import (ConfigError, CriticalLevelError,
                     NongenericConfigurationError, TruncationBreachError)

__all__ = [
    "INFINITY", "MarkedCurve", "Lattice", "ContourSpec", "LaurentExpansion",
    "contour_integral", "expand_at", "KNBasis", "KNForm", "FormProduct",
    "cocycle_chi", "cocycle_gamma", "duality_matrix", "expand_in_basis",
    "kn_pairing", "lie_derivative", "structure_constants",
    "SimpleLieAlgebraData", "WeightedTensorSpace", "abelian",
    "casimir_two_site", "sl2", "SugawaraOperator",
    "TruncatedAdmissibleModule", "build_truncated_module",
    "CoefficientTable", "KZSystem", "assemble_kz_g0", "assemble_kz_g1",
    "classify_contribution", "l_coefficient", "adjust_vector_field",
    "moduli_field_g1", "ConfigError", "CriticalLevelError",
    "NongenericConfigurationError", "TruncationBreachError",
]

__version__ = "0.1.0"
