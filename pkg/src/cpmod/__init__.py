"""Comparison of completely positive maps on finite-dimensional Hilbert C*-modules."""

from cpmod.compare import (
    CommutantBasis,
    CommutantElement,
    DominationVerdict,
    PurityReport,
    RNDerivative,
    commutant,
    complete_commutant_element,
    compress,
    connecting_partial_isometry,
    dominates,
    equivalent,
    is_pure,
    pure_scalar,
    reconstruct_stinespring,
    rn_derivative,
)
from cpmod.cpmaps import (
    CPMap,
    ModuleCPMap,
    PhiStinespring,
    arveson_compress,
    choi,
    derive_underlying,
    gns_stinespring,
    is_completely_positive,
    is_nondegenerate_map,
    validate_module_cp,
)
from cpmod.dilation import (
    ModuleStinespring,
    UnitaryEquivalenceWitness,
    check_quintuple,
    check_representation,
    construct,
    is_nondegenerate_representation,
    quintuples_unitarily_equivalent,
)
from cpmod.modspace import HilbertModule, MatrixAlgebra, ModuleElement, AlgebraElement
from cpmod.numerics import DEFAULT_TOL, Tolerance

__version__ = "0.1.0"
