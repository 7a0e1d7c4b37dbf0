"""Operator-space matrix product states for finite-temperature real-time dynamics.

Density matrices rho(beta) and Heisenberg-picture operators a(t) are both
represented as matrix product states over operator space; thermal and
real-time evolutions run independently, and expectation values on a
(beta, t) grid are operator-space inner products of saved snapshots.
"""

from .basis import LocalBasis, BasisTransform, make_basis, change_of_basis, expand_local
from .superop import (
    HamiltonianTerms,
    SuperMap,
    MultMpo,
    build_chi,
    build_commutator_generator,
    build_mult_mpo,
    mult_mpo_sum,
)
from .mps import (
    OperatorMps,
    identity_state,
    product_operator_state,
    inner,
    apply_two_site_gate,
    canonicalize,
    osee,
    transform_basis,
    apply_mpo,
    mps_add,
    compress,
)
from .evolve import TrotterSchedule, EvolutionConfig, EvolutionLog, Snapshot, build_schedule, evolve
from .models import (
    XxzModel,
    SiamChain,
    SpinCurrent,
    MajoranaPair,
    xxz_terms,
    siam_terms,
    spin_current_state,
    majorana_states,
)
from .observables import (
    ExpectationGrid,
    GreenFunctionSeries,
    thermal_expectation,
    time_correlation,
    greens_function,
    evaluate_grid,
)

__version__ = "0.1.0"
