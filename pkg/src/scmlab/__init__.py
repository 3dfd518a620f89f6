"""Equilibrium learning curves and specialization transitions in soft
committee machines, with a finite-size Metropolis trainer for cross checks.

The analytic side (activations, order parameters, generalization error,
free energy, equilibrium branches) is exact in the high-temperature
thermodynamic limit; the simulation side (mc_sim) and the oracles
(oracle) provide independent numerical evidence for it.
"""

from .activations import (
    ACTIVATIONS,
    ERF_SIGMOID,
    RELU,
    Activation,
    ErfSigmoid,
    PairCovariance,
    ReLU,
    get_activation,
    pair_average,
)
from .order_params import (
    FullOverlapMatrix,
    InvalidStateError,
    SiteSymmetricState,
    embed,
    validate,
)
from .gen_error import eps_g_general, eps_g_single, eps_g_site
from .free_energy import (
    EntropyDomainError,
    FreeEnergyPoint,
    beta_f,
    entropy_full,
    entropy_site,
    full_stability_spectrum,
    grad_beta_f,
    hessian_site,
)
from .equilibrium import (
    BranchLabel,
    EquilibriumBranch,
    MinimizeResult,
    PhaseSummary,
    TransitionResult,
    classify,
    large_K_limit,
    locate_disappearance,
    locate_spinodal,
    locate_transition,
    minimize_from,
    multistart,
    phase_summary,
    symmetric_stationary,
    symmetric_stability_loss,
    trace_branches,
)

from .mc_sim import (
    Dataset,
    McConfig,
    McObservables,
    McRunRecord,
    energy,
    init_student,
    make_dataset,
    make_teacher,
    measure_overlaps,
    metropolis_accept,
    run,
)
from .oracle import (
    ConditionalResponse,
    NegativeAlignmentCheck,
    OracleEstimate,
    conditional_response,
    mc_eps_g,
    negative_alignment_identity_check,
    quad_pair_average,
    run_verification,
)

__version__ = "0.1.0"
