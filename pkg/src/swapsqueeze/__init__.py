"""Spin squeezing via continuous atom-light entanglement swapping.

Simulates the joint dynamics of a collective atomic spin S and a
two-mode light field represented as an effective spin J under the
swap coupling H = alpha (J+ S+ + J- S-), and computes the squeezing
and entanglement diagnostics of that process.
"""

__version__ = "0.1.0"

from .algebra import (
    ProductSpace,
    QuantumState,
    SpinOperators,
    SpinQuantum,
    build_spin_operators,
    coherent_state_x,
    lift,
    product_state,
)
from .hamiltonian import (
    EffectiveCouplings,
    LevelScheme,
    ModelParams,
    build_ku_hamiltonian,
    build_swap_hamiltonian,
    detuning_ratio_for_cancellation,
    effective_couplings,
)
from .propagate import PropagatorConfig, Trajectory, evolve, evolve_dense, evolve_krylov
from .observables import (
    LiftedSpin,
    SpinMoments,
    SqueezingReport,
    analyze_state,
    optimal_squeezing_direction,
    reduced_field_density,
    schmidt_number,
    spin_moments,
    squeezing_ratio,
    von_neumann_entropy,
    xi_squared,
)
from .experiments import (
    DynamicsRun,
    NoSqueezingFound,
    SweepResult,
    SweepSpec,
    find_global_min,
    find_t_star,
    ku_comparison,
    perturbation_study,
    run_dynamics,
    sweep_rmin_vs_s,
    sweep_t_star_vs_j,
)

__all__ = [
    "SpinQuantum",
    "SpinOperators",
    "ProductSpace",
    "QuantumState",
    "build_spin_operators",
    "coherent_state_x",
    "product_state",
    "lift",
    "ModelParams",
    "LevelScheme",
    "EffectiveCouplings",
    "build_swap_hamiltonian",
    "build_ku_hamiltonian",
    "effective_couplings",
    "detuning_ratio_for_cancellation",
    "PropagatorConfig",
    "Trajectory",
    "evolve",
    "evolve_dense",
    "evolve_krylov",
    "LiftedSpin",
    "SpinMoments",
    "SqueezingReport",
    "spin_moments",
    "optimal_squeezing_direction",
    "squeezing_ratio",
    "xi_squared",
    "reduced_field_density",
    "von_neumann_entropy",
    "schmidt_number",
    "analyze_state",
    "DynamicsRun",
    "NoSqueezingFound",
    "SweepSpec",
    "SweepResult",
    "run_dynamics",
    "find_t_star",
    "find_global_min",
    "sweep_t_star_vs_j",
    "sweep_rmin_vs_s",
    "perturbation_study",
    "ku_comparison",
]
