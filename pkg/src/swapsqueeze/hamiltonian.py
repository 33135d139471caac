"""Model Hamiltonians and the effective-coupling level-scheme arithmetic.

Two dynamical models:

* the swap coupling  H = alpha (J+ S+ + J- S-) + beta Jz Sz  on the joint
  atom-field space, where beta parameterizes an unwanted residual diagonal
  coupling (beta = 0 is the ideal case), and
* the one-axis-twisting benchmark  H = alpha Sz^2  on the spin factor
  alone, which has a closed-form <Sx>(t) and serves as an analytic oracle.

The level-scheme calculator reduces the adiabatically eliminated
atom-field interaction to its three coefficients; it does arithmetic
only and never builds a multi-level Hamiltonian.
"""

from dataclasses import dataclass

from scipy import sparse

from .algebra import ProductSpace, SpinQuantum, build_spin_operators


@dataclass(frozen=True)
class ModelParams:
    """Couplings of the swap model; alpha sets the inverse time unit.

    alpha = 0 is allowed only for pure-perturbation diagnostics (the
    beta Jz Sz term alone).
    """

    alpha: float = 1.0
    beta: float = 0.0


def build_swap_hamiltonian(space: ProductSpace, params: ModelParams) -> sparse.csr_matrix:
    """alpha (J+ S+ + J- S-) + beta Jz Sz on the joint space.

    Hermitian by construction, traceless for beta = 0, and commuting with
    Jz - Sz (both terms raise or lower m_J and m_S together or act
    diagonally).
    """
    s_ops = build_spin_operators(space.spin)
    j_ops = build_spin_operators(space.field)
    # lift_spin(A) @ lift_field(B) == kron(A, B) under the flat-index convention
    raise_both = sparse.kron(s_ops.plus, j_ops.plus)
    lower_both = sparse.kron(s_ops.minus, j_ops.minus)
    h = params.alpha * (raise_both + lower_both)
    if params.beta != 0.0:
        h = h + params.beta * sparse.kron(s_ops.z, j_ops.z)
    return sparse.csr_matrix(h)


def build_ku_hamiltonian(s: SpinQuantum, alpha: float) -> sparse.csr_matrix:
    """One-axis twisting alpha Sz^2: diagonal entries alpha m^2 (spin factor only)."""
    m = s.m_values()
    return sparse.diags((alpha * m * m).astype(complex), 0, format="csr")


@dataclass(frozen=True)
class LevelScheme:
    """Dipole couplings and detunings of the two-ground-state scheme.

    ``delta_e1`` is the detuning shared by both transitions to the first
    excited level, ``delta_e2`` the (opposite-sign) detuning to the second;
    couplings are dimensionless dipole amplitudes.
    """

    g_minus_e1: float
    g_minus_e2: float
    g_plus_e1: float
    g_plus_e2: float
    delta_e1: float
    delta_e2: float

    def __post_init__(self):
        if self.delta_e1 <= 0 or self.delta_e2 <= 0:
            raise ValueError("detunings must be positive")


#: Dipole amplitudes of the Rb-87 D2 |F=1, mF=+/-1> -> |F'=0>, |F'=1> transitions.
RB87_COUPLINGS = {
    "g_minus_e1": (1 / 6) ** 0.5,
    "g_minus_e2": (5 / 24) ** 0.5,
    "g_plus_e1": (1 / 6) ** 0.5,
    "g_plus_e2": -((5 / 24) ** 0.5),
}


def rb87_level_scheme(delta_e1: float, delta_e2: float) -> LevelScheme:
    """LevelScheme with the Rb-87 D2 dipole amplitudes and given detunings."""
    return LevelScheme(delta_e1=delta_e1, delta_e2=delta_e2, **RB87_COUPLINGS)


@dataclass(frozen=True)
class EffectiveCouplings:
    """Coefficients of the three terms left after adiabatic elimination."""

    diag_minus: float
    diag_plus: float
    offdiag: float


def effective_couplings(ls: LevelScheme) -> EffectiveCouplings:
    """Coefficient arithmetic of the eliminated atom-field interaction.

    diag_minus = |g-e1|^2/delta_e1 - |g-e2|^2/delta_e2, likewise diag_plus
    for the + branch, and offdiag = g-e1 g+e1/delta_e1 - g-e2 g+e2/delta_e2.
    Homogeneous of degree 2 in the couplings.
    """
    if ls.delta_e1 == 0 or ls.delta_e2 == 0:
        raise ZeroDivisionError("detunings must be nonzero")
    diag_minus = ls.g_minus_e1**2 / ls.delta_e1 - ls.g_minus_e2**2 / ls.delta_e2
    diag_plus = ls.g_plus_e1**2 / ls.delta_e1 - ls.g_plus_e2**2 / ls.delta_e2
    offdiag = (
        ls.g_minus_e1 * ls.g_plus_e1 / ls.delta_e1
        - ls.g_minus_e2 * ls.g_plus_e2 / ls.delta_e2
    )
    return EffectiveCouplings(diag_minus=diag_minus, diag_plus=diag_plus, offdiag=offdiag)


def detuning_ratio_for_cancellation(ls: LevelScheme) -> float:
    """Detuning ratio delta_e1/delta_e2 at which both diagonal terms vanish.

    Equals |g e1|^2 / |g e2|^2, which must agree between the two branches;
    raises if the branch ratios differ (the cancellation then has no
    common detuning choice).
    """
    if ls.g_minus_e2 == 0 or ls.g_plus_e2 == 0:
        raise ZeroDivisionError("e2 couplings must be nonzero")
    ratio_minus = ls.g_minus_e1**2 / ls.g_minus_e2**2
    ratio_plus = ls.g_plus_e1**2 / ls.g_plus_e2**2
    if abs(ratio_minus - ratio_plus) > 1e-12 * max(abs(ratio_minus), abs(ratio_plus), 1.0):
        raise ValueError(
            f"coupling magnitude ratios differ between branches: {ratio_minus} vs {ratio_plus}"
        )
    return ratio_plus
