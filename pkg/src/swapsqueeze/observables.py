"""Squeezing and entanglement diagnostics of a joint atom-field state.

All quantities the dynamics studies report: spin expectation values and
the (y,z) covariance, the optimal squeezing direction and its angle
theta_z (measured from z toward y), the squeezing ratio r against the
standard quantum limit, the xi^2 entanglement witness, and the reduced
field density matrix with its von Neumann entropy and Schmidt number.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import sparse

from .algebra import ProductSpace, QuantumState, build_spin_operators, lift


class UndefinedSqueezingError(ValueError):
    """The squeezing measure is undefined for this state (vanishing denominator)."""


@dataclass(frozen=True)
class LiftedSpin:
    """Cartesian spin components of one factor, lifted to the product space."""

    x: sparse.csr_matrix
    y: sparse.csr_matrix
    z: sparse.csr_matrix

    @classmethod
    def for_space(cls, space: ProductSpace, which: str = "spin") -> "LiftedSpin":
        factor = space.spin if which == "spin" else space.field
        ops = build_spin_operators(factor)
        return cls(
            x=lift(space, ops.x, which),
            y=lift(space, ops.y, which),
            z=lift(space, ops.z, which),
        )


def expectation(state: QuantumState, op) -> float:
    """Real part of <psi|op|psi> (exact for Hermitian op)."""
    return float(np.real(np.vdot(state.amplitudes, op @ state.amplitudes)))


@dataclass(frozen=True)
class SpinMoments:
    """First moments and the symmetrized (Sy, Sz) covariance matrix.

    covariance_yz is ordered (y, z): entry [0,0] is Var(Sy), [1,1] Var(Sz),
    off-diagonal Cov(Sy,Sz) = <SySz+SzSy>/2 - <Sy><Sz>.
    """

    mean: np.ndarray  # (<Sx>, <Sy>, <Sz>)
    covariance_yz: np.ndarray

    def __post_init__(self):
        eigs = np.linalg.eigvalsh(self.covariance_yz)
        if eigs[0] < -1e-10:
            raise ValueError(f"covariance matrix not PSD: min eigenvalue {eigs[0]}")


def spin_moments(state: QuantumState, ops: LiftedSpin) -> SpinMoments:
    """Exact quadratic-form moments of the lifted spin components."""
    psi = state.amplitudes
    if ops.x.shape[0] != psi.shape[0]:
        raise ValueError(
            f"operator dimension {ops.x.shape[0]} does not match state dimension {psi.shape[0]}"
        )
    wx, wy, wz = ops.x @ psi, ops.y @ psi, ops.z @ psi
    mean = np.array([np.real(np.vdot(psi, w)) for w in (wx, wy, wz)])
    var_y = np.real(np.vdot(wy, wy)) - mean[1] ** 2
    var_z = np.real(np.vdot(wz, wz)) - mean[2] ** 2
    cov_yz = np.real(np.vdot(wy, wz)) - mean[1] * mean[2]
    return SpinMoments(mean=mean, covariance_yz=np.array([[var_y, cov_yz], [cov_yz, var_z]]))


class OptimalDirection(NamedTuple):
    theta_z: float
    variance_min: float
    degenerate: bool


def optimal_squeezing_direction(m: SpinMoments) -> OptimalDirection:
    """Angle theta_z in [0, pi) minimizing the variance along
    zbar = cos(theta) z + sin(theta) y, and that minimal variance.

    Closed form from the 2x2 covariance eigenproblem.  For an isotropic
    covariance every direction is optimal; theta_z = 0 is returned with
    the degenerate flag set.
    """
    (var_y, cov), (_, var_z) = m.covariance_yz
    # Var(theta) = (var_y+var_z)/2 + a cos(2 theta) + b sin(2 theta)
    a = (var_z - var_y) / 2
    b = cov
    mean_var = (var_y + var_z) / 2
    radius = math.hypot(a, b)
    if radius <= 1e-12 * max(mean_var, 1.0):
        return OptimalDirection(0.0, max(mean_var, 0.0), True)
    two_theta = math.atan2(b, a) + math.pi  # argmin of a cos + b sin
    theta = (two_theta / 2) % math.pi
    return OptimalDirection(theta, max(mean_var - radius, 0.0), False)


def squeezing_ratio(state: QuantumState, ops: LiftedSpin) -> float:
    """r = (minimal std. dev. in the (y,z) plane) / sqrt(|<S>|/2).

    Unity for an x-polarized coherent state; r < 1 certifies squeezing
    below the standard quantum limit.
    """
    m = spin_moments(state, ops)
    mean_len = np.linalg.norm(m.mean)
    if mean_len < 1e-9:
        raise UndefinedSqueezingError(f"mean spin length {mean_len} too small for r")
    _, var_min, _ = optimal_squeezing_direction(m)
    return math.sqrt(var_min) / math.sqrt(mean_len / 2)


def xi_squared(state: QuantumState, ops: LiftedSpin) -> float:
    """Entanglement-witnessing squeezing parameter
    xi^2 = 2 S (dS_zbar)^2 / (<Sx>^2 + <S_ybar>^2), with ybar the in-plane
    direction orthogonal to zbar; xi^2 < 1 signals an inseparable state.
    """
    m = spin_moments(state, ops)
    theta, var_min, _ = optimal_squeezing_direction(m)
    s_ybar = -math.sin(theta) * m.mean[2] + math.cos(theta) * m.mean[1]
    denom = m.mean[0] ** 2 + s_ybar**2
    if denom < 1e-18:
        raise UndefinedSqueezingError(f"xi^2 denominator {denom} too small")
    return 2 * state.space.spin.s * var_min / denom


def reduced_field_density(state: QuantumState) -> np.ndarray:
    """Field-side reduced density matrix, rho_J[j,j'] = sum_s psi[s,j] psi*[s,j']."""
    a = state.as_matrix()
    return a.T @ a.conj()


def _check_density(rho: np.ndarray):
    tr = np.real(np.trace(rho))
    if abs(tr - 1.0) > 1e-8:
        raise ValueError(f"density matrix trace {tr} deviates from 1 by more than 1e-8")


def von_neumann_entropy(rho: np.ndarray) -> float:
    """-Tr(rho ln rho) in nats; eigenvalues below 1e-14 contribute zero."""
    _check_density(rho)
    lam = np.linalg.eigvalsh(rho)
    lam = lam[lam > 1e-14]
    # roundoff can push an eigenvalue epsilon above 1; entropy itself is >= 0
    return max(0.0, float(-np.sum(lam * np.log(lam))))


def schmidt_number(rho: np.ndarray) -> float:
    """Effective number of Schmidt terms, K = 1 / Tr(rho^2)."""
    _check_density(rho)
    purity = np.real(np.vdot(rho, rho))  # Tr(rho @ rho) = sum |rho_ij|^2 for Hermitian rho
    # purity <= 1 holds exactly for a valid rho; clip the epsilon excess
    return max(1.0, float(1.0 / purity))


@dataclass(frozen=True)
class SqueezingReport:
    """All per-snapshot diagnostics of a squeezing run.

    r and xi2 are NaN where undefined (vanishing mean spin / denominator),
    e.g. for the degenerate two_s = 0 system.
    """

    theta_z: float
    delta_s_zbar: float
    r: float
    xi2: float
    s_x: float
    entropy_field: float
    schmidt_k: float
    degenerate_direction: bool = False


def analyze_state(state: QuantumState, ops: LiftedSpin, m: SpinMoments | None = None) -> SqueezingReport:
    """Evaluate every report quantity on one snapshot.

    Pass precomputed moments through ``m`` to avoid recomputing them.
    """
    if m is None:
        m = spin_moments(state, ops)
    theta, var_min, degenerate = optimal_squeezing_direction(m)
    mean_len = np.linalg.norm(m.mean)
    if mean_len < 1e-9:
        r = math.nan
    else:
        r = math.sqrt(var_min) / math.sqrt(mean_len / 2)
    s_ybar = -math.sin(theta) * m.mean[2] + math.cos(theta) * m.mean[1]
    denom = m.mean[0] ** 2 + s_ybar**2
    xi2 = 2 * state.space.spin.s * var_min / denom if denom >= 1e-18 else math.nan
    rho = reduced_field_density(state)
    return SqueezingReport(
        theta_z=theta,
        delta_s_zbar=math.sqrt(var_min),
        r=r,
        xi2=xi2,
        s_x=m.mean[0],
        entropy_field=von_neumann_entropy(rho),
        schmidt_k=schmidt_number(rho),
        degenerate_direction=degenerate,
    )
