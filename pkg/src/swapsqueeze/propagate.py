"""Time evolution under a time-independent Hermitian Hamiltonian (hbar = 1).

Two interchangeable routes compute e^{-iHt}|psi0>: full Hermitian
eigendecomposition for small dimensions, and a Lanczos small-subspace
exponential with adaptive step splitting for large ones.  ``evolve``
dispatches between them and samples the state on a uniform grid.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.linalg import eigh, eigh_tridiagonal

from .algebra import QuantumState

log = logging.getLogger(__name__)

# substep halving below this fraction of the output interval is treated as failure
_MIN_STEP_FRACTION = 2.0**-50


class KrylovConvergenceError(RuntimeError):
    """Lanczos stepping failed to meet the error tolerance before step underflow."""


@dataclass(frozen=True)
class PropagatorConfig:
    """Method selection and accuracy knobs for ``evolve``."""

    method: str = "auto"  # auto | dense_eig | krylov
    dense_threshold: int = 2048
    krylov_max_dim: int = 30
    step_tolerance: float = 1e-10  # per-output-step 2-norm error budget
    dt: float = 0.01  # output sampling interval in units of 1/alpha

    def __post_init__(self):
        if self.method not in ("auto", "dense_eig", "krylov"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.dense_threshold < 2:
            raise ValueError("dense_threshold must be >= 2")
        if self.krylov_max_dim < 2:
            raise ValueError("krylov_max_dim must be >= 2")
        if self.step_tolerance <= 0:
            raise ValueError("step_tolerance must be > 0")
        if self.dt <= 0:
            raise ValueError("dt must be > 0")


@dataclass(frozen=True)
class Trajectory:
    """Snapshots of the state on a strictly increasing time grid.

    ``norm_drifts[k]`` records |norm - 1| of snapshot k *before* the
    renormalization applied by ``evolve``; downstream variance formulas see
    exactly normalized states while the drift stays available for checks.
    """

    times: np.ndarray
    states: list[QuantumState] = field(repr=False)
    norm_drifts: np.ndarray = field(repr=False)
    method: str = "dense_eig"

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")


def _check_hermitian(h, tol=1e-10):
    resid = abs(h - h.conj().T)
    resid = resid.max() if sparse.issparse(resid) else np.max(resid)
    if resid > tol:
        raise ValueError(f"Hamiltonian is not Hermitian: max |H - H^dag| = {resid}")


def _sample_times(t_final: float, dt: float) -> np.ndarray:
    if t_final < 0:
        raise ValueError("t_final must be >= 0")
    n_steps = int(np.floor(t_final / dt + 1e-9))
    return np.arange(n_steps + 1) * dt


def _package(space, times, vectors, method) -> Trajectory:
    states = []
    drifts = np.empty(len(vectors))
    for k, vec in enumerate(vectors):
        norm = np.linalg.norm(vec)
        drifts[k] = abs(norm - 1.0)
        if drifts[k] > 0:
            log.debug("renormalizing snapshot %d: norm drift %.3e", k, drifts[k])
        states.append(QuantumState(space, vec / norm))
    return Trajectory(times=np.asarray(times, dtype=float), states=states,
                      norm_drifts=drifts, method=method)


def evolve(state0: QuantumState, h, t_final: float, cfg: PropagatorConfig) -> Trajectory:
    """Propagate state0 under h, sampling every cfg.dt up to t_final.

    ``auto`` uses the dense eigendecomposition when dim <= dense_threshold
    and the Lanczos propagator otherwise.
    """
    times = _sample_times(t_final, cfg.dt)
    method = cfg.method
    if method == "auto":
        method = "dense_eig" if state0.space.dim <= cfg.dense_threshold else "krylov"
    if method == "dense_eig":
        return evolve_dense(state0, h, times)
    return evolve_krylov(state0, h, times, cfg)


def evolve_dense(state0: QuantumState, h, times) -> Trajectory:
    """Evolution through the full eigendecomposition H = V diag(w) V^dag."""
    _check_hermitian(h)
    times = np.asarray(times, dtype=float)
    h_dense = h.toarray() if sparse.issparse(h) else np.asarray(h)
    w, v = eigh(h_dense)
    c0 = v.conj().T @ state0.amplitudes
    phases = np.exp(-1j * np.outer(times, w))  # (n_times, dim)
    vectors = (v @ (phases * c0).T).T
    return _package(state0.space, times, list(vectors), "dense_eig")


def evolve_krylov(state0: QuantumState, h, times, cfg: PropagatorConfig) -> Trajectory:
    """Lanczos propagation with adaptive substep splitting.

    Each substep builds a fresh Lanczos basis (with reorthogonalization),
    exponentiates the small real symmetric tridiagonal matrix exactly, and
    accepts the substep once the residual-based error estimate fits the
    proportional share of ``step_tolerance``.
    """
    _check_hermitian(h)
    times = np.asarray(times, dtype=float)
    h = sparse.csr_matrix(h)
    psi = state0.amplitudes.copy()
    vectors = [psi.copy()]
    t_now = times[0]
    for t_next in times[1:]:
        psi = _krylov_interval(h, psi, t_next - t_now, cfg)
        vectors.append(psi.copy())
        t_now = t_next
    return _package(state0.space, times, vectors, "krylov")


def _lanczos_basis(h, psi, m_max):
    """Lanczos tridiagonalization of h started from psi (assumed unit norm).

    Returns (V, alphas, betas, beta_next) where V has the basis vectors as
    columns, T = tridiag(betas; alphas; betas) and beta_next is the norm of
    the first discarded vector (0 on happy breakdown).
    """
    dim = psi.shape[0]
    m_max = min(m_max, dim)
    v_list = np.empty((dim, m_max), dtype=complex)
    alphas, betas = [], []
    v_list[:, 0] = psi
    scale = 0.0
    for j in range(m_max):
        w = h @ v_list[:, j]
        alpha = np.real(np.vdot(v_list[:, j], w))
        alphas.append(alpha)
        w -= alpha * v_list[:, j]
        if j > 0:
            w -= betas[-1] * v_list[:, j - 1]
        # one full reorthogonalization pass keeps the small basis clean
        w -= v_list[:, : j + 1] @ (v_list[:, : j + 1].conj().T @ w)
        beta = np.linalg.norm(w)
        scale = max(scale, abs(alpha), beta)
        if j == m_max - 1:
            return v_list, np.array(alphas), np.array(betas), beta
        if beta <= 1e-14 * max(scale, 1.0):
            # happy breakdown: psi lives in an exact invariant subspace
            return v_list[:, : j + 1], np.array(alphas), np.array(betas), 0.0
        betas.append(beta)
        v_list[:, j + 1] = w / beta
    raise AssertionError("unreachable")


def _tridiag_expm_column(alphas, betas, dt):
    """First column of expm(-i dt T) for real symmetric tridiagonal T."""
    if len(alphas) == 1:
        return np.array([np.exp(-1j * dt * alphas[0])])
    w, q = eigh_tridiagonal(alphas, betas)
    return q @ (np.exp(-1j * dt * w) * q[0, :])


def _krylov_interval(h, psi, interval, cfg):
    """Advance psi by one output interval, splitting substeps as needed."""
    remaining = interval
    h_try = interval
    min_step = interval * _MIN_STEP_FRACTION
    while remaining > 0:
        v_basis, alphas, betas, beta_next = _lanczos_basis(h, psi, cfg.krylov_max_dim)
        if beta_next == 0.0:
            h_try = remaining  # invariant subspace, result exact for any step
        while True:
            y = _tridiag_expm_column(alphas, betas, h_try)
            if beta_next == 0.0:
                break
            err = h_try * beta_next * abs(y[-1])
            if err <= cfg.step_tolerance * (h_try / interval):
                break
            h_try /= 2
            if h_try < min_step:
                raise KrylovConvergenceError(
                    f"no convergence at krylov_max_dim={cfg.krylov_max_dim} "
                    f"even at step size {h_try}"
                )
        psi = v_basis @ y
        remaining -= h_try
        h_try = min(2 * h_try, remaining) if remaining > 0 else 0.0
    return psi
