import numpy as np
import pytest
from scipy import sparse

from swapsqueeze.algebra import (
    ProductSpace,
    QuantumState,
    SpinQuantum,
    build_spin_operators,
    coherent_state_x,
    lift,
    product_state,
)
from swapsqueeze.hamiltonian import ModelParams, build_ku_hamiltonian, build_swap_hamiltonian
from swapsqueeze.propagate import (
    KrylovConvergenceError,
    PropagatorConfig,
    evolve,
    evolve_dense,
    evolve_krylov,
)


def series_expm_apply(h, psi, t, terms=120):
    """Independent oracle: sum_k (-i t H)^k / k! applied to psi."""
    h = np.asarray(h, dtype=complex)
    acc = psi.astype(complex).copy()
    term = psi.astype(complex).copy()
    for k in range(1, terms):
        term = (-1j * t / k) * (h @ term)
        acc += term
        if np.linalg.norm(term) < 1e-18:
            break
    return acc


def random_state(space, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=space.dim) + 1j * rng.normal(size=space.dim)
    return QuantumState(space, v / np.linalg.norm(v))


def random_hermitian(dim, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return sparse.csr_matrix((a + a.conj().T) / 2)


def trivial_space(dim):
    return ProductSpace(SpinQuantum(dim - 1), SpinQuantum(0))


class TestEvolveBasics:
    def test_zero_hamiltonian_is_identity(self):
        space = trivial_space(6)
        st = random_state(space, 0)
        h = sparse.csr_matrix((6, 6), dtype=complex)
        traj = evolve(st, h, 0.5, PropagatorConfig(dt=0.1))
        for snap in traj.states:
            np.testing.assert_allclose(snap.amplitudes, st.amplitudes, atol=1e-14)

    def test_sample_grid(self):
        space = trivial_space(2)
        st = QuantumState(space, np.array([1, 0], dtype=complex))
        h = sparse.identity(2, dtype=complex, format="csr")
        traj = evolve(st, h, 1.0, PropagatorConfig(dt=0.25))
        np.testing.assert_allclose(traj.times, [0, 0.25, 0.5, 0.75, 1.0])
        traj = evolve(st, h, 3.1416, PropagatorConfig(dt=0.01))
        assert len(traj.times) == 315

    def test_auto_dispatch(self):
        space = trivial_space(8)
        st = random_state(space, 1)
        h = random_hermitian(8, 2)
        cfg_small = PropagatorConfig(dense_threshold=8, dt=0.1)
        cfg_forced = PropagatorConfig(dense_threshold=4, dt=0.1)
        assert evolve(st, h, 0.2, cfg_small).method == "dense_eig"
        assert evolve(st, h, 0.2, cfg_forced).method == "krylov"

    def test_rejects_non_hermitian(self):
        space = trivial_space(3)
        st = random_state(space, 3)
        h = sparse.csr_matrix(np.array([[0, 1, 0], [0, 0, 0], [0, 0, 0]], dtype=complex))
        for runner in (lambda: evolve(st, h, 0.1, PropagatorConfig(dt=0.1)),
                       lambda: evolve_dense(st, h, [0.0, 0.1]),
                       lambda: evolve_krylov(st, h, [0.0, 0.1], PropagatorConfig())):
            with pytest.raises(ValueError):
                runner()


class TestAgainstSeriesOracle:
    def test_half_half_swap_dynamics(self):
        # S=1/2, J=1/2 against the hand-built 4x4 series-summed exponential
        space = ProductSpace(SpinQuantum(1), SpinQuantum(1))
        hand_h = np.zeros((4, 4), dtype=complex)
        hand_h[0, 3] = hand_h[3, 0] = 1.0
        h = build_swap_hamiltonian(space, ModelParams(alpha=1.0))
        np.testing.assert_array_equal(h.toarray(), hand_h)

        st0 = QuantumState(space, np.array([0, 0, 0, 1], dtype=complex))
        for method in ("dense_eig", "krylov"):
            traj = evolve(st0, h, 2 * np.pi, PropagatorConfig(method=method, dt=0.05))
            for t, snap in zip(traj.times, traj.states):
                ref = series_expm_apply(hand_h, st0.amplitudes, t)
                assert np.linalg.norm(snap.amplitudes - ref) <= 1e-10

    def test_rabi_population_oscillation(self):
        space = ProductSpace(SpinQuantum(1), SpinQuantum(1))
        h = build_swap_hamiltonian(space, ModelParams(alpha=1.0))
        st0 = QuantumState(space, np.array([0, 0, 0, 1], dtype=complex))
        traj = evolve(st0, h, np.pi / 2, PropagatorConfig(dt=np.pi / 20))
        for t, snap in zip(traj.times, traj.states):
            assert abs(snap.amplitudes[0]) ** 2 == pytest.approx(np.sin(t) ** 2, abs=1e-10)
        assert abs(traj.states[-1].amplitudes[0]) ** 2 == pytest.approx(1.0, abs=1e-10)


class TestKuAnalytic:
    @pytest.mark.parametrize("method", ["dense_eig", "krylov"])
    @pytest.mark.parametrize("two_s", [4, 20])
    def test_sx_matches_closed_form(self, method, two_s):
        s = SpinQuantum(two_s)
        space = ProductSpace(s, SpinQuantum(0))
        st0 = product_state(space, coherent_state_x(s), np.array([1.0]))
        h = lift(space, build_ku_hamiltonian(s, 1.0), "spin")
        sx = lift(space, build_spin_operators(s).x, "spin")
        traj = evolve(st0, h, np.pi, PropagatorConfig(method=method, dt=0.02))
        for t, snap in zip(traj.times, traj.states):
            val = np.real(np.vdot(snap.amplitudes, sx @ snap.amplitudes))
            assert val == pytest.approx(s.s * np.cos(t) ** (two_s - 1), abs=1e-8)

    def test_diagonal_hamiltonian_pure_phases(self):
        space = trivial_space(5)
        st0 = random_state(space, 11)
        diag = np.array([0.3, -1.2, 2.0, 0.0, 5.5])
        h = sparse.diags(diag.astype(complex), format="csr")
        traj = evolve(st0, h, 1.0, PropagatorConfig(dt=0.2))
        for t, snap in zip(traj.times, traj.states):
            np.testing.assert_allclose(snap.amplitudes,
                                       np.exp(-1j * diag * t) * st0.amplitudes, atol=1e-12)

    def test_scalar_hamiltonian_global_phase(self):
        space = trivial_space(7)
        st0 = random_state(space, 5)
        c = 0.77
        h = c * sparse.identity(7, dtype=complex, format="csr")
        traj = evolve_krylov(st0, h, np.linspace(0, 2.0, 9), PropagatorConfig())
        for t, snap in zip(traj.times, traj.states):
            np.testing.assert_allclose(snap.amplitudes,
                                       np.exp(-1j * c * t) * st0.amplitudes, atol=1e-12)


class TestMethodAgreement:
    def test_random_dim64(self):
        space = trivial_space(64)
        st0 = random_state(space, 21)
        h = random_hermitian(64, 22)
        times = np.linspace(0, 3.0, 31)
        dense = evolve_dense(st0, h, times)
        krylov = evolve_krylov(st0, h, times, PropagatorConfig())
        for a, b in zip(dense.states, krylov.states):
            assert np.linalg.norm(a.amplitudes - b.amplitudes) <= 1e-8

    def test_swap_model_dim45(self):
        # S=2, J=8 joint space
        space = ProductSpace(SpinQuantum(4), SpinQuantum(16))
        st0 = product_state(space, coherent_state_x(space.spin), coherent_state_x(space.field))
        h = build_swap_hamiltonian(space, ModelParams(alpha=1.0))
        times = np.arange(0, 1.01, 0.05)
        dense = evolve_dense(st0, h, times)
        krylov = evolve_krylov(st0, h, times, PropagatorConfig())
        for a, b in zip(dense.states, krylov.states):
            assert np.linalg.norm(a.amplitudes - b.amplitudes) <= 1e-8


class TestConservation:
    @pytest.mark.parametrize("method", ["dense_eig", "krylov"])
    def test_norm_energy_and_charge(self, method):
        space = ProductSpace(SpinQuantum(4), SpinQuantum(8))
        st0 = product_state(space, coherent_state_x(space.spin), coherent_state_x(space.field))
        h = build_swap_hamiltonian(space, ModelParams(alpha=1.0, beta=0.2))
        q = (lift(space, build_spin_operators(space.field).z, "field")
             - lift(space, build_spin_operators(space.spin).z, "spin"))
        traj = evolve(st0, h, 2.0, PropagatorConfig(method=method, dt=0.05))
        assert traj.norm_drifts.max() <= 1e-8

        def expval(snap, op):
            return np.real(np.vdot(snap.amplitudes, op @ snap.amplitudes))

        e0 = expval(traj.states[0], h)
        q0 = expval(traj.states[0], q)
        h_scale = np.max(np.abs(h).sum(axis=1))
        for snap in traj.states[1:]:
            assert abs(expval(snap, h) - e0) <= 1e-7 * h_scale
            assert abs(expval(snap, q) - q0) <= 1e-8

    @pytest.mark.parametrize("method", ["dense_eig", "krylov"])
    def test_time_reversal(self, method):
        space = ProductSpace(SpinQuantum(3), SpinQuantum(5))
        st0 = product_state(space, coherent_state_x(space.spin), coherent_state_x(space.field))
        h = build_swap_hamiltonian(space, ModelParams(alpha=1.0))
        cfg = PropagatorConfig(method=method, dt=0.25)
        fwd = evolve(st0, h, 1.5, cfg)
        back = evolve(fwd.states[-1], -h, 1.5, cfg)
        assert np.linalg.norm(back.states[-1].amplitudes - st0.amplitudes) <= 1e-7


class TestKrylovEdgeCases:
    def test_happy_breakdown_small_dim(self):
        # krylov_max_dim far above the space dimension
        space = trivial_space(3)
        st0 = random_state(space, 8)
        h = random_hermitian(3, 9)
        times = [0.0, 0.7, 1.4]
        krylov = evolve_krylov(st0, h, times, PropagatorConfig(krylov_max_dim=30))
        dense = evolve_dense(st0, h, times)
        for a, b in zip(dense.states, krylov.states):
            assert np.linalg.norm(a.amplitudes - b.amplitudes) <= 1e-10

    def test_step_underflow_raises(self):
        space = trivial_space(16)
        st0 = random_state(space, 13)
        h = 50.0 * random_hermitian(16, 14)
        cfg = PropagatorConfig(method="krylov", krylov_max_dim=2, step_tolerance=1e-300, dt=1.0)
        with pytest.raises(KrylovConvergenceError):
            evolve(st0, h, 1.0, cfg)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            PropagatorConfig(method="magic")
        with pytest.raises(ValueError):
            PropagatorConfig(dt=0.0)
        with pytest.raises(ValueError):
            PropagatorConfig(step_tolerance=0.0)
        with pytest.raises(ValueError):
            PropagatorConfig(krylov_max_dim=1)
        with pytest.raises(ValueError):
            PropagatorConfig(dense_threshold=1)
