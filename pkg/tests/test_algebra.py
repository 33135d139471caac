import math

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


def max_abs(mat):
    mat = mat.tocoo() if sparse.issparse(mat) else sparse.coo_matrix(mat)
    return np.max(np.abs(mat.data)) if mat.nnz else 0.0


class TestSpinQuantum:
    def test_dimension(self):
        assert SpinQuantum(0).dimension == 1
        assert SpinQuantum(1).dimension == 2
        assert SpinQuantum(4).dimension == 5

    def test_m_values_descending(self):
        np.testing.assert_array_equal(SpinQuantum(3).m_values(), [1.5, 0.5, -0.5, -1.5])

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            SpinQuantum(-1)

    def test_rejects_non_integer(self):
        with pytest.raises(TypeError):
            SpinQuantum(1.5)


class TestSpinOperators:
    def test_spin_half_matrices(self):
        ops = build_spin_operators(SpinQuantum(1))
        np.testing.assert_array_equal(ops.plus.toarray(), [[0, 1], [0, 0]])
        np.testing.assert_array_equal(ops.z.toarray(), [[0.5, 0], [0, -0.5]])

    def test_spin_one_ladder_elements(self):
        ops = build_spin_operators(SpinQuantum(2))
        plus = ops.plus.toarray()
        assert plus[0, 1] == plus[1, 2] == math.sqrt(2)

    def test_minus_is_adjoint_of_plus(self):
        for two_s in (1, 2, 5, 8):
            ops = build_spin_operators(SpinQuantum(two_s))
            assert max_abs(ops.minus - ops.plus.conj().T) == 0.0

    @pytest.mark.parametrize("two_s", range(0, 41))
    def test_commutators(self, two_s):
        ops = build_spin_operators(SpinQuantum(two_s))
        for a, b, c in ((ops.x, ops.y, ops.z), (ops.y, ops.z, ops.x), (ops.z, ops.x, ops.y)):
            assert max_abs(a @ b - b @ a - 1j * c) <= 1e-12

    @pytest.mark.parametrize("two_s", range(0, 41))
    def test_casimir_exact(self, two_s):
        ops = build_spin_operators(SpinQuantum(two_s))
        expected = two_s * (two_s + 2) / 4
        diag = ops.casimir.diagonal()
        assert np.all(diag == expected)
        assert ops.casimir.nnz == two_s + 1 or two_s == 0

    def test_casimir_spin_two(self):
        ops = build_spin_operators(SpinQuantum(4))
        assert np.all(ops.casimir.diagonal() == 6.0)
        assert max_abs(ops.x @ ops.y - ops.y @ ops.x - 1j * ops.z) <= 1e-12

    @pytest.mark.parametrize("two_s", [1, 2, 3, 7, 12])
    def test_ladder_annihilates_extremes(self, two_s):
        ops = build_spin_operators(SpinQuantum(two_s))
        top = np.zeros(two_s + 1, dtype=complex)
        top[0] = 1.0
        bottom = np.zeros(two_s + 1, dtype=complex)
        bottom[-1] = 1.0
        assert np.all(ops.plus @ top == 0)
        assert np.all(ops.minus @ bottom == 0)


class TestCoherentState:
    def test_spin_half(self):
        np.testing.assert_allclose(coherent_state_x(SpinQuantum(1)),
                                   [1 / math.sqrt(2), 1 / math.sqrt(2)])

    def test_spin_one_binomial(self):
        np.testing.assert_allclose(coherent_state_x(SpinQuantum(2)),
                                   [0.5, 1 / math.sqrt(2), 0.5])

    @pytest.mark.parametrize("two_s", [0, 1, 2, 5, 11, 24, 40])
    def test_is_top_sx_eigenvector(self, two_s):
        s = SpinQuantum(two_s)
        ops = build_spin_operators(s)
        v = coherent_state_x(s)
        assert np.linalg.norm(ops.x @ v - s.s * v) <= 1e-10
        assert abs(np.linalg.norm(v) - 1.0) <= 1e-12
        assert np.all(v.real >= 0) and np.all(v.imag == 0)

    def test_spin_two_moments(self):
        s = SpinQuantum(4)
        ops = build_spin_operators(s)
        v = coherent_state_x(s)

        def expval(op):
            return np.real(np.vdot(v, op @ v))

        assert expval(ops.x) == pytest.approx(2.0, abs=1e-12)
        assert expval(ops.y) == pytest.approx(0.0, abs=1e-12)
        assert expval(ops.z) == pytest.approx(0.0, abs=1e-12)
        var_z = expval(ops.z @ ops.z) - expval(ops.z) ** 2
        assert var_z == pytest.approx(1.0, abs=1e-12)  # S/2 for S=2


class TestProductSpace:
    def test_dim(self):
        assert ProductSpace(SpinQuantum(4), SpinQuantum(16)).dim == 5 * 17

    def test_lift_identity(self):
        space = ProductSpace(SpinQuantum(2), SpinQuantum(3))
        eye = sparse.identity(3, dtype=complex)
        lifted = lift(space, eye, "spin")
        assert max_abs(lifted - sparse.identity(space.dim, dtype=complex)) == 0.0

    def test_lift_factors_commute(self):
        space = ProductSpace(SpinQuantum(2), SpinQuantum(4))
        s_ops = build_spin_operators(space.spin)
        j_ops = build_spin_operators(space.field)
        a = lift(space, s_ops.z, "spin")
        b = lift(space, j_ops.z, "field")
        assert max_abs(a @ b - b @ a) == 0.0

    def test_lift_half_half_transition(self):
        # raising both factors maps |down,down> (last index) to |up,up> (first)
        space = ProductSpace(SpinQuantum(1), SpinQuantum(1))
        s_ops = build_spin_operators(space.spin)
        j_ops = build_spin_operators(space.field)
        both = lift(space, s_ops.plus, "spin") @ lift(space, j_ops.plus, "field")
        down_down = np.array([0, 0, 0, 1], dtype=complex)
        np.testing.assert_array_equal(both @ down_down, [1, 0, 0, 0])

    def test_lift_homomorphism_random_ops(self):
        rng = np.random.default_rng(7)
        for dim_s, dim_j in ((2, 3), (4, 5), (6, 4)):
            space = ProductSpace(SpinQuantum(dim_s - 1), SpinQuantum(dim_j - 1))
            for which, d in (("spin", dim_s), ("field", dim_j)):
                a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
                b = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
                lhs = lift(space, a, which) @ lift(space, b, which)
                rhs = lift(space, a @ b, which)
                assert max_abs(lhs - rhs) <= 1e-12

    def test_lift_dimension_mismatch(self):
        space = ProductSpace(SpinQuantum(2), SpinQuantum(4))
        with pytest.raises(ValueError):
            lift(space, np.eye(4), "spin")
        with pytest.raises(ValueError):
            lift(space, np.eye(3), "field")
        with pytest.raises(ValueError):
            lift(space, np.eye(3), "both")


class TestQuantumState:
    def test_norm_enforced(self):
        space = ProductSpace(SpinQuantum(1), SpinQuantum(1))
        with pytest.raises(ValueError):
            QuantumState(space, np.array([1, 1, 0, 0], dtype=complex))

    def test_shape_enforced(self):
        space = ProductSpace(SpinQuantum(1), SpinQuantum(1))
        with pytest.raises(ValueError):
            QuantumState(space, np.array([1, 0, 0], dtype=complex))


class TestProductState:
    def test_half_half_x_polarized(self):
        space = ProductSpace(SpinQuantum(1), SpinQuantum(1))
        st = product_state(space, coherent_state_x(space.spin), coherent_state_x(space.field))
        np.testing.assert_allclose(st.amplitudes, [0.5, 0.5, 0.5, 0.5])

    def test_rejects_unnormalized_parts(self):
        space = ProductSpace(SpinQuantum(1), SpinQuantum(1))
        good = coherent_state_x(space.field)
        with pytest.raises(ValueError):
            product_state(space, np.array([1.0, 1.0]), good)

    def test_rejects_wrong_dimensions(self):
        space = ProductSpace(SpinQuantum(2), SpinQuantum(1))
        with pytest.raises(ValueError):
            product_state(space, np.array([1.0, 0.0]), np.array([1.0, 0.0]))

    def test_joint_x_polarized_expectations(self):
        space = ProductSpace(SpinQuantum(4), SpinQuantum(4))
        st = product_state(space, coherent_state_x(space.spin), coherent_state_x(space.field))
        s_x = lift(space, build_spin_operators(space.spin).x, "spin")
        j_x = lift(space, build_spin_operators(space.field).x, "field")
        assert np.real(np.vdot(st.amplitudes, s_x @ st.amplitudes)) == pytest.approx(2.0, abs=1e-12)
        assert np.real(np.vdot(st.amplitudes, j_x @ st.amplitudes)) == pytest.approx(2.0, abs=1e-12)

    def test_product_state_is_unentangled(self):
        space = ProductSpace(SpinQuantum(3), SpinQuantum(2))
        rng = np.random.default_rng(3)
        a = rng.normal(size=4) + 1j * rng.normal(size=4)
        b = rng.normal(size=3) + 1j * rng.normal(size=3)
        st = product_state(space, a / np.linalg.norm(a), b / np.linalg.norm(b))
        svals = np.linalg.svd(st.as_matrix(), compute_uv=False)
        assert np.sum(svals > 1e-12) == 1
