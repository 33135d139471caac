"""Exact sparse angular-momentum operators and coherent product states.

Basis convention used everywhere: the magnetic quantum number m runs
*descending*, m = +S, S-1, ..., -S, so S+ sits on the upper diagonal.
Spins are specified through ``two_s = 2S`` (a nonnegative integer), which
keeps half-integer spins exact.  The same ladder construction serves both
the atomic spin S and the two-mode light field mapped onto an effective
spin J with fixed total photon number 2J.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse


@dataclass(frozen=True)
class SpinQuantum:
    """A spin quantum number stored as ``two_s = 2S``."""

    two_s: int

    def __post_init__(self):
        if not isinstance(self.two_s, (int, np.integer)) or isinstance(self.two_s, bool):
            raise TypeError(f"two_s must be an integer, got {self.two_s!r}")
        if self.two_s < 0:
            raise ValueError(f"two_s must be >= 0, got {self.two_s}")

    @property
    def s(self) -> float:
        return self.two_s / 2

    @property
    def dimension(self) -> int:
        return self.two_s + 1

    def m_values(self) -> np.ndarray:
        """Magnetic quantum numbers in descending order, m = S ... -S."""
        return (self.two_s - 2 * np.arange(self.two_s + 1)) / 2

    def casimir_eigenvalue(self) -> float:
        # two_s*(two_s+2) is an exact integer; /4 is exact in binary floats
        return self.two_s * (self.two_s + 2) / 4


@dataclass(frozen=True)
class SpinOperators:
    """Sparse operator set {S+, S-, Sx, Sy, Sz, S^2} for one spin ladder."""

    s: SpinQuantum
    plus: sparse.csr_matrix
    minus: sparse.csr_matrix
    x: sparse.csr_matrix
    y: sparse.csr_matrix
    z: sparse.csr_matrix
    casimir: sparse.csr_matrix


def build_spin_operators(s: SpinQuantum) -> SpinOperators:
    """Construct the spin-S operator set in the descending-m basis.

    Matrix elements <m+1|S+|m> = sqrt(S(S+1) - m(m+1)), evaluated from
    integer arithmetic on two_s before the square root so that S^2 and
    the ladder coefficients carry no avoidable rounding.
    """
    dim = s.dimension
    m = s.m_values()
    # arguments of the sqrt as exact integers: S(S+1)-m(m+1) = (2S(2S+2) - 2m(2m+2))/4
    two_m_lower = (2 * m[1:]).astype(np.int64)
    ladder = np.sqrt((s.two_s * (s.two_s + 2) - two_m_lower * (two_m_lower + 2)) / 4)
    plus = sparse.diags(ladder, 1, shape=(dim, dim), dtype=complex).tocsr()
    minus = sparse.diags(ladder, -1, shape=(dim, dim), dtype=complex).tocsr()
    x = ((plus + minus) / 2).tocsr()
    y = ((plus - minus) / 2j).tocsr()
    z = sparse.diags(m.astype(complex), 0, shape=(dim, dim)).tocsr()
    casimir = (s.casimir_eigenvalue() * sparse.identity(dim, dtype=complex, format="csr")).tocsr()
    return SpinOperators(s=s, plus=plus, minus=minus, x=x, y=y, z=z, casimir=casimir)


def coherent_state_x(s: SpinQuantum) -> np.ndarray:
    """State fully polarized along x: the Sx eigenvector with eigenvalue +S.

    Amplitudes in the descending-m basis are binomial,
    c_m = 2^{-S} sqrt(C(2S, S-m)), all real and nonnegative.
    """
    n = s.two_s
    amps = np.array([math.sqrt(math.comb(n, k) / 2**n) for k in range(n + 1)])
    return amps.astype(complex)


@dataclass(frozen=True)
class ProductSpace:
    """Tensor product of an atomic spin S and a field spin J.

    Flat index convention: i = i_S * (2J+1) + i_J with both factor indices
    counting m downward from +S (resp. +J).  The spin factor is therefore
    the slow (leftmost Kronecker) one.
    """

    spin: SpinQuantum
    field: SpinQuantum

    @property
    def dim(self) -> int:
        return self.spin.dimension * self.field.dimension

    def lift_spin(self, op) -> sparse.csr_matrix:
        return lift(self, op, "spin")

    def lift_field(self, op) -> sparse.csr_matrix:
        return lift(self, op, "field")


def lift(space: ProductSpace, op, which: str) -> sparse.csr_matrix:
    """Embed a single-factor operator into the product space (op x I or I x op)."""
    op = sparse.csr_matrix(op)
    if which == "spin":
        if op.shape != (space.spin.dimension,) * 2:
            raise ValueError(
                f"operator shape {op.shape} does not match spin dimension {space.spin.dimension}"
            )
        return sparse.kron(op, sparse.identity(space.field.dimension, dtype=op.dtype), format="csr")
    if which == "field":
        if op.shape != (space.field.dimension,) * 2:
            raise ValueError(
                f"operator shape {op.shape} does not match field dimension {space.field.dimension}"
            )
        return sparse.kron(sparse.identity(space.spin.dimension, dtype=op.dtype), op, format="csr")
    raise ValueError(f"which must be 'spin' or 'field', got {which!r}")


@dataclass(frozen=True)
class QuantumState:
    """Normalized amplitude vector over a ProductSpace, flat-indexed."""

    space: ProductSpace
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        object.__setattr__(self, "amplitudes", amps)
        if amps.shape != (self.space.dim,):
            raise ValueError(f"amplitude vector has shape {amps.shape}, expected ({self.space.dim},)")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"state norm {norm} deviates from 1 by more than 1e-9")

    def as_matrix(self) -> np.ndarray:
        """Amplitudes reshaped to (spin dim, field dim)."""
        return self.amplitudes.reshape(self.space.spin.dimension, self.space.field.dimension)


def product_state(space: ProductSpace, spin_part: np.ndarray, field_part: np.ndarray) -> QuantumState:
    """Unentangled joint state |spin_part> x |field_part>."""
    spin_part = np.asarray(spin_part, dtype=complex)
    field_part = np.asarray(field_part, dtype=complex)
    if spin_part.shape != (space.spin.dimension,):
        raise ValueError(
            f"spin part has shape {spin_part.shape}, expected ({space.spin.dimension},)"
        )
    if field_part.shape != (space.field.dimension,):
        raise ValueError(
            f"field part has shape {field_part.shape}, expected ({space.field.dimension},)"
        )
    for name, part in (("spin", spin_part), ("field", field_part)):
        norm = np.linalg.norm(part)
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"{name} part norm {norm} deviates from 1 by more than 1e-9")
    return QuantumState(space, np.outer(spin_part, field_part).ravel())
