"""Exact dense complex linear algebra for small Hilbert spaces.

States, operators, tensor products, and the measurement coupling unitary
exp(-i g S (x) P).  Everything is dense ``complex128``; the supported scale
is a desk-sized joint space (system dim <= 16, pointer dim <= 256).

Conventions fixed here and relied on everywhere else:

* Joint-space indexing is system-major: the amplitude of (system i,
  pointer j) sits at flat index ``i * ptr_dim + j`` (the ``numpy.kron``
  order).
* hbar = 1 throughout.
* Hermitian exponentials are evaluated through eigendecomposition, never a
  truncated series, so the result is unitary to machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonHermitianOperatorError

#: Tolerance for structural checks (normalization tags, hermiticity tags).
STRUCTURAL_TOL = 1e-12
#: Tolerance promised for unitarity of constructed coupling unitaries.
UNITARITY_TOL = 1e-10


def _as_complex_vector(values) -> np.ndarray:
    arr = np.array(values, dtype=np.complex128)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("amplitudes must form a non-empty 1-d sequence")
    if not np.all(np.isfinite(arr)):
        raise ValueError("amplitudes must be finite")
    return arr


def _as_complex_matrix(values) -> np.ndarray:
    arr = np.array(values, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise ValueError("operator entries must form a non-empty square matrix")
    if not np.all(np.isfinite(arr)):
        raise ValueError("operator entries must be finite")
    return arr


@dataclass(frozen=True, eq=False)
class StateVector:
    """Complex amplitude vector for a system, pointer, or joint space.

    ``normalized`` is a tag, not an instruction: if left unset it is
    detected from the amplitudes; if explicitly True it is verified.
    Conditional post-selected branches are legitimately unnormalized.
    """

    amps: np.ndarray
    normalized: bool | None = None

    def __post_init__(self):
        arr = _as_complex_vector(self.amps)
        with np.errstate(over="ignore"):
            # an overflowing norm is simply "not normalized"
            norm_sq = float(np.vdot(arr, arr).real)
        tag = self.normalized
        if tag is None:
            tag = abs(norm_sq - 1.0) <= STRUCTURAL_TOL
        elif tag and abs(norm_sq - 1.0) > STRUCTURAL_TOL:
            raise ValueError(
                f"state tagged normalized but squared norm is {norm_sq!r}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "amps", arr)
        object.__setattr__(self, "normalized", bool(tag))

    @property
    def dim(self) -> int:
        return self.amps.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def unit(self) -> "StateVector":
        """Normalized copy; raises on (numerically) zero states."""
        n = self.norm()
        if n < 1e-150:
            raise ValueError("cannot normalize a zero state")
        return StateVector(self.amps / n)


@dataclass(frozen=True, eq=False)
class LinearOperator:
    """Dense complex square matrix with an (auto-detected) hermiticity tag."""

    entries: np.ndarray
    hermitian: bool | None = None

    def __post_init__(self):
        arr = _as_complex_matrix(self.entries)
        with np.errstate(over="ignore"):
            # an overflowing deviation is simply "not hermitian"
            deviation = float(np.max(np.abs(arr - arr.conj().T)))
        tag = self.hermitian
        if tag is None:
            tag = deviation <= STRUCTURAL_TOL
        elif tag and deviation > STRUCTURAL_TOL:
            raise ValueError(
                f"operator tagged hermitian but max |A - A^dag| = {deviation!r}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)
        object.__setattr__(self, "hermitian", bool(tag))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def apply(self, state: StateVector) -> StateVector:
        if state.dim != self.dim:
            raise ValueError(
                f"operator dim {self.dim} does not match state dim {state.dim}"
            )
        return StateVector(self.entries @ state.amps)

    def __add__(self, other: "LinearOperator") -> "LinearOperator":
        if not isinstance(other, LinearOperator):
            return NotImplemented
        if other.dim != self.dim:
            raise ValueError("operator dimensions differ")
        return LinearOperator(self.entries + other.entries)

    def __sub__(self, other: "LinearOperator") -> "LinearOperator":
        if not isinstance(other, LinearOperator):
            return NotImplemented
        if other.dim != self.dim:
            raise ValueError("operator dimensions differ")
        return LinearOperator(self.entries - other.entries)

    def __mul__(self, scalar) -> "LinearOperator":
        if not isinstance(scalar, (int, float, complex)):
            return NotImplemented
        return LinearOperator(self.entries * complex(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar) -> "LinearOperator":
        if not isinstance(scalar, (int, float, complex)):
            return NotImplemented
        return LinearOperator(self.entries / complex(scalar))

    def __matmul__(self, other: "LinearOperator") -> "LinearOperator":
        if not isinstance(other, LinearOperator):
            return NotImplemented
        if other.dim != self.dim:
            raise ValueError("operator dimensions differ")
        return LinearOperator(self.entries @ other.entries)


@dataclass(frozen=True, eq=False)
class JointState:
    """System (x) pointer state with the system index varying slower."""

    sys_dim: int
    ptr_dim: int
    state: StateVector

    def __post_init__(self):
        if self.sys_dim < 1 or self.ptr_dim < 1:
            raise ValueError("joint factors must have positive dimension")
        if self.state.dim != self.sys_dim * self.ptr_dim:
            raise ValueError(
                f"joint state has dim {self.state.dim}, expected "
                f"{self.sys_dim} * {self.ptr_dim}"
            )

    def as_matrix(self) -> np.ndarray:
        """Amplitudes reshaped to (sys_dim, ptr_dim)."""
        return self.state.amps.reshape(self.sys_dim, self.ptr_dim)

    def norm(self) -> float:
        return self.state.norm()


def tensor_product(a: StateVector, b: StateVector) -> JointState:
    """Product state with amplitude a_i * b_j at joint index (i, j)."""
    return JointState(a.dim, b.dim, StateVector(np.kron(a.amps, b.amps)))


def inner(a: StateVector, b: StateVector) -> complex:
    """<a|b>, conjugate-linear in ``a`` and linear in ``b``."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return complex(np.vdot(a.amps, b.amps))


def _require_hermitian(op: LinearOperator, role: str) -> None:
    if not op.hermitian:
        raise NonHermitianOperatorError(f"{role} must be hermitian")


class CouplingEvolution:
    """Measurement coupling exp(-i g S (x) P), diagonalized once, reusable per g.

    The hermitian factors are eigendecomposed separately; their eigenpairs
    assemble the full eigensystem of S (x) P (eigenvalue lambda_i * mu_j,
    eigenvector v_i (x) w_j in system-major order).  Besides being cheaper
    than diagonalizing the joint generator, this keeps product kernels
    exact: if S|in> = 0 the joint product state is a true fixed point at
    every coupling strength, not just a numerical approximation.
    """

    def __init__(self, system_op: LinearOperator, pointer_op: LinearOperator):
        _require_hermitian(system_op, "system observable")
        _require_hermitian(pointer_op, "pointer generator")
        self.sys_dim = system_op.dim
        self.ptr_dim = pointer_op.dim
        sys_eigvals, sys_vecs = np.linalg.eigh(system_op.entries)
        ptr_eigvals, ptr_vecs = np.linalg.eigh(pointer_op.entries)
        self._sys_eigvals = sys_eigvals
        self._ptr_eigvals = ptr_eigvals
        self._sys_vecs = sys_vecs
        self._ptr_vecs = ptr_vecs
        # lambda_i * mu_j laid out as (sys, ptr)
        self._joint_eigvals = np.outer(sys_eigvals, ptr_eigvals)

    def unitary(self, g: float) -> LinearOperator:
        """Dense exp(-i g S (x) P) on the joint space."""
        g = _finite_coupling(g)
        dim = self.sys_dim * self.ptr_dim
        if g == 0.0:
            return LinearOperator(np.eye(dim), hermitian=None)
        basis = np.kron(self._sys_vecs, self._ptr_vecs)
        # I + V (e^{-ig lambda} - 1) V^dag: eigenvectors with phase exactly 1
        # (the generator kernel) contribute nothing, not even roundoff.
        phases = np.exp(-1j * g * self._joint_eigvals.ravel()) - 1.0
        return LinearOperator(np.eye(dim) + (basis * phases) @ basis.conj().T)

    def apply(self, g: float, joint: JointState) -> JointState:
        """exp(-i g S (x) P) applied to a joint state (no dense unitary built)."""
        g = _finite_coupling(g)
        if joint.sys_dim != self.sys_dim or joint.ptr_dim != self.ptr_dim:
            raise ValueError("joint state dimensions do not match the coupling")
        if g == 0.0:
            return joint
        mat = joint.as_matrix()
        # Psi = V_s C V_p^T  =>  C = V_s^dag Psi conj(V_p)
        coeffs = self._sys_vecs.conj().T @ mat @ self._ptr_vecs.conj()
        coeffs = coeffs * (np.exp(-1j * g * self._joint_eigvals) - 1.0)
        out = mat + self._sys_vecs @ coeffs @ self._ptr_vecs.T
        return JointState(
            self.sys_dim,
            self.ptr_dim,
            StateVector(out.ravel(), normalized=None),
        )


def _finite_coupling(g) -> float:
    g = float(g)
    if not np.isfinite(g):
        raise ValueError("coupling strength must be finite")
    return g


def coupling_unitary(S: LinearOperator, P: LinearOperator, g: float) -> LinearOperator:
    """exp(-i g S (x) P) for hermitian S (system) and P (pointer)."""
    return CouplingEvolution(S, P).unitary(g)


def evolve(generator: LinearOperator, t: float, state: StateVector) -> StateVector:
    """exp(-i t H)|psi> for hermitian H, via eigendecomposition."""
    _require_hermitian(generator, "evolution generator")
    t = _finite_coupling(t)
    if t == 0.0:
        return state
    eigvals, vecs = np.linalg.eigh(generator.entries)
    coeffs = vecs.conj().T @ state.amps
    return StateVector(vecs @ (np.exp(-1j * t * eigvals) * coeffs))


def first_order_state(
    pre: StateVector,
    m: StateVector,
    S: LinearOperator,
    P: LinearOperator,
    g: float,
) -> JointState:
    """|in>(x)|m> - i g S|in> (x) P|m>, the expansion of the coupling to O(g).

    Not normalized in general.
    """
    if S.dim != pre.dim:
        raise ValueError("system observable does not match the system state")
    if P.dim != m.dim:
        raise ValueError("pointer generator does not match the pointer state")
    g = _finite_coupling(g)
    amps = np.kron(pre.amps, m.amps) - 1j * g * np.kron(
        S.entries @ pre.amps, P.entries @ m.amps
    )
    return JointState(pre.dim, m.dim, StateVector(amps, normalized=None))


# ---------------------------------------------------------------------------
# Small library of standard states and operators.

def basis_state(dim: int, index: int) -> StateVector:
    if not 0 <= index < dim:
        raise ValueError(f"basis index {index} out of range for dim {dim}")
    amps = np.zeros(dim, dtype=np.complex128)
    amps[index] = 1.0
    return StateVector(amps)


def spin_up_z() -> StateVector:
    return basis_state(2, 0)


def spin_down_z() -> StateVector:
    return basis_state(2, 1)


def spin_up_x() -> StateVector:
    return StateVector(np.array([1.0, 1.0]) / np.sqrt(2.0))


def spin_down_x() -> StateVector:
    return StateVector(np.array([1.0, -1.0]) / np.sqrt(2.0))


def pauli_x() -> LinearOperator:
    return LinearOperator(np.array([[0.0, 1.0], [1.0, 0.0]]), hermitian=True)


def pauli_y() -> LinearOperator:
    return LinearOperator(np.array([[0.0, -1j], [1j, 0.0]]), hermitian=True)


def pauli_z() -> LinearOperator:
    return LinearOperator(np.array([[1.0, 0.0], [0.0, -1.0]]), hermitian=True)


def identity(dim: int) -> LinearOperator:
    if dim < 1:
        raise ValueError("identity needs a positive dimension")
    return LinearOperator(np.eye(dim), hermitian=True)


def projector(state: StateVector) -> LinearOperator:
    """|s><s| / <s|s> for a nonzero state."""
    unit = state if state.normalized else state.unit()
    return LinearOperator(np.outer(unit.amps, unit.amps.conj()), hermitian=True)
