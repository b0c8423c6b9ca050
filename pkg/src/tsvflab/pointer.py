"""Measuring-device models: a discretized Gaussian wavepacket and a qubit.

The Gaussian pointer lives on a uniform position grid of ``n_points``
(power of two) spanning ``[-half_width, half_width)``.  Its ready state is
a real, centered Gaussian with amplitude proportional to
``exp(-q^2 / (4 spread^2))`` so that ``spread`` is the position-probability
standard deviation.  The translation generator P is realized spectrally
through the discrete Fourier transform (periodic boundary), which keeps it
exactly hermitian and makes exp(-i g P) an exact band-limited translation
on the grid.

The qubit pointer is the minimal discrete measuring device: the coupling
generator is one Pauli axis (default y), the readout is the next axis in
cyclic order (default z), and the ready state is the +1 eigenstate of the
remaining axis.  With this arrangement the ready state satisfies
``<m|G|m> = 0`` just like the Gaussian, and the first-order readout
calibration is uniform across axis choices.

Units: hbar = 1; the coupling strength g carries position units per unit
eigenvalue of the measured observable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonHermitianOperatorError
from .qcore import LinearOperator, StateVector, pauli_x, pauli_y, pauli_z

GAUSSIAN_KIND = "gaussian_grid"
QUBIT_KIND = "qubit"

_PAULI_BY_AXIS = {"x": pauli_x, "y": pauli_y, "z": pauli_z}
# generator axis -> (readout axis, ready axis), cyclic
_QUBIT_ROLES = {"x": ("y", "z"), "y": ("z", "x"), "z": ("x", "y")}


@dataclass(frozen=True)
class PointerModel:
    """Description of a measuring device.

    gaussian_grid kind: ``spread`` (> 0), ``n_points`` (power of two,
    >= 64) and ``half_width`` with grid spacing ``2 half_width / n_points``
    at most ``spread / 4`` and ``half_width >= 8 spread`` so the wavepacket
    is resolved and its tails are negligible.

    qubit kind: ``generator_axis`` names the Pauli playing the role of the
    translation generator.
    """

    kind: str
    spread: float | None = None
    n_points: int | None = None
    half_width: float | None = None
    generator_axis: str = "y"

    def __post_init__(self):
        if self.kind == GAUSSIAN_KIND:
            if self.spread is None or self.n_points is None or self.half_width is None:
                raise ValueError("gaussian_grid needs spread, n_points and half_width")
            if not self.spread > 0:
                raise ValueError("spread must be positive")
            n = self.n_points
            if n < 64 or n > 4096 or (n & (n - 1)) != 0:
                raise ValueError(
                    "n_points must be a power of two between 64 and 4096"
                )
            if not math.isfinite(self.spread) or not math.isfinite(self.half_width):
                raise ValueError("spread and half_width must be finite")
            if self.half_width < 8.0 * self.spread:
                raise ValueError(
                    f"half_width {self.half_width} too small for spread "
                    f"{self.spread}: need half_width >= 8 spread"
                )
            if self.grid_spacing > self.spread / 4.0:
                raise ValueError(
                    f"grid spacing {self.grid_spacing} does not resolve the "
                    f"wavepacket: need spacing <= spread / 4"
                )
        elif self.kind == QUBIT_KIND:
            if self.generator_axis not in _PAULI_BY_AXIS:
                raise ValueError(f"unknown generator axis {self.generator_axis!r}")
        else:
            raise ValueError(f"unknown pointer kind {self.kind!r}")

    @property
    def grid_spacing(self) -> float:
        if self.kind != GAUSSIAN_KIND:
            raise ValueError("grid spacing only defined for gaussian_grid pointers")
        return 2.0 * self.half_width / self.n_points

    @property
    def dim(self) -> int:
        return self.n_points if self.kind == GAUSSIAN_KIND else 2


def gaussian_pointer(
    spread: float, n_points: int = 256, half_width: float | None = None
) -> PointerModel:
    """Gaussian-grid model; default half_width 12*spread keeps the boundary
    amplitude below 1e-12."""
    if half_width is None:
        half_width = 12.0 * float(spread)
    return PointerModel(
        GAUSSIAN_KIND, spread=float(spread), n_points=int(n_points),
        half_width=float(half_width),
    )


def qubit_pointer(generator_axis: str = "y") -> PointerModel:
    return PointerModel(QUBIT_KIND, generator_axis=generator_axis)


def grid_coordinates(model: PointerModel) -> np.ndarray:
    if model.kind != GAUSSIAN_KIND:
        raise ValueError("grid coordinates only defined for gaussian_grid pointers")
    h = model.grid_spacing
    return -model.half_width + h * np.arange(model.n_points)


def initial_state(model: PointerModel) -> StateVector:
    """The ready state |m> of the device."""
    if model.kind == GAUSSIAN_KIND:
        q = grid_coordinates(model)
        amps = np.exp(-(q**2) / (4.0 * model.spread**2))
        amps /= np.linalg.norm(amps)
        return StateVector(amps)
    ready_axis = _QUBIT_ROLES[model.generator_axis][1]
    eigvals, vecs = np.linalg.eigh(_PAULI_BY_AXIS[ready_axis]().entries)
    plus = vecs[:, int(np.argmax(eigvals))]
    # fix the global phase so the first nonzero amplitude is real positive
    pivot = plus[np.argmax(np.abs(plus) > 1e-12)]
    plus = plus * (abs(pivot) / pivot)
    return StateVector(plus)


def position_operator(model: PointerModel) -> LinearOperator:
    """The readout conjugate to the generator: Q on the grid, the readout
    Pauli for the qubit."""
    if model.kind == GAUSSIAN_KIND:
        return LinearOperator(np.diag(grid_coordinates(model)), hermitian=True)
    readout_axis = _QUBIT_ROLES[model.generator_axis][0]
    return _PAULI_BY_AXIS[readout_axis]()


def translation_generator(model: PointerModel) -> LinearOperator:
    """The coupling generator P: spectral momentum on the grid, the chosen
    Pauli for the qubit."""
    if model.kind == QUBIT_KIND:
        return _PAULI_BY_AXIS[model.generator_axis]()
    n = model.n_points
    k = 2.0 * np.pi * np.fft.fftfreq(n, d=model.grid_spacing)
    dft = np.fft.fft(np.eye(n), axis=0) / np.sqrt(n)
    p = dft.conj().T @ (k[:, None] * dft)
    p = (p + p.conj().T) / 2.0
    return LinearOperator(p, hermitian=True)


def moments(state: StateVector, op: LinearOperator) -> float:
    """<psi|op|psi> / <psi|psi> for hermitian op; normalizes internally so
    conditional (unnormalized) branches are fine."""
    if not op.hermitian:
        raise NonHermitianOperatorError("moments require a hermitian operator")
    if op.dim != state.dim:
        raise ValueError("operator and state dimensions differ")
    norm_sq = float(np.vdot(state.amps, state.amps).real)
    if norm_sq < 1e-300:
        raise ValueError("cannot take moments of a zero-norm state")
    value = complex(np.vdot(state.amps, op.entries @ state.amps)) / norm_sq
    if abs(value.imag) > 1e-10:
        raise ValueError(
            f"expectation of a hermitian operator came out complex "
            f"(imaginary residue {value.imag!r})"
        )
    return float(value.real)


def variance(state: StateVector, op: LinearOperator) -> float:
    """Var(op) in the given state."""
    mean = moments(state, op)
    second = moments(state, LinearOperator(op.entries @ op.entries))
    return second - mean**2
