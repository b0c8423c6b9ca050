"""Single-particle optical networks and the nested Mach-Zehnder preset.

A network is an ordered sequence of beam splitters, phase shifts, and
time-slice markers on a fixed set of modes (wires).  A beam splitter on
modes (a, b) with power transmissivity t applies

    [ sqrt(t)      i sqrt(1-t) ]
    [ i sqrt(1-t)  sqrt(t)     ]

(the reflected amplitude picks up a phase i; every derived number in the
test suite depends on this convention).  Slices label the occupied wires
with arm names at a given instant, which is where arm projectors, two-state
vectors, and pointer couplings live.

Weak traces follow the environment picture: every labeled arm carries a
weak coupling exp(-i g Pi_arm (x) G) to its own environment, the target
arm using the caller's pointer model and the rest minimal qubit
environments.  The trace of an arm is the norm of the post-selected
component in which *that arm's* environment has been disturbed, normalized
by |<out|in>|.  Arms with a nonzero weak value are disturbed at first
order in g; arms whose forward or backward wave vanishes can only be
recorded through a second coupling, so where such a chain exists their
record appears at second order; arms with no amplitude chain to the
post-selection at all keep an exactly undisturbed environment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DarkDetectorError, ScheduleError
from .limits import classify_order, default_g_decade, fit_order
from .pointer import (
    PointerModel,
    initial_state,
    qubit_pointer,
    translation_generator,
)
from .qcore import StateVector

#: Overlap threshold below which the post-selection detector counts as dark.
DARK_OVERLAP_TOL = 1e-12


@dataclass(frozen=True)
class BeamSplitter:
    mode_a: int
    mode_b: int
    transmissivity: float

    def __post_init__(self):
        if self.mode_a == self.mode_b:
            raise ValueError("beam splitter needs two distinct modes")
        if not 0.0 < self.transmissivity < 1.0:
            raise ValueError("transmissivity must lie strictly between 0 and 1")


@dataclass(frozen=True)
class PhaseShift:
    mode: int
    phase: float


@dataclass(frozen=True)
class TimeSlice:
    """Arm labels for the occupied wires at one instant, as (label, mode) pairs."""

    arms: tuple[tuple[str, int], ...]

    def __post_init__(self):
        labels = [label for label, _ in self.arms]
        modes = [mode for _, mode in self.arms]
        if len(set(labels)) != len(labels):
            raise ValueError("arm labels must be unique within a slice")
        if len(set(modes)) != len(modes):
            raise ValueError("arm modes must be unique within a slice")

    @property
    def arm_map(self) -> dict[str, int]:
        return dict(self.arms)


NetworkStep = BeamSplitter | PhaseShift | TimeSlice


@dataclass(frozen=True)
class OpticalNetwork:
    n_modes: int
    steps: tuple[NetworkStep, ...]
    source_mode: int
    detectors: tuple[tuple[str, int], ...]
    postselect_detector: str

    def __post_init__(self):
        if self.n_modes < 2:
            raise ValueError("networks need at least two modes")
        if not 0 <= self.source_mode < self.n_modes:
            raise ValueError("source mode out of range")
        labels = [label for label, _ in self.detectors]
        modes = [mode for _, mode in self.detectors]
        if len(set(labels)) != len(labels) or len(set(modes)) != len(modes):
            raise ValueError("detector labels and modes must be unique")
        if any(not 0 <= mode < self.n_modes for mode in modes):
            raise ValueError("detector mode out of range")
        if self.postselect_detector not in labels:
            raise ValueError(
                f"post-selection detector {self.postselect_detector!r} is not "
                f"among the detectors"
            )
        for step in self.steps:
            if isinstance(step, BeamSplitter):
                if not (0 <= step.mode_a < self.n_modes and 0 <= step.mode_b < self.n_modes):
                    raise ValueError("beam splitter mode out of range")
            elif isinstance(step, PhaseShift):
                if not 0 <= step.mode < self.n_modes:
                    raise ValueError("phase shift mode out of range")
            elif isinstance(step, TimeSlice):
                if any(not 0 <= mode < self.n_modes for _, mode in step.arms):
                    raise ValueError("slice arm mode out of range")
            else:
                raise ValueError(f"unknown network step {step!r}")

    @property
    def slices(self) -> tuple[tuple[int, TimeSlice], ...]:
        """(step position, slice) pairs in time order."""
        return tuple(
            (pos, step)
            for pos, step in enumerate(self.steps)
            if isinstance(step, TimeSlice)
        )

    @property
    def arm_labels(self) -> tuple[str, ...]:
        seen: list[str] = []
        for _, ts in self.slices:
            for label, _ in ts.arms:
                if label not in seen:
                    seen.append(label)
        return tuple(seen)

    @property
    def postselect_mode(self) -> int:
        return dict(self.detectors)[self.postselect_detector]


def _element_matrix(step: NetworkStep, n_modes: int) -> np.ndarray:
    matrix = np.eye(n_modes, dtype=np.complex128)
    if isinstance(step, BeamSplitter):
        t = math.sqrt(step.transmissivity)
        r = math.sqrt(1.0 - step.transmissivity)
        a, b = step.mode_a, step.mode_b
        matrix[a, a] = t
        matrix[b, b] = t
        matrix[a, b] = 1j * r
        matrix[b, a] = 1j * r
    elif isinstance(step, PhaseShift):
        matrix[step.mode, step.mode] = np.exp(1j * step.phase)
    return matrix


def _slice_position(net: OpticalNetwork, slice_index: int) -> int:
    slices = net.slices
    if not 0 <= slice_index < len(slices):
        raise ValueError(
            f"slice index {slice_index} out of range (network has {len(slices)})"
        )
    return slices[slice_index][0]


def _unitary_over(net: OpticalNetwork, start: int, stop: int) -> np.ndarray:
    u = np.eye(net.n_modes, dtype=np.complex128)
    for step in net.steps[start:stop]:
        if isinstance(step, TimeSlice):
            continue
        u = _element_matrix(step, net.n_modes) @ u
    return u


def propagate(net: OpticalNetwork, slice_index: int) -> StateVector:
    """Forward state: the source basis state evolved up to the slice."""
    position = _slice_position(net, slice_index)
    amps = _unitary_over(net, 0, position)[:, net.source_mode].copy()
    return StateVector(amps)


def back_propagate(net: OpticalNetwork, slice_index: int) -> StateVector:
    """Backward state: the post-selection detector propagated back to the slice."""
    position = _slice_position(net, slice_index)
    u_after = _unitary_over(net, position, len(net.steps))
    amps = u_after.conj().T[:, net.postselect_mode].copy()
    return StateVector(amps)


def network_overlap(net: OpticalNetwork) -> complex:
    """<out|in>: the post-selected amplitude of the undisturbed network."""
    u = _unitary_over(net, 0, len(net.steps))
    return complex(u[net.postselect_mode, net.source_mode])


def detection_probabilities(net: OpticalNetwork) -> dict[str, float]:
    u = _unitary_over(net, 0, len(net.steps))
    return {
        label: float(abs(u[mode, net.source_mode]) ** 2)
        for label, mode in net.detectors
    }


@dataclass(frozen=True)
class TwoStateVector:
    """Forward and backward amplitudes per arm at one slice."""

    slice_index: int
    forward: tuple[tuple[str, complex], ...]
    backward: tuple[tuple[str, complex], ...]

    def forward_amplitude(self, arm: str) -> complex:
        return dict(self.forward)[arm]

    def backward_amplitude(self, arm: str) -> complex:
        return dict(self.backward)[arm]

    @property
    def pairing(self) -> complex:
        """sum_arm conj(backward) * forward; slice-independent and equal to <out|in>."""
        back = dict(self.backward)
        return complex(
            sum(back[arm].conjugate() * amp for arm, amp in self.forward)
        )


def two_state_vector(net: OpticalNetwork, slice_index: int) -> TwoStateVector:
    position = _slice_position(net, slice_index)
    ts = net.steps[position]
    assert isinstance(ts, TimeSlice)
    forward = propagate(net, slice_index).amps
    backward = back_propagate(net, slice_index).amps
    f_pairs = tuple((label, complex(forward[mode])) for label, mode in ts.arms)
    b_pairs = tuple((label, complex(backward[mode])) for label, mode in ts.arms)
    covered = sum(b.conjugate() * f for (_, f), (_, b) in zip(f_pairs, b_pairs))
    total = complex(np.vdot(backward, forward))
    if abs(covered - total) > 1e-12 * max(1.0, abs(total)):
        raise ValueError(
            f"slice {slice_index} arms do not cover the occupied modes: "
            f"arm pairing {covered} vs full pairing {total}"
        )
    return TwoStateVector(slice_index, f_pairs, b_pairs)


def arm_slice_index(net: OpticalNetwork, arm: str) -> int:
    for index, (_, ts) in enumerate(net.slices):
        if arm in ts.arm_map:
            return index
    raise ValueError(f"arm {arm!r} is not labeled in any slice")


def _checked_overlap(net: OpticalNetwork) -> complex:
    overlap = network_overlap(net)
    if abs(overlap) <= DARK_OVERLAP_TOL:
        raise DarkDetectorError(
            f"post-selection detector {net.postselect_detector!r} is dark: "
            f"|<out|in>| = {abs(overlap):.3e}"
        )
    return overlap


def arm_weak_value(net: OpticalNetwork, arm: str) -> complex:
    """(Pi_arm)_w = conj(backward) * forward / <out|in> at the arm's slice."""
    overlap = _checked_overlap(net)
    tsv = two_state_vector(net, arm_slice_index(net, arm))
    return complex(
        tsv.backward_amplitude(arm).conjugate() * tsv.forward_amplitude(arm) / overlap
    )


def slice_weak_values(net: OpticalNetwork, slice_index: int) -> dict[str, complex]:
    """All arm weak values of one slice; they sum to 1."""
    overlap = _checked_overlap(net)
    tsv = two_state_vector(net, slice_index)
    back = dict(tsv.backward)
    return {
        arm: complex(back[arm].conjugate() * f / overlap) for arm, f in tsv.forward
    }


# ---------------------------------------------------------------------------
# The nested Mach-Zehnder preset.

def build_nested_mzi(
    input_transmissivity: float = 1.0 / 3.0,
    output_transmissivity: float = 1.0 / 3.0,
    phase_a: float = 0.0,
    phase_d: float = 0.0,
    phase_e: float = 0.0,
) -> OpticalNetwork:
    """Nested interferometer on four wires.

    Wire 0 holds the outer arm A from the first splitter to the final one;
    wire 1 carries D into the inner interferometer, B inside it, and E out
    of it; wire 2 carries C inside the inner interferometer and feeds
    detector D3 afterwards; wire 3 is never touched and carries the
    unoccupied probe arm X.  Both inner splitters are balanced: with the
    i-reflection convention two balanced splitters in sequence form an
    exact crossover, which is precisely the tuning that makes the inner
    output toward the recombination (arm E) dark.  Detector D1 on wire 0
    is the post-selection.

    The optional phases sit on arms A, D, and E; they change the preset's
    weak values but never the dark ports, which is what the randomized
    presence tests rely on.
    """
    steps: list[NetworkStep] = [TimeSlice((("SRC", 0),))]
    steps.append(BeamSplitter(0, 1, input_transmissivity))
    if phase_a:
        steps.append(PhaseShift(0, phase_a))
    if phase_d:
        steps.append(PhaseShift(1, phase_d))
    steps.append(TimeSlice((("A", 0), ("D", 1))))
    steps.append(BeamSplitter(1, 2, 0.5))
    steps.append(TimeSlice((("A", 0), ("B", 1), ("C", 2), ("X", 3))))
    steps.append(BeamSplitter(1, 2, 0.5))
    if phase_e:
        steps.append(PhaseShift(1, phase_e))
    steps.append(TimeSlice((("A", 0), ("E", 1))))
    steps.append(BeamSplitter(0, 1, output_transmissivity))
    return OpticalNetwork(
        n_modes=4,
        steps=tuple(steps),
        source_mode=0,
        detectors=(("D1", 0), ("D2", 1), ("D3", 2)),
        postselect_detector="D1",
    )


# ---------------------------------------------------------------------------
# Weak traces via per-arm environments.

class _TraceSetup:
    """Prepared tensor machinery for weak traces on one network.

    Environment axes are ordered by each arm's first slice appearance.
    The target arm uses the caller's pointer model, every other arm a
    minimal qubit environment.
    """

    def __init__(self, net: OpticalNetwork, target_arm: str, model: PointerModel):
        self.net = net
        self.target_arm = target_arm
        couplings: list[tuple[str, int, int]] = []  # (arm, step position, mode)
        seen: set[str] = set()
        for position, ts in net.slices:
            for label, mode in ts.arms:
                if label not in seen:
                    seen.add(label)
                    couplings.append((label, position, mode))
        if target_arm not in seen:
            raise ValueError(f"arm {target_arm!r} is not labeled in any slice")
        self.couplings = couplings
        self.target_axis = next(
            i for i, (label, _, _) in enumerate(couplings) if label == target_arm
        )
        qubit = qubit_pointer()
        self.ready: list[np.ndarray] = []
        self._eigs: list[tuple[np.ndarray, np.ndarray]] = []
        for label, _, _ in couplings:
            arm_model = model if label == target_arm else qubit
            self.ready.append(initial_state(arm_model).amps)
            generator = translation_generator(arm_model).entries
            self._eigs.append(np.linalg.eigh(generator))
        self.env_dims = tuple(r.size for r in self.ready)

    def _coupling_matrix(self, axis: int, g: float) -> np.ndarray:
        eigvals, vecs = self._eigs[axis]
        return (vecs * np.exp(-1j * g * eigvals)) @ vecs.conj().T

    def conditional_environment(self, g: float) -> np.ndarray:
        """Post-selected joint environment state, shape env_dims (unnormalized)."""
        net = self.net
        shape = (net.n_modes,) + self.env_dims
        state = np.zeros(shape, dtype=np.complex128)
        ready_product = self.ready[0]
        for r in self.ready[1:]:
            ready_product = np.multiply.outer(ready_product, r)
        state[net.source_mode] = ready_product

        by_position: dict[int, list[int]] = {}
        for axis, (_, position, _) in enumerate(self.couplings):
            by_position.setdefault(position, []).append(axis)

        for position, step in enumerate(net.steps):
            if isinstance(step, BeamSplitter):
                t = math.sqrt(step.transmissivity)
                r = math.sqrt(1.0 - step.transmissivity)
                a, b = step.mode_a, step.mode_b
                upper = t * state[a] + 1j * r * state[b]
                lower = 1j * r * state[a] + t * state[b]
                state[a], state[b] = upper, lower
            elif isinstance(step, PhaseShift):
                state[step.mode] = state[step.mode] * np.exp(1j * step.phase)
            else:
                for axis in by_position.get(position, ()):
                    mode = self.couplings[axis][2]
                    u = self._coupling_matrix(axis, g)
                    block = np.moveaxis(state[mode], axis, 0)
                    original = block.shape
                    block = u @ block.reshape(original[0], -1)
                    state[mode] = np.moveaxis(block.reshape(original), 0, axis)
        return state[net.postselect_mode]


def weak_trace(net: OpticalNetwork, arm: str, model: PointerModel, g: float) -> float:
    """Disturbance the arm's environment retains after post-selection.

    Norm of the conditional component orthogonal to the arm's ready state,
    normalized by |<out|in>|.  Zero at g = 0 and exactly zero at every g
    for arms with no amplitude chain through them.
    """
    setup = _TraceSetup(net, arm, model)
    return _trace_from_setup(setup, _checked_overlap(net), float(g))


def _trace_from_setup(setup: _TraceSetup, overlap: complex, g: float) -> float:
    if g == 0.0:
        return 0.0
    conditional = setup.conditional_environment(g)
    probability = float(np.vdot(conditional, conditional).real)
    if probability < 1e-300:
        raise DarkDetectorError(
            f"post-selection detector dark after coupling at g = {g!r}"
        )
    block = np.moveaxis(conditional, setup.target_axis, 0)
    flat = block.reshape(block.shape[0], -1)
    ready = setup.ready[setup.target_axis]
    disturbed = flat - np.outer(ready, ready.conj() @ flat)
    return float(np.linalg.norm(disturbed) / abs(overlap))


def weak_trace_sweep(
    net: OpticalNetwork,
    arm: str,
    model: PointerModel,
    g_values: Sequence[float],
) -> tuple[float, ...]:
    overlap = _checked_overlap(net)
    setup = _TraceSetup(net, arm, model)
    return tuple(_trace_from_setup(setup, overlap, float(g)) for g in g_values)


@dataclass(frozen=True)
class ArmPresence:
    leading_order: float
    classification: str  # "primary" | "secondary" | "none"


@dataclass(frozen=True)
class PresenceReport:
    entries: tuple[tuple[str, ArmPresence], ...]

    def classification(self, arm: str) -> str:
        return dict(self.entries)[arm].classification

    def leading_order(self, arm: str) -> float:
        return dict(self.entries)[arm].leading_order

    def as_dict(self) -> dict[str, ArmPresence]:
        return dict(self.entries)


_PRESENCE_BY_ORDER = {"first": "primary", "second": "secondary", "none": "none"}


def classify_presence(
    net: OpticalNetwork,
    arms: Iterable[str] | None = None,
    model: PointerModel | None = None,
    g_schedule: Sequence[float] | None = None,
) -> PresenceReport:
    """Classify arms by the leading order of their weak trace in g.

    First order means primary presence, second order secondary presence,
    and an all-floor trace means no presence at all.  Schedule points where
    the coupling itself darkens the detector are excluded from the fit and
    only fatal when fewer than four points survive.
    """
    if arms is None:
        arms = sorted(net.arm_labels)
    if model is None:
        model = qubit_pointer()
    if g_schedule is None:
        g_schedule = default_g_decade()
    schedule = tuple(float(g) for g in g_schedule)
    if len(schedule) < 4:
        raise ScheduleError("presence classification needs at least 4 points")
    if math.log10(schedule[0] / schedule[-1]) < 1.0 - 1e-9:
        raise ScheduleError("presence schedule must span at least one decade")
    overlap = _checked_overlap(net)

    entries = []
    for arm in arms:
        setup = _TraceSetup(net, arm, model)
        usable_g: list[float] = []
        usable_v: list[float] = []
        dark_error: DarkDetectorError | None = None
        for g in schedule:
            try:
                value = _trace_from_setup(setup, overlap, g)
            except DarkDetectorError as err:
                dark_error = err
                continue
            usable_g.append(g)
            usable_v.append(value)
        if len(usable_g) < 4:
            raise dark_error or DarkDetectorError(
                f"fewer than 4 usable trace points for arm {arm!r}"
            )
        order, _, _ = fit_order(usable_g, usable_v)
        classification = _PRESENCE_BY_ORDER[classify_order(order, f"arm {arm!r}")]
        entries.append((arm, ArmPresence(order, classification)))
    return PresenceReport(tuple(entries))
