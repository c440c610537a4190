"""Piecewise-constant pulse evolution and simple spectroscopy probes.

A schedule is an ordered list of :class:`PulseSegment` objects, each a
constant Hamiltonian applied for a fixed duration with sudden switching
in between.  Segments may carry one exchange coupling, per-mode diagonal
detunings (energy per quantum), and decay widths entering the diagonal
as -i w.  Per-mode widths multiply the occupation, matching the
convention that each quantum in a damped mode decays independently;
per-state widths are flat.

Time convention for pulse areas: a pi transition (complete transfer of
a single quantum) corresponds to g t = pi / 2, a 2 pi transition to
g t = pi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import expm

from .hilbert import (
    BasisState,
    HilbertBasis,
    OperatorMatrix,
    collective_mode,
    enumerate_basis,
    exchange_coupling,
    photon_mode,
)

__all__ = [
    "NoDynamicsError",
    "PulseSegment",
    "segment_hamiltonian",
    "evolve_segment",
    "Trajectory",
    "run_schedule",
    "final_state",
    "rabi_frequency",
    "transmission_scan",
    "phase_vs_loss",
]


class NoDynamicsError(RuntimeError):
    """Raised when a probe finds no oscillation to measure."""


@dataclass(frozen=True)
class PulseSegment:
    """One constant-Hamiltonian slice of a pulse schedule.

    Parameters
    ----------
    duration : float
        Non-negative segment length.
    coupling : tuple (mode_a, mode_b, rate), optional
        Exchange coupling active during the segment.
    detunings : mapping label -> float
        Diagonal energy added per quantum of the mode.
    widths : mapping label -> float
        Non-negative decay width per quantum, entering as -i w n.
    state_widths : mapping occupation tuple -> float
        Flat -i w on individual basis states.
    """

    duration: float
    coupling: Optional[Tuple[str, str, float]] = None
    detunings: Mapping[str, float] = field(default_factory=dict)
    widths: Mapping[str, float] = field(default_factory=dict)
    state_widths: Mapping[BasisState, float] = field(default_factory=dict)

    def __post_init__(self):
        if not np.isfinite(self.duration) or self.duration < 0:
            raise ValueError("segment duration must be finite and non-negative")
        if self.coupling is not None:
            a, b, rate = self.coupling
            if a == b:
                raise ValueError("coupling requires two distinct mode labels")
            if not np.isfinite(rate):
                raise ValueError("coupling rate must be finite")
        for label, w in self.widths.items():
            if w < 0:
                raise ValueError(f"width for mode {label!r} must be non-negative")
        for state, w in self.state_widths.items():
            if w < 0:
                raise ValueError(f"width for state {tuple(state)} must be non-negative")
        object.__setattr__(self, "detunings", dict(self.detunings))
        object.__setattr__(self, "widths", dict(self.widths))
        object.__setattr__(
            self, "state_widths",
            {tuple(s): float(w) for s, w in self.state_widths.items()},
        )

    @property
    def lossless(self) -> bool:
        return not self.widths and not self.state_widths


def segment_hamiltonian(basis: HilbertBasis, segment: PulseSegment) -> OperatorMatrix:
    """Build the (possibly non-Hermitian) generator of one segment."""
    matrix = np.zeros((basis.dim, basis.dim), dtype=complex)
    if segment.coupling is not None:
        a, b, rate = segment.coupling
        matrix += exchange_coupling(basis, a, b, rate).matrix

    occ = basis.occupations()
    diag = np.zeros(basis.dim, dtype=complex)
    for label, shift in segment.detunings.items():
        diag += shift * occ[:, basis.mode_position(label)]
    for label, w in segment.widths.items():
        diag += -1j * w * occ[:, basis.mode_position(label)]
    for state, w in segment.state_widths.items():
        if tuple(state) not in basis:
            raise KeyError(f"state width refers to {tuple(state)}, not in basis")
        diag[basis.index(tuple(state))] += -1j * w
    matrix[np.diag_indices(basis.dim)] += diag
    return OperatorMatrix(basis, matrix, hermitian=segment.lossless)


def evolve_segment(generator: OperatorMatrix, state: np.ndarray,
                   duration: float) -> np.ndarray:
    """Apply exp(-i H t) to a state vector.

    Hermitian generators are propagated through their eigendecomposition;
    non-Hermitian ones (decay widths) go through the scaled-and-squared
    matrix exponential.
    """
    if not np.isfinite(duration) or duration < 0:
        raise ValueError("duration must be finite and non-negative")
    state = np.asarray(state, dtype=complex)
    if state.shape != (generator.basis.dim,):
        raise ValueError(
            f"state has shape {state.shape}, expected ({generator.basis.dim},)"
        )
    if not np.isfinite(state).all():
        raise ValueError("state entries must be finite")
    if duration == 0.0:
        return state.copy()
    h = generator.matrix
    if generator.hermitian or np.max(np.abs(h - h.conj().T)) <= 1e-12:
        evals, evecs = np.linalg.eigh(h)
        phases = np.exp(-1j * evals * duration)
        return evecs @ (phases * (evecs.conj().T @ state))
    return expm(-1j * h * duration) @ state


@dataclass
class Trajectory:
    """Sampled evolution of one schedule run."""

    basis: HilbertBasis
    times: np.ndarray
    states: np.ndarray  # shape (n_samples, dim)

    @property
    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.states, axis=1)

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def to_csv(self, path) -> None:
        """Write rows (time, state_index, re, im, norm)."""
        from .serialize import write_csv

        norms = self.norms
        rows = []
        for i, t in enumerate(self.times):
            for j in range(self.basis.dim):
                amp = self.states[i, j]
                rows.append([float(t), j, amp.real, amp.imag, float(norms[i])])
        write_csv(path, ["time", "state_index", "re", "im", "norm"], rows)


def _as_vector(basis: HilbertBasis, initial) -> np.ndarray:
    if isinstance(initial, (tuple, list)) and all(
        isinstance(x, (int, np.integer)) for x in initial
    ):
        return basis.state_vector(tuple(int(x) for x in initial))
    vec = np.asarray(initial, dtype=complex)
    if vec.shape != (basis.dim,):
        raise ValueError("initial state does not match the basis dimension")
    return vec


def run_schedule(schedule: Sequence[PulseSegment], basis: HilbertBasis,
                 initial, samples_per_segment: int = 32) -> Trajectory:
    """Evolve through a schedule, sampling each segment uniformly.

    Within a segment every sample is propagated directly from the
    segment start, so sampling density does not affect accuracy.
    """
    if samples_per_segment < 1:
        raise ValueError("samples_per_segment must be at least 1")
    state = _as_vector(basis, initial)
    times = [0.0]
    states = [state.copy()]
    t0 = 0.0
    for segment in schedule:
        gen = segment_hamiltonian(basis, segment)
        for j in range(1, samples_per_segment + 1):
            dt = segment.duration * j / samples_per_segment
            times.append(t0 + dt)
            states.append(evolve_segment(gen, state, dt))
        state = states[-1]
        t0 += segment.duration
    return Trajectory(basis=basis, times=np.array(times), states=np.array(states))


def final_state(schedule: Sequence[PulseSegment], basis: HilbertBasis,
                initial) -> np.ndarray:
    """Propagate through a schedule without intermediate samples."""
    state = _as_vector(basis, initial)
    for segment in schedule:
        gen = segment_hamiltonian(basis, segment)
        state = evolve_segment(gen, state, segment.duration)
    return state


# Return-probability threshold below which the state counts as having
# genuinely left the initial state (guards against counting t=0 twice).
_DIP_THRESHOLD = 1e-6


def rabi_frequency(generator: OperatorMatrix, initial,
                   horizon_cycles: int = 64) -> float:
    """Angular frequency of the return-probability oscillation.

    The survival probability P(t) = |<psi0| exp(-i H t) |psi0>|^2 is
    scanned for its first full revival; the returned frequency is
    2 pi / t_revival.  The revival time is located to better than 1e-9
    in the natural time units of the generator.

    Raises
    ------
    NoDynamicsError
        If P never leaves 1 or never returns within the scan horizon.
    """
    if not generator.hermitian:
        raise ValueError("rabi_frequency expects a Hermitian generator")
    psi0 = _as_vector(generator.basis, initial)
    nrm = np.linalg.norm(psi0)
    if nrm == 0:
        raise ValueError("initial state must be non-zero")
    psi0 = psi0 / nrm

    evals, evecs = np.linalg.eigh(generator.matrix)
    weights = np.abs(evecs.conj().T @ psi0) ** 2
    active = weights > 1e-14
    spread = float(evals[active].max() - evals[active].min()) if active.any() else 0.0
    if spread <= 0.0:
        raise NoDynamicsError("survival probability does not oscillate")

    def survival(t):
        return abs(np.sum(weights * np.exp(-1j * evals * t))) ** 2

    base_period = 2.0 * math.pi / spread
    dt = base_period / 128.0
    horizon = horizon_cycles * base_period

    from scipy.optimize import minimize_scalar

    dipped = False
    t = dt
    while t <= horizon:
        p = survival(t)
        if not dipped:
            if 1.0 - p > _DIP_THRESHOLD:
                dipped = True
        elif p > survival(t - dt) and p > survival(t + dt):
            res = minimize_scalar(
                lambda x: -survival(x), bounds=(t - dt, t + dt),
                method="bounded", options={"xatol": 1e-13 * base_period},
            )
            t_star = float(res.x)
            if 1.0 - survival(t_star) < 1e-9:
                return 2.0 * math.pi / t_star
        t += dt
    raise NoDynamicsError(
        "no revival of the survival probability within the scan horizon"
    )


def _two_state_basis():
    return enumerate_basis(
        [photon_mode("photon"), collective_mode("collective")], sector=1
    )


def transmission_scan(rate: float, durations) -> list:
    """Survival probability of one photon against a resonant medium.

    For each interaction duration tau the photon mode is coupled to a
    bosonized collective mode at rate g and the probability of finding
    the photon back in its mode is recorded; analytically this is
    cos^2(g tau), periodic with period pi / g.

    Returns a list of (duration, survival) tuples.
    """
    if rate <= 0 or not np.isfinite(rate):
        raise ValueError("coupling rate must be positive and finite")
    durations = [float(t) for t in durations]
    if any(t < 0 or not np.isfinite(t) for t in durations):
        raise ValueError("durations must be finite and non-negative")
    basis = _two_state_basis()
    gen = segment_hamiltonian(
        basis, PulseSegment(duration=0.0, coupling=("photon", "collective", rate))
    )
    photon = basis.state_vector((1, 0))
    out = []
    for tau in durations:
        amp = photon.conj() @ evolve_segment(gen, photon, tau)
        out.append((tau, float(abs(amp) ** 2)))
    return out


def phase_vs_loss(rate: float, detuning: float, width: float,
                  duration: float) -> Tuple[float, float]:
    """Accrued phase and loss of an off-resonantly coupled photon.

    A single photon is coupled at rate g to a detuned collective state
    carrying decay width w (diagonal entry detuning - i w).  Returns the
    unwrapped phase of the survival amplitude (the bare photon evolves
    with zero phase in this frame, so no reference subtraction is
    needed) and the loss 1 - |psi|^2.

    In the dispersive regime the two obey phase/loss = detuning/(2 w):
    both are inherited from the same dressed complex energy
    -g^2 / (detuning - i w), whose real and imaginary parts stand in
    exactly that ratio.
    """
    for name, val in (("rate", rate), ("detuning", detuning),
                      ("width", width), ("duration", duration)):
        if not np.isfinite(val):
            raise ValueError(f"{name} must be finite")
    if width < 0:
        raise ValueError("width must be non-negative")
    if duration < 0:
        raise ValueError("duration must be non-negative")
    if rate == 0.0 or duration == 0.0:
        return 0.0, 0.0

    basis = _two_state_basis()
    segment = PulseSegment(
        duration=duration,
        coupling=("photon", "collective", rate),
        detunings={"collective": detuning},
        widths={"collective": width},
    )
    gen = segment_hamiltonian(basis, segment)
    photon = basis.state_vector((1, 0))
    photon_idx = basis.index((1, 0))

    # Sample densely enough that the survival-amplitude phase never
    # advances by more than ~pi/4 between samples, then unwrap.
    scale = abs(detuning) + abs(width) + 2.0 * abs(rate)
    n_samples = max(64, int(math.ceil(8.0 * scale * duration / math.pi)))
    times = np.linspace(0.0, duration, n_samples + 1)

    h = gen.matrix
    evals, evecs = np.linalg.eig(h)
    coeff = np.linalg.solve(evecs, photon)
    amps = (evecs[photon_idx][None, :] * np.exp(-1j * np.outer(times, evals))) @ coeff
    phase = float(np.unwrap(np.angle(amps))[-1])

    final = evecs @ (np.exp(-1j * evals * duration) * coeff)
    loss = float(1.0 - np.linalg.norm(final) ** 2)
    return phase, loss
