"""Unitary, constant-time and dephasing evolution engines.

The evolution functions are unit-agnostic: ``H``, times, ``gamma`` and ``dt``
just have to be expressed in mutually consistent units.  The OTOC layer uses
the dimensionless convention ``J = 1`` so every time is a value of ``Jt``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np

from .spin_algebra import hamming_distances, is_hermitian


class EvolutionMode(str, enum.Enum):
    UNITARY_ONLY = "unitary_only"
    DECOHERENCE_ONLY = "decoherence_only"
    UNITARY_PLUS_DECOHERENCE = "unitary_plus_decoherence"
    CTP = "ctp"

    @property
    def dephasing(self) -> bool:
        return self in (EvolutionMode.DECOHERENCE_ONLY, EvolutionMode.UNITARY_PLUS_DECOHERENCE)


@dataclass(frozen=True)
class DecoherenceParams:
    """Single-qubit dephasing, with times in units of 1/J."""

    t2_star: float
    dt: float = 0.005

    def __post_init__(self):
        if not self.t2_star > 0:
            raise ValueError(f"t2_star must be positive, got {self.t2_star}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")

    @property
    def gamma(self) -> float:
        return 1.0 / (2.0 * self.t2_star)


@dataclass(frozen=True)
class CtpSchedule:
    total: float
    net: float
    backward: float
    forward: float


def ctp_schedule(t: float, T: float) -> CtpSchedule:
    """Split a net evolution ``t`` into backward and forward legs of fixed total ``T``."""
    if t < 0 or T < 0:
        raise ValueError(f"CTP times must be non-negative, got t={t}, T={T}")
    if t > T:
        raise ValueError(f"net time t={t} exceeds total time T={T}")
    return CtpSchedule(total=T, net=t, backward=(T - t) / 2, forward=(T + t) / 2)


class Propagator:
    """Eigendecomposition of a Hermitian ``H``, reused for ``U(t) = exp(-iHt)`` at any t.

    A diagonal ``H`` skips the eigensolve; a real symmetric one uses the real solver.
    """

    def __init__(self, H: np.ndarray, atol: float = 1e-10):
        H = np.asarray(H)
        if H.ndim != 2 or H.shape[0] != H.shape[1]:
            raise ValueError(f"Hamiltonian must be square, got shape {H.shape}")
        if not is_hermitian(H, atol):
            raise ValueError("Hamiltonian is not Hermitian")
        self.dim = H.shape[0]
        off = H - np.diag(np.diag(H))
        self.diagonal = not np.any(off)
        if self.diagonal:
            self.energies = np.diag(H).real.copy()
            self.vectors = None
        elif not np.any(H.imag):
            self.energies, self.vectors = np.linalg.eigh(H.real)
        else:
            self.energies, self.vectors = np.linalg.eigh(H)

    def phases(self, t: float) -> np.ndarray:
        return np.exp(-1j * self.energies * t)

    def ctp_phases(self, schedule: CtpSchedule) -> np.ndarray:
        """Eigenphases of ``U^dag(backward) U(forward)``."""
        return np.conj(self.phases(schedule.backward)) * self.phases(schedule.forward)

    def from_phases(self, phases: np.ndarray, rows=None, cols=None) -> np.ndarray:
        """Matrix with the given eigenphases, optionally restricted to a row/column block."""
        rows = np.arange(self.dim) if rows is None else np.asarray(rows)
        cols = np.arange(self.dim) if cols is None else np.asarray(cols)
        if self.diagonal:
            return (rows[:, None] == cols[None, :]) * phases[rows][:, None]
        vr = self.vectors[rows]
        vc = self.vectors[cols]
        return (vr * phases) @ vc.conj().T

    def __call__(self, t: float) -> np.ndarray:
        return self.from_phases(self.phases(t))

    def block(self, rows, cols, t: float) -> np.ndarray:
        return self.from_phases(self.phases(t), rows, cols)


def propagator(H: np.ndarray, t: float) -> np.ndarray:
    return Propagator(H)(t)


def ctp_propagator(H: np.ndarray, t: float, T: float) -> np.ndarray:
    prop = Propagator(H)
    return prop.from_phases(prop.ctp_phases(ctp_schedule(t, T)))


def dephasing_mask(n_qubits: int, gamma: float, dt: float) -> np.ndarray:
    """Entrywise action of one averaged phase-jump step on a density matrix.

    Summing the sigma_z jump branches and the no-jump branch multiplies the
    ``(a, b)`` element by ``1 - 2 gamma dt d(a, b)`` with ``d`` the Hamming distance.
    """
    _check_step(n_qubits, gamma, dt, limit=1.0)
    return 1.0 - 2.0 * gamma * dt * hamming_distances(n_qubits)


def _check_step(n_qubits: int, gamma: float, dt: float, limit: float) -> None:
    if gamma < 0 or dt <= 0:
        raise ValueError(f"need gamma >= 0 and dt > 0, got gamma={gamma}, dt={dt}")
    if gamma * n_qubits * dt > limit:
        raise ValueError(
            f"step too large: gamma*N*dt = {gamma * n_qubits * dt:.4g} exceeds {limit}"
        )


def lindblad_step(
    rho: np.ndarray,
    H: np.ndarray,
    dt: float,
    gamma: float,
    U: np.ndarray | None = None,
    mask: np.ndarray | None = None,
) -> np.ndarray:
    """One first-order dephasing update after a unitary step of length ``dt``.

    ``U`` and ``mask`` may be passed in to reuse them across steps.
    """
    n_qubits = int(round(math.log2(rho.shape[0])))
    if U is None:
        U = propagator(H, dt)
    if mask is None:
        mask = dephasing_mask(n_qubits, gamma, dt)
    else:
        _check_step(n_qubits, gamma, dt, limit=1.0)
    return mask * (U @ rho @ U.conj().T)


class LindbladMonitor:
    """Tracks trace drift and Hermiticity across a dephasing trajectory."""

    def __init__(self):
        self.steps = 0
        self.max_step_trace_drift = 0.0
        self.max_hermiticity = 0.0
        self.initial_trace = None
        self.cumulative_trace_drift = 0.0

    def __call__(self, before: np.ndarray, after: np.ndarray) -> None:
        tr_before = np.trace(before)
        tr_after = np.trace(after)
        if self.initial_trace is None:
            self.initial_trace = tr_before
        self.steps += 1
        self.max_step_trace_drift = max(self.max_step_trace_drift, abs(tr_after - tr_before))
        self.cumulative_trace_drift = max(
            self.cumulative_trace_drift, abs(tr_after - self.initial_trace)
        )
        self.max_hermiticity = max(self.max_hermiticity, float(np.max(np.abs(after - after.conj().T))))

    def as_dict(self) -> dict:
        return {
            "steps": self.steps,
            "max_step_trace_drift": float(self.max_step_trace_drift),
            "cumulative_trace_drift": float(self.cumulative_trace_drift),
            "max_hermiticity_residual": float(self.max_hermiticity),
        }


def _check_grid(t_grid: Sequence[float]) -> np.ndarray:
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise ValueError("time grid must be a non-empty 1-d sequence")
    if t[0] != 0 or np.any(np.diff(t) < 0):
        raise ValueError("time grid must start at 0 and be sorted ascending")
    return t


def step_plan(t_grid: Sequence[float], dt: float) -> list[tuple[int, float]]:
    """(number of steps, step length) per grid interval, landing exactly on each grid time."""
    plan = []
    for span in np.diff(_check_grid(t_grid)):
        if span == 0:
            plan.append((0, dt))
            continue
        steps = max(1, math.ceil(span / dt - 1e-9))
        plan.append((steps, span / steps))
    return plan


def lindblad_trajectory(
    rho0: np.ndarray,
    H: np.ndarray,
    t_grid: Sequence[float],
    gamma: float,
    dt: float,
    monitor: Callable[[np.ndarray, np.ndarray], None] | None = None,
    max_rate_step: float = 0.1,
) -> Iterator[np.ndarray]:
    """Yield the dephased state at each grid time.

    A diagonal ``H`` collapses each step to an entrywise product.
    """
    n_qubits = int(round(math.log2(rho0.shape[0])))
    _check_step(n_qubits, gamma, dt, limit=max_rate_step)
    prop = Propagator(H)
    hamming = hamming_distances(n_qubits)
    rho = np.array(rho0, dtype=np.complex128)
    yield rho.copy()
    cache: dict[float, tuple] = {}
    for steps, h in step_plan(t_grid, dt):
        if h not in cache:
            mask = 1.0 - 2.0 * gamma * h * hamming
            if prop.diagonal:
                ph = prop.phases(h)
                cache[h] = (mask * np.outer(ph, ph.conj()), None)
            else:
                cache[h] = (mask, prop(h))
        factor, U = cache[h]
        for _ in range(steps):
            new = factor * rho if U is None else factor * (U @ rho @ U.conj().T)
            if monitor is not None:
                monitor(rho, new)
            rho = new
        yield rho.copy()


def evolve(
    rho0: np.ndarray,
    H: np.ndarray,
    t_grid: Sequence[float],
    mode: EvolutionMode | str,
    decoherence: DecoherenceParams | None = None,
    total_time: float | None = None,
    monitor: Callable[[np.ndarray, np.ndarray], None] | None = None,
) -> Iterator[np.ndarray]:
    """Yield state snapshots on ``t_grid`` under one of the evolution modes.

    For ``decoherence_only`` the caller supplies the Hamiltonian with the
    layer1-layer2 couplings already removed (see
    :func:`starotoc.topology.build_hamiltonian` with ``decouple_hf``).  In
    ``ctp`` mode each grid point ``t`` is reached as a backward leg of
    ``(T - t)/2`` after a forward leg of ``(T + t)/2``; dephasing is the same
    for every point and is not simulated.
    """
    mode = EvolutionMode(mode)
    t = _check_grid(t_grid)
    if mode.dephasing:
        if decoherence is None:
            raise ValueError(f"mode {mode.value} requires decoherence parameters")
        yield from lindblad_trajectory(
            rho0, H, t, gamma=decoherence.gamma, dt=decoherence.dt, monitor=monitor
        )
        return
    prop = Propagator(H)
    if mode is EvolutionMode.CTP:
        if total_time is None:
            raise ValueError("ctp mode requires a total time T")
        phase_list = (prop.ctp_phases(ctp_schedule(tk, total_time)) for tk in t)
    else:
        phase_list = (prop.phases(tk) for tk in t)
    for ph in phase_list:
        U = prop.from_phases(ph)
        yield U @ rho0 @ U.conj().T
