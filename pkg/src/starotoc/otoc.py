"""OTOC functionals for the star-topology register.

Dynamics run in the dimensionless convention: the Hamiltonian is built with
``J = 1`` and every time is a value of ``Jt``.  ``J`` itself only matters when
converting laboratory times (e.g. a T2* in milliseconds) to that scale.

For unitary and constant-time modes the MQC overlap never forms a full state.
The deviation state lives on ``2 * 2**N2`` basis states, so only that block of
the propagator is needed and each time point costs ``O(s^2 D)`` instead of
``O(D^3)``.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import mqc
from .evolution import (
    DecoherenceParams,
    EvolutionMode,
    Propagator,
    ctp_schedule,
    evolve,
)
from .spin_algebra import PAULI, collective_sum, embed_pauli, is_unitary, overlap_trace
from .topology import HamiltonianParams, TopologySpec, build_hamiltonian

IMAG_TOLERANCE = 1e-9


@dataclass
class OtocSeries:
    t_grid: np.ndarray
    values: np.ndarray
    imag: np.ndarray = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t_grid = np.asarray(self.t_grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.imag is None:
            self.imag = np.zeros_like(self.values)
        if self.t_grid.shape != self.values.shape:
            raise ValueError("t_grid and values must have the same length")

    @property
    def max_imag(self) -> float:
        return float(np.max(np.abs(self.imag), initial=0.0))


def _trace_product(a: np.ndarray, b: np.ndarray) -> complex:
    return complex(np.sum(a * b.T))


def heisenberg(B0: np.ndarray, H: np.ndarray, t: float) -> np.ndarray:
    """``U^dag(t) B0 U(t)``."""
    U = Propagator(H)(t)
    return U.conj().T @ B0 @ U


def otoc_general(
    A: np.ndarray, B0: np.ndarray, H: np.ndarray, t: float, state: np.ndarray | None = None
) -> complex:
    """``Tr[B^dag(t) A^dag B(t) A w]``.

    ``w`` is ``state`` (zero-temperature limit) or ``I / 2**N`` when ``state``
    is None (infinite-temperature limit).
    """
    if not (A.shape == B0.shape == H.shape):
        raise ValueError(f"shapes {A.shape}, {B0.shape}, {H.shape} are not conformable")
    B = heisenberg(B0, H, t)
    product = B.conj().T @ A.conj().T @ B @ A
    if state is None:
        return complex(np.trace(product)) / A.shape[0]
    if state.shape != A.shape:
        raise ValueError(f"state shape {state.shape} does not match operators {A.shape}")
    return _trace_product(product, state)


def otoc_commutator_form(A: np.ndarray, B0: np.ndarray, H: np.ndarray, t: float) -> float:
    """``1 - <C^dag C>/2`` with ``C = [A, B(t)]`` at infinite temperature."""
    if not (is_unitary(A) and is_unitary(B0)):
        raise ValueError("commutator form requires unitary A and B")
    B = heisenberg(B0, H, t)
    C = A @ B - B @ A
    norm = _trace_product(C.conj().T, C).real / A.shape[0]
    return 1.0 - 0.5 * norm


# -- MQC OTOC ---------------------------------------------------------------


@functools.lru_cache(maxsize=4)
def _propagator(topology: TopologySpec, g: float, central_field_once: bool, decouple_hf: bool):
    params = HamiltonianParams(J=1.0, g=g, central_field_once=central_field_once)
    return Propagator(build_hamiltonian(topology, params, decouple_hf=decouple_hf))


def dimensionless_hamiltonian(
    topology: TopologySpec, params: HamiltonianParams, decouple_hf: bool = False
) -> np.ndarray:
    return build_hamiltonian(topology, replace(params, J=1.0), decouple_hf=decouple_hf)


def propagator_for(topology: TopologySpec, params: HamiltonianParams, decouple_hf: bool = False):
    """Cached eigendecomposition of the ``J = 1`` Hamiltonian."""
    return _propagator(topology, float(params.g), params.central_field_once, decouple_hf)


def _grid(t_grid) -> np.ndarray:
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0 or t[0] != 0 or np.any(np.diff(t) < 0):
        raise ValueError("t_grid must be a non-empty ascending sequence starting at 0")
    return t


def _phase_sequence(prop: Propagator, t: np.ndarray, mode: EvolutionMode, total_time):
    if mode is EvolutionMode.CTP:
        return [prop.ctp_phases(ctp_schedule(tk, total_time)) for tk in t]
    return [prop.phases(tk) for tk in t]


def _ctp_total(t: np.ndarray, mode: EvolutionMode, total_time):
    if mode is EvolutionMode.CTP and total_time is None:
        return float(t[-1])
    return total_time


def _metadata(topology, params, mode, **extra) -> dict:
    meta = {
        "K": topology.K,
        "h_per_branch": topology.h_per_branch,
        "f_per_branch": topology.f_per_branch,
        "J": params.J,
        "g": params.g,
        "central_field_once": params.central_field_once,
        "mode": EvolutionMode(mode).value,
    }
    meta.update(extra)
    return meta


def otoc_mqc(
    topology: TopologySpec,
    params: HamiltonianParams,
    n: int,
    t_grid: Sequence[float],
    mode: EvolutionMode | str = EvolutionMode.UNITARY_ONLY,
    decoherence: DecoherenceParams | None = None,
    total_time: float | None = None,
    placement=None,
    ctp_attenuate: bool = False,
    monitor=None,
) -> OtocSeries:
    """Normalized overlap ``Tr[rho(t) rho_x] / Tr[rho_x^2]`` for the order-q deviation state.

    ``t_grid`` is in units of 1/J.  In ``ctp`` mode ``total_time`` defaults to
    the last grid time; ``ctp_attenuate`` multiplies the series by the
    dephasing-only overlap at ``T`` (a t-independent factor) for comparison
    with measured curves.
    """
    mode = EvolutionMode(mode)
    t = _grid(t_grid)
    total_time = _ctp_total(t, mode, total_time)
    rho_x = mqc.prepare_deviation(topology, n, placement)
    purity = mqc.deviation_purity(topology)

    if mode.dephasing:
        if decoherence is None:
            raise ValueError(f"mode {mode.value} requires decoherence parameters")
        H = dimensionless_hamiltonian(
            topology, params, decouple_hf=mode is EvolutionMode.DECOHERENCE_ONLY
        )
        raw = np.array(
            [overlap_trace(rho, rho_x) for rho in evolve(rho_x, H, t, mode, decoherence, monitor=monitor)]
        )
    else:
        prop = propagator_for(topology, params)
        support = mqc.deviation_support(topology, n, placement)
        rho_s = rho_x[np.ix_(support, support)]
        raw = np.empty(t.size, dtype=complex)
        for k, ph in enumerate(_phase_sequence(prop, t, mode, total_time)):
            U = prop.from_phases(ph, support, support)
            raw[k] = _trace_product(U @ rho_s @ U.conj().T, rho_s)

    values = raw / purity
    extra = {"n": n, "q": mqc.coherence_order(topology.n1, n), "label": "mqc"}
    if mode is EvolutionMode.CTP:
        extra["total_time"] = total_time
        if ctp_attenuate:
            if decoherence is None:
                raise ValueError("ctp_attenuate requires decoherence parameters")
            tail = otoc_mqc(
                topology, params, n, [0.0, total_time], EvolutionMode.DECOHERENCE_ONLY,
                decoherence, placement=placement,
            )
            values = values * tail.values[-1]
            extra["ctp_attenuation"] = float(tail.values[-1])
    if decoherence is not None and mode.dephasing:
        extra.update(t2_star=decoherence.t2_star, dt=decoherence.dt)
    series = OtocSeries(t, values.real, values.imag, _metadata(topology, params, mode, **extra))
    if series.max_imag > IMAG_TOLERANCE:
        raise FloatingPointError(f"OTOC imaginary residue {series.max_imag:.3g} exceeds {IMAG_TOLERANCE}")
    return series


def readout_observable(topology: TopologySpec, n: int, placement=None) -> np.ndarray:
    """``U_c (sigma_x^P (x) |xi_n><xi_n| (x) I^F) U_c^dag``: the measured central-spin signal."""
    xi = mqc.xi_state(topology.n1, n, placement)
    M = np.kron(np.kron(PAULI["x"], np.outer(xi, xi.conj())), np.eye(2**topology.n2))
    Uc = mqc.collective_cnot(topology)
    # Uc is a permutation matrix, so conjugation is a relabelling of rows and columns
    target = np.argmax(np.abs(Uc), axis=0)
    O = np.zeros_like(M)
    O[np.ix_(target, target)] = M
    return O


def nmr_signal_series(
    topology: TopologySpec,
    params: HamiltonianParams,
    n: int,
    t_grid: Sequence[float],
    mode: EvolutionMode | str = EvolutionMode.UNITARY_ONLY,
    decoherence: DecoherenceParams | None = None,
    total_time: float | None = None,
    placement=None,
) -> OtocSeries:
    """Central-spin readout after the second CNOT, normalized like :func:`otoc_mqc`."""
    mode = EvolutionMode(mode)
    t = _grid(t_grid)
    total_time = _ctp_total(t, mode, total_time)
    rho_x = mqc.prepare_deviation(topology, n, placement)
    O = readout_observable(topology, n, placement)
    purity = mqc.deviation_purity(topology)

    if mode.dephasing:
        if decoherence is None:
            raise ValueError(f"mode {mode.value} requires decoherence parameters")
        H = dimensionless_hamiltonian(
            topology, params, decouple_hf=mode is EvolutionMode.DECOHERENCE_ONLY
        )
        raw = np.array([overlap_trace(O, rho) for rho in evolve(rho_x, H, t, mode, decoherence)])
    else:
        prop = propagator_for(topology, params)
        src = np.flatnonzero(np.any(rho_x != 0, axis=1))
        dst = np.flatnonzero(np.any(O != 0, axis=1))
        rho_s = rho_x[np.ix_(src, src)]
        O_d = O[np.ix_(dst, dst)]
        raw = np.empty(t.size, dtype=complex)
        for k, ph in enumerate(_phase_sequence(prop, t, mode, total_time)):
            U = prop.from_phases(ph, dst, src)
            raw[k] = _trace_product(O_d, U @ rho_s @ U.conj().T)

    # rho_x equals O / 2**N2, so this matches the overlap normalization
    values = raw / (purity * 2**topology.n2)
    meta = _metadata(topology, params, mode, n=n, q=mqc.coherence_order(topology.n1, n), label="nmr_signal")
    return OtocSeries(t, values.real, values.imag, meta)


def nmr_signal(
    topology: TopologySpec,
    params: HamiltonianParams,
    n: int,
    t: float,
    mode: EvolutionMode | str = EvolutionMode.UNITARY_ONLY,
    **kwargs,
) -> float:
    grid = [0.0] if t == 0 else [0.0, t]
    return float(nmr_signal_series(topology, params, n, grid, mode, **kwargs).values[-1])


# -- layer scrambling --------------------------------------------------------


def layer_scrambling_otoc(
    topology: TopologySpec, params: HamiltonianParams, t_grid: Sequence[float]
) -> OtocSeries:
    """OTOC between ``sigma_y`` on the central spin and the collective layer-2 ``S_y``.

    Normalized by the ``t = 0`` value ``N2 * 2**N``.
    """
    if topology.n2 == 0:
        raise ValueError("layer scrambling needs a non-empty second layer")
    t = _grid(t_grid)
    n = topology.n_qubits
    prop = propagator_for(topology, params)
    S = collective_sum("y", topology.layer2_sites(), n)
    half = topology.dim // 2
    if prop.diagonal:
        S_eig = S
    else:
        V = prop.vectors
        S_eig = V.conj().T @ S @ V
    raw = np.empty(t.size, dtype=complex)
    for k, tk in enumerate(t):
        ph = prop.phases(tk)
        B = (ph.conj()[:, None] * S_eig) * ph[None, :]
        if not prop.diagonal:
            B = V @ B @ V.conj().T
        # sigma_y on the leading qubit: Tr[B A B A] in 2x2 block form
        b00, b01 = B[:half, :half], B[:half, half:]
        b10, b11 = B[half:, :half], B[half:, half:]
        raw[k] = 2 * _trace_product(b00, b11) - _trace_product(b01, b01) - _trace_product(b10, b10)
    values = raw / (topology.n2 * topology.dim)
    meta = _metadata(topology, params, EvolutionMode.UNITARY_ONLY, label="layer_scrambling")
    return OtocSeries(t, values.real, values.imag, meta)


def layer_scrambling_reference(topology: TopologySpec, params: HamiltonianParams, t: float) -> float:
    """Direct full-matrix evaluation at one time; used for cross-checks on small registers."""
    n = topology.n_qubits
    A = embed_pauli("y", 0, n)
    S = collective_sum("y", topology.layer2_sites(), n)
    H = dimensionless_hamiltonian(topology, params)
    B = heisenberg(S, H, t)
    val = np.trace(B.conj().T @ A.conj().T @ B @ A).real
    return float(val / (topology.n2 * topology.dim))


# -- high-temperature expansion ------------------------------------------------


def mixed_state_otoc(B: np.ndarray, rho: np.ndarray) -> float:
    """``Re Tr[B^dag rho^dag B rho rho]``: the OTOC with ``A = rho`` averaged over ``rho``."""
    return float(np.trace(B.conj().T @ rho.conj().T @ B @ rho @ rho).real)


def expansion_terms(B: np.ndarray, rho_delta: np.ndarray, eps: float) -> dict:
    """The six terms of the ``I/2 + eps*rho_delta`` expansion, evaluated exactly."""
    I = np.eye(2)
    Bd = B.conj().T
    r = rho_delta
    tr = lambda m: float(np.trace(m).real)  # noqa: E731
    return {
        "constant": tr(Bd @ B) / 8,
        "linear_right": eps / 2 * tr(Bd @ B @ r),
        "quadratic_right": eps**2 / 2 * tr(Bd @ B @ r @ r),
        "linear_left": eps / 4 * tr(Bd @ r @ B @ I),
        "kernel": eps**2 * tr(Bd @ r @ B @ r),
        "cubic": eps**3 * tr(Bd @ r @ B @ r @ r),
    }


def mixed_expansion_check(
    B0: np.ndarray, H: np.ndarray, t: float, rho_delta: np.ndarray, eps: float
) -> float:
    """Residual of the truncated high-temperature OTOC expansion for one qubit.

    Compares the exact OTOC of ``rho = I/2 + eps*rho_delta`` with
    ``1/4 + (eps^2/2) Tr[rho_delta^2] + eps^2 Re Tr[B^dag rho_delta B rho_delta]``;
    the dropped terms are ``O(eps^3)``.
    """
    if B0.shape != (2, 2) or rho_delta.shape != (2, 2) or H.shape != (2, 2):
        raise ValueError("the expansion check is defined for a single qubit")
    if not is_unitary(B0):
        raise ValueError("B0 must be unitary")
    if abs(np.trace(rho_delta)) > 1e-12:
        raise ValueError("rho_delta must be traceless")
    B = heisenberg(B0, H, t)
    rho = np.eye(2) / 2 + eps * rho_delta
    exact = mixed_state_otoc(B, rho)
    truncated = (
        0.25
        + eps**2 / 2 * float(np.trace(rho_delta @ rho_delta).real)
        + eps**2 * float(np.trace(B.conj().T @ rho_delta @ B @ rho_delta).real)
    )
    return abs(exact - truncated)
