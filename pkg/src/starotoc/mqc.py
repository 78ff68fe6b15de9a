"""Combination multiple-quantum coherences between the central spin and layer 1.

States are built the way the experiment builds them: the central spin in
``|+>`` or ``|->``, layer 1 in a basis state with ``n`` excitations, then a
collective CNOT that flips every layer-1 spin when the central spin is ``|1>``.
Layer 2 is left maximally mixed.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .spin_algebra import check_register, flip_mask
from .topology import TopologySpec


@dataclass(frozen=True)
class MqcLabel:
    n: int
    N1: int
    sign: str = "x"

    def __post_init__(self):
        if not 0 <= self.n <= self.N1:
            raise ValueError(f"n={self.n} outside [0, {self.N1}]")
        if self.sign not in ("+", "-", "x"):
            raise ValueError(f"sign must be '+', '-' or 'x', got {self.sign!r}")

    @property
    def q(self) -> int:
        return coherence_order(self.N1, self.n)


def coherence_order(N1: int, n: int) -> int:
    if not 0 <= n <= N1:
        raise ValueError(f"n={n} outside [0, {N1}]")
    return N1 - 2 * n + 1


def n_for_order(N1: int, q: int) -> int:
    """Inverse of :func:`coherence_order`."""
    n, rem = divmod(N1 + 1 - q, 2)
    if rem or not 0 <= n <= N1:
        raise ValueError(f"q={q} is not a valid coherence order for N1={N1}")
    return n


def canonical_placement(N1: int, n: int) -> tuple[int, ...]:
    """Excited layer-1 slots: the highest-index ``n`` slots."""
    if not 0 <= n <= N1:
        raise ValueError(f"n={n} outside [0, {N1}]")
    return tuple(range(N1 - n, N1))


def _check_placement(N1: int, n: int, placement) -> tuple[int, ...]:
    if placement is None:
        return canonical_placement(N1, n)
    placement = tuple(sorted(placement))
    if len(placement) != n or len(set(placement)) != n or any(not 0 <= s < N1 for s in placement):
        raise ValueError(f"placement {placement} is not {n} distinct slots in [0, {N1})")
    return placement


def xi_index(N1: int, n: int, placement: Sequence[int] | None = None) -> int:
    slots = _check_placement(N1, n, placement)
    return flip_mask(slots, N1)


def xi_state(N1: int, n: int, placement: Sequence[int] | None = None) -> np.ndarray:
    """Layer-1 basis state with ``n`` spins in ``|1>``."""
    psi = np.zeros(2**N1, dtype=np.complex128)
    psi[xi_index(N1, n, placement)] = 1.0
    return psi


def collective_cnot(topology: TopologySpec) -> np.ndarray:
    """Central-spin-controlled flip of every layer-1 spin; identity on layer 2."""
    n = topology.n_qubits
    dim = check_register(n)
    idx = np.arange(dim)
    control = (idx >> (n - 1)) & 1
    target = np.where(control == 1, idx ^ flip_mask(topology.layer1_sites(), n), idx)
    out = np.zeros((dim, dim), dtype=np.complex128)
    out[target, idx] = 1.0
    return out


def _branch_pair(topology: TopologySpec, n: int, placement) -> tuple[int, int]:
    """P(x)H basis indices of ``|0, xi_n>`` and its CNOT partner ``|1, flip(xi_n)>``."""
    N1 = topology.n1
    xi = xi_index(N1, n, placement)
    a = xi
    b = (1 << N1) | (xi ^ ((1 << N1) - 1))
    return a, b


def _with_mixed_layer2(core: np.ndarray, topology: TopologySpec) -> np.ndarray:
    check_register(topology.n_qubits)
    d2 = 2**topology.n2
    return np.kron(core, np.eye(d2, dtype=np.complex128) / d2)


def mqc_pure_state(topology: TopologySpec, n: int, sign: str, placement=None) -> np.ndarray:
    """``(|0,xi_n> +/- |1,flip(xi_n)>)/sqrt(2)`` on the central+layer-1 register."""
    if sign not in ("+", "-"):
        raise ValueError(f"sign must be '+' or '-', got {sign!r}")
    a, b = _branch_pair(topology, n, placement)
    psi = np.zeros(2 ** (1 + topology.n1), dtype=np.complex128)
    psi[a] = 1 / np.sqrt(2)
    psi[b] = (1 if sign == "+" else -1) / np.sqrt(2)
    return psi


def prepare_mqc(topology: TopologySpec, n: int, sign: str, placement=None) -> np.ndarray:
    psi = mqc_pure_state(topology, n, sign, placement)
    return _with_mixed_layer2(np.outer(psi, psi.conj()), topology)


def prepare_deviation(topology: TopologySpec, n: int, placement=None) -> np.ndarray:
    """Traceless difference of the ``+`` and ``-`` combination states.

    Equal to ``(|a><b| + |b><a|) (x) I/2**N2`` with ``a``, ``b`` the two branches
    of the coherence; its purity is ``2 / 2**N2``.
    """
    a, b = _branch_pair(topology, n, placement)
    core = np.zeros((2 ** (1 + topology.n1),) * 2, dtype=np.complex128)
    core[a, b] = core[b, a] = 1.0
    return _with_mixed_layer2(core, topology)


def deviation_purity(topology: TopologySpec) -> float:
    return 2.0 / 2**topology.n2


def deviation_support(topology: TopologySpec, n: int, placement=None) -> np.ndarray:
    """Full-register basis indices on which the deviation state is nonzero."""
    a, b = _branch_pair(topology, n, placement)
    d2 = 2**topology.n2
    f = np.arange(d2)
    return np.concatenate([a * d2 + f, b * d2 + f])
