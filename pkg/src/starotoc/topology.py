"""Hierarchical star-topology register and its branch-decomposed Hamiltonian.

Each branch holds ``h_per_branch`` layer-1 spins coupled to the central spin,
and ``f_per_branch`` layer-2 spins, each coupled to every layer-1 spin of the
same branch (the CH2-CF3 arm of the phosphite molecule: two protons sharing
three fluorines).

Site ordering: the central spin is qubit 0, the layer-1 spins follow in branch
order, and the layer-2 spins follow in branch order.  A branch ``k`` (1-based)
therefore owns a contiguous run of layer-1 slots and of layer-2 slots.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spin_algebra import Layer, SiteIndex, check_register, flip_mask, z_signs


@dataclass(frozen=True)
class TopologySpec:
    K: int
    h_per_branch: int = 2
    f_per_branch: int = 3

    def __post_init__(self):
        if self.K < 1:
            raise ValueError(f"K must be a positive integer, got {self.K}")
        if self.h_per_branch < 1:
            raise ValueError(f"h_per_branch must be positive, got {self.h_per_branch}")
        if self.f_per_branch < 0:
            raise ValueError(f"f_per_branch must be non-negative, got {self.f_per_branch}")

    @property
    def n1(self) -> int:
        return self.K * self.h_per_branch

    @property
    def n2(self) -> int:
        return self.K * self.f_per_branch

    @property
    def n_qubits(self) -> int:
        return 1 + self.n1 + self.n2

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    def layer1_sites(self) -> list[int]:
        return list(range(1, 1 + self.n1))

    def layer2_sites(self) -> list[int]:
        return list(range(1 + self.n1, self.n_qubits))

    def branch_of(self, slot: int) -> int:
        """1-based branch owning layer-1 slot ``slot`` (0-based within layer 1)."""
        if not 0 <= slot < self.n1:
            raise ValueError(f"layer-1 slot {slot} outside 0..{self.n1 - 1}")
        return slot // self.h_per_branch + 1

    def layer2_of_branch(self, k: int) -> list[int]:
        self.branch_slots(k)
        start = 1 + self.n1 + (k - 1) * self.f_per_branch
        return list(range(start, start + self.f_per_branch))

    def children(self, slot: int) -> list[int]:
        """Layer-2 qubits coupled to layer-1 slot ``slot``."""
        return self.layer2_of_branch(self.branch_of(slot))

    def branch_slots(self, k: int) -> list[int]:
        if not 1 <= k <= self.K:
            raise ValueError(f"branch index {k} outside 1..{self.K}")
        return list(range((k - 1) * self.h_per_branch, k * self.h_per_branch))

    def branch_sites(self, k: int) -> tuple[list[int], list[int]]:
        """Layer-1 and layer-2 qubit indices belonging to branch ``k``."""
        slots = self.branch_slots(k)
        return [1 + m for m in slots], self.layer2_of_branch(k)


@dataclass(frozen=True)
class HamiltonianParams:
    J: float = 8.7
    g: float = 0.0
    central_field_once: bool = False

    def __post_init__(self):
        if not self.J > 0:
            raise ValueError(f"J must be positive, got {self.J}")
        if not self.g >= 0:
            raise ValueError(f"g must be non-negative, got {self.g}")


def site_map(topology: TopologySpec, max_qubits: int | None = None) -> list[SiteIndex]:
    check_register(topology.n_qubits, max_qubits)
    sites = [SiteIndex(0, Layer.CENTRAL)]
    sites += [SiteIndex(i, Layer.LAYER1) for i in topology.layer1_sites()]
    sites += [SiteIndex(i, Layer.LAYER2) for i in topology.layer2_sites()]
    return sites


def build_internal(topology: TopologySpec, k: int, J: float, include_hf: bool = True) -> np.ndarray:
    """Branch-``k`` zz couplings: central-layer1 and layer1-layer2."""
    n = topology.n_qubits
    check_register(n)
    z = z_signs(n)
    diag = np.zeros(2**n)
    for m in topology.branch_slots(k):
        h = 1 + m
        diag += z[0] * z[h]
        if include_hf:
            for f in topology.children(m):
                diag += z[h] * z[f]
    return np.diag((math.pi * J / 2) * diag).astype(np.complex128)


def build_external(
    topology: TopologySpec, k: int, J: float, g: float, include_central: bool = True
) -> np.ndarray:
    """Equal-amplitude x and z fields on the branch-``k`` sites.

    The central spin is included in every branch unless ``include_central``
    is False, so K branches drive it with K times the satellite amplitude.
    """
    n = topology.n_qubits
    dim = check_register(n)
    h_sites, f_sites = topology.branch_sites(k)
    sites = ([0] if include_central else []) + h_sites + f_sites
    amp = g * J * math.pi / 2
    out = np.zeros((dim, dim), dtype=np.complex128)
    if amp == 0:
        return out
    z = z_signs(n)
    idx = np.arange(dim)
    out[idx, idx] = amp * z[sites].sum(axis=0)
    for s in sites:
        out[idx ^ flip_mask([s], n), idx] += amp
    return out


def build_hamiltonian(
    topology: TopologySpec, params: HamiltonianParams, decouple_hf: bool = False
) -> np.ndarray:
    """Sum of branch couplings and fields.

    ``decouple_hf`` drops the layer1-layer2 couplings, the numerical stand-in
    for refocusing those interactions during the evolution.
    """
    n = topology.n_qubits
    dim = check_register(n)
    H = np.zeros((dim, dim), dtype=np.complex128)
    for k in range(1, topology.K + 1):
        H += build_internal(topology, k, params.J, include_hf=not decouple_hf)
        if params.g:
            central = k == 1 or not params.central_field_once
            H += build_external(topology, k, params.J, params.g, include_central=central)
    return H


def basis_permutation(qubit_perm, n_qubits: int) -> np.ndarray:
    """Basis-index permutation for relabelling qubit ``q`` as ``qubit_perm[q]``.

    Returns ``p`` such that ``psi[p]`` is the relabelled state vector and
    ``M[np.ix_(p, p)]`` the relabelled operator.
    """
    qubit_perm = list(qubit_perm)
    if sorted(qubit_perm) != list(range(n_qubits)):
        raise ValueError(f"not a permutation of {n_qubits} qubits: {qubit_perm}")
    new = np.arange(2**n_qubits)
    old = np.zeros_like(new)
    for q in range(n_qubits):
        bit = (new >> (n_qubits - 1 - qubit_perm[q])) & 1
        old |= bit << (n_qubits - 1 - q)
    return old


def branch_swap(topology: TopologySpec, k1: int, k2: int) -> list[int]:
    """Qubit relabelling that exchanges two whole branches."""
    perm = list(range(topology.n_qubits))
    for a, b in zip(topology.branch_sites(k1)[0] + topology.layer2_of_branch(k1),
                    topology.branch_sites(k2)[0] + topology.layer2_of_branch(k2)):
        perm[a], perm[b] = b, a
    return perm
