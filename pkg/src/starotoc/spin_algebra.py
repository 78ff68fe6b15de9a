"""Dense operator algebra on an N-qubit register.

Qubit 0 is the most significant bit of a computational-basis index, so an
operator on site ``s`` of an ``n``-qubit register is
``I^(s) (x) sigma (x) I^(n-s-1)``.  All matrices are ``complex128``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

MAX_QUBITS = 12

PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


class RegisterTooLarge(ValueError):
    """Raised when a register exceeds the dense-storage ceiling."""

    def __init__(self, n_qubits: int, max_qubits: int):
        self.n_qubits = n_qubits
        self.max_qubits = max_qubits
        super().__init__(
            f"register of {n_qubits} qubits exceeds the dense ceiling of {max_qubits} "
            f"(one operator would need {16 * 4 ** n_qubits} bytes)"
        )


class Layer(str, enum.Enum):
    CENTRAL = "central"
    LAYER1 = "layer1"
    LAYER2 = "layer2"


@dataclass(frozen=True, order=True)
class SiteIndex:
    index: int
    layer: Layer = Layer.CENTRAL

    def __post_init__(self):
        if self.index < 0:
            raise ValueError(f"site index must be non-negative, got {self.index}")


def _as_index(site) -> int:
    return site.index if isinstance(site, SiteIndex) else int(site)


def check_register(n_qubits: int, max_qubits: int | None = None) -> int:
    limit = MAX_QUBITS if max_qubits is None else max_qubits
    if n_qubits < 1:
        raise ValueError(f"register needs at least one qubit, got {n_qubits}")
    if n_qubits > limit:
        raise RegisterTooLarge(n_qubits, limit)
    return 2**n_qubits


def _distinct_indices(sites: Iterable, n_qubits: int) -> list[int]:
    idx = [_as_index(s) for s in sites]
    if not idx:
        raise ValueError("site list is empty")
    if len(set(idx)) != len(idx):
        raise ValueError(f"duplicate sites in {idx}")
    for i in idx:
        if not 0 <= i < n_qubits:
            raise ValueError(f"site {i} outside register of {n_qubits} qubits")
    return idx


def embed_pauli(axis: str, site, n_qubits: int, max_qubits: int | None = None) -> np.ndarray:
    """Pauli matrix ``axis`` acting on ``site``, identity elsewhere."""
    check_register(n_qubits, max_qubits)
    s = _as_index(site)
    if not 0 <= s < n_qubits:
        raise ValueError(f"site {s} outside register of {n_qubits} qubits")
    if axis not in PAULI:
        raise ValueError(f"unknown Pauli axis {axis!r}")
    left = np.eye(2**s, dtype=np.complex128)
    right = np.eye(2 ** (n_qubits - s - 1), dtype=np.complex128)
    return np.kron(np.kron(left, PAULI[axis]), right)


def collective_sum(axis: str, sites: Sequence, n_qubits: int) -> np.ndarray:
    """Sum of single-site Paulis over ``sites``."""
    idx = _distinct_indices(sites, n_qubits)
    out = np.zeros((2**n_qubits,) * 2, dtype=np.complex128)
    for s in idx:
        out += embed_pauli(axis, s, n_qubits)
    return out


def collective_flip(sites: Sequence, n_qubits: int) -> np.ndarray:
    """Tensor product of sigma_x over ``sites``: a permutation matrix."""
    idx = _distinct_indices(sites, n_qubits)
    check_register(n_qubits)
    dim = 2**n_qubits
    perm = np.arange(dim) ^ flip_mask(idx, n_qubits)
    out = np.zeros((dim, dim), dtype=np.complex128)
    out[perm, np.arange(dim)] = 1.0
    return out


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    _check_conformable(a, b)
    return a @ b - b @ a


def overlap_trace(a: np.ndarray, b: np.ndarray) -> complex:
    """Tr(A B) without forming the product."""
    _check_conformable(a, b)
    return complex(np.sum(a * b.T))


def _check_conformable(a: np.ndarray, b: np.ndarray) -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape != b.shape:
        raise ValueError(f"operator shapes {a.shape} and {b.shape} are not conformable")


# index-level helpers used by the Hamiltonian builders


def flip_mask(sites: Iterable[int], n_qubits: int) -> int:
    mask = 0
    for s in sites:
        mask |= 1 << (n_qubits - 1 - s)
    return mask


def z_signs(n_qubits: int) -> np.ndarray:
    """``(n_qubits, 2**n_qubits)`` array of sigma_z eigenvalues per site."""
    basis = np.arange(2**n_qubits)
    shifts = n_qubits - 1 - np.arange(n_qubits)
    bits = (basis[None, :] >> shifts[:, None]) & 1
    return (1 - 2 * bits).astype(np.float64)


def hamming_distances(n_qubits: int) -> np.ndarray:
    """Pairwise Hamming distance between computational basis labels."""
    basis = np.arange(2**n_qubits)
    xor = basis[:, None] ^ basis[None, :]
    out = np.zeros(xor.shape, dtype=np.int64)
    for _ in range(n_qubits):
        out += xor & 1
        xor >>= 1
    return out


def is_hermitian(a: np.ndarray, atol: float = 1e-12) -> bool:
    return bool(np.max(np.abs(a - a.conj().T), initial=0.0) <= atol)


def is_unitary(a: np.ndarray, atol: float = 1e-10) -> bool:
    eye = np.eye(a.shape[0])
    return bool(np.max(np.abs(a.conj().T @ a - eye)) <= atol)
