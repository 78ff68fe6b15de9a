"""Brute-force reference implementations for cross-checking the package.

Nothing here imports ``starotoc``: Hamiltonians are assembled from explicit
Kronecker products, exponentials come from a Taylor series with scaling and
squaring, and every trace is taken of an explicitly multiplied matrix.
"""
import math
from functools import reduce

import numpy as np

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = {"x": SX, "y": SY, "z": SZ}


def op(n, factors):
    """Kronecker product with ``factors[site]`` at the given sites, identity elsewhere."""
    return reduce(np.kron, [factors.get(s, I2) for s in range(n)])


def star_sites(K, h=2, f=3):
    """(central, [layer-1 per branch], [layer-2 per branch]) qubit labels."""
    n1 = K * h
    l1 = [[1 + (k * h) + i for i in range(h)] for k in range(K)]
    l2 = [[1 + n1 + k * f + j for j in range(f)] for k in range(K)]
    return 0, l1, l2, 1 + n1 + K * f


def star_hamiltonian(K, J, g, h=2, f=3, central_once=False, drop_hf=False):
    p, l1, l2, n = star_sites(K, h, f)
    H = np.zeros((2**n, 2**n), dtype=complex)
    c = math.pi * J / 2
    for k in range(K):
        for a in l1[k]:
            H += c * op(n, {p: SZ, a: SZ})
            if not drop_hf:
                for b in l2[k]:
                    H += c * op(n, {a: SZ, b: SZ})
        field_sites = l1[k] + l2[k]
        if k == 0 or not central_once:
            field_sites = [p] + field_sites
        for s in field_sites:
            for P in (SX, SZ):
                H += g * c * op(n, {s: P})
    return H


def expm_series(A, terms=40):
    """exp(A) by Taylor series after scaling so the norm is below 1/2."""
    norm = np.linalg.norm(A, 1)
    s = max(0, int(math.ceil(math.log2(norm / 0.5)))) if norm > 0 else 0
    B = A / 2**s
    out = np.eye(A.shape[0], dtype=complex)
    term = np.eye(A.shape[0], dtype=complex)
    for k in range(1, terms):
        term = term @ B / k
        out = out + term
    for _ in range(s):
        out = out @ out
    return out


def basis_ket(bits):
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int("".join(str(b) for b in bits), 2)] = 1
    return v


def cnot_all(K, h=2, f=3):
    p, l1, _, n = star_sites(K, h, f)
    P0 = np.array([[1, 0], [0, 0]], dtype=complex)
    P1 = np.array([[0, 0], [0, 1]], dtype=complex)
    flip = {p: P1}
    for a in sum(l1, []):
        flip[a] = SX
    return op(n, {p: P0}) + op(n, flip)


def deviation_state(K, n_exc, h=2, f=3):
    """rho_+ - rho_- built by the preparation circuit: |+/->|xi> -> CNOT -> mix layer 2."""
    p, l1, l2, n = star_sites(K, h, f)
    n1 = K * h
    xi = [0] * (n1 - n_exc) + [1] * n_exc
    rhos = []
    for sgn in (1, -1):
        plus = np.array([1, sgn], dtype=complex) / math.sqrt(2)
        ket = np.kron(plus, basis_ket(xi))
        # CNOT on the central+layer-1 factor only
        P0 = np.diag([1, 0]).astype(complex)
        P1 = np.diag([0, 1]).astype(complex)
        U = np.kron(P0, np.eye(2**n1)) + np.kron(P1, reduce(np.kron, [SX] * n1))
        ket = U @ ket
        core = np.outer(ket, ket.conj())
        rhos.append(np.kron(core, np.eye(2 ** (K * f)) / 2 ** (K * f)))
    return rhos[0] - rhos[1]


def mqc_otoc_series(K, J, g, n_exc, jts, central_once=False):
    """Tr[U rho U^dag rho] / Tr[rho^2] with U from the series exponential."""
    H = star_hamiltonian(K, J, g, central_once=central_once)
    rho = deviation_state(K, n_exc)
    norm = np.trace(rho @ rho).real
    out = []
    for jt in jts:
        U = expm_series(-1j * H * (jt / J))
        out.append(np.trace(U @ rho @ U.conj().T @ rho).real / norm)
    return np.array(out)
