"""Gate kernels and Hamiltonian pieces for the qubit + spin-bath register.

Register sites 0 and 1 are the qubits, sites ``2 .. 2 + N_B - 1`` the bath
spins (bath site ``k`` lives on register site ``2 + k``).  Site 0 is the most
significant bit and bit value 0 is spin up, as in :mod:`fluxanneal.problem`.
"""

from __future__ import annotations

import numba
import numpy as np
from scipy import linalg, sparse

from .spec import SpinBathSpec

PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}
AXES = ("x", "y", "z")


@numba.njit(cache=True)
def apply_one(psi, U, q, n):
    bit = 1 << (n - 1 - q)
    for i in range(psi.shape[0]):
        if i & bit == 0:
            a = psi[i]
            b = psi[i | bit]
            psi[i] = U[0, 0] * a + U[0, 1] * b
            psi[i | bit] = U[1, 0] * a + U[1, 1] * b


@numba.njit(cache=True)
def apply_two(psi, U, q1, q2, n):
    b1 = 1 << (n - 1 - q1)
    b2 = 1 << (n - 1 - q2)
    for i in range(psi.shape[0]):
        if i & b1 == 0 and i & b2 == 0:
            i01 = i | b2
            i10 = i | b1
            i11 = i | b1 | b2
            x0 = psi[i]
            x1 = psi[i01]
            x2 = psi[i10]
            x3 = psi[i11]
            psi[i] = U[0, 0] * x0 + U[0, 1] * x1 + U[0, 2] * x2 + U[0, 3] * x3
            psi[i01] = U[1, 0] * x0 + U[1, 1] * x1 + U[1, 2] * x2 + U[1, 3] * x3
            psi[i10] = U[2, 0] * x0 + U[2, 1] * x1 + U[2, 2] * x2 + U[2, 3] * x3
            psi[i11] = U[3, 0] * x0 + U[3, 1] * x1 + U[3, 2] * x2 + U[3, 3] * x3


def pair_operator(r):
    """``r_x XX + r_y YY + r_z ZZ`` as a 4x4 matrix."""
    return sum(float(r[k]) * np.kron(PAULI[a], PAULI[a]) for k, a in enumerate(AXES))


def site_operator(r):
    return sum(float(r[k]) * PAULI[a] for k, a in enumerate(AXES))


def bath_terms(spec: SpinBathSpec, offset=2):
    """``H_B`` as ``(sites, matrix)`` terms on the register (``offset`` = first bath site)."""
    c, n = spec.couplings, spec.n_bath
    if spec.model == "I":
        return [((offset + k, offset + (k + 1) % n), -spec.energy * pair_operator(c.bath[k]))
                for k in range(n)]
    return [((offset + k,), -spec.energy * site_operator(c.bath[k])) for k in range(n)]


def coupling_terms(spec: SpinBathSpec):
    """``lambda H_SB`` as ``((qubit, bath site), matrix)`` terms; model I carries a minus sign."""
    c = spec.couplings
    sign = -1.0 if spec.model == "I" else 1.0
    return [((q, 2 + site), sign * spec.lam * pair_operator(c.system[k]))
            for k, (q, site) in enumerate(c.links)]


def apply_gate(psi, sites, U, n):
    if len(sites) == 1:
        apply_one(psi, U, sites[0], n)
    else:
        apply_two(psi, U, sites[0], sites[1], n)


def term_gates(terms, z):
    """``exp(-i z h)`` for every term (``z`` may be complex)."""
    return [(sites, np.ascontiguousarray(_expm(h, z))) for sites, h in terms]


def _expm(h, z):
    w, V = np.linalg.eigh(h)
    return (V * np.exp(-1j * z * w)) @ V.conj().T


def sparse_operator(terms, n):
    """Sparse matrix of a sum of 1- and 2-site terms on ``n`` register sites."""
    dim = 2**n
    out = sparse.csr_matrix((dim, dim), dtype=complex)
    for sites, h in terms:
        if len(sites) == 2 and sites[1] != sites[0] + 1:
            # reorder a non-adjacent pair through a dense 4x4 embedding by bit permutation
            out = out + _nonadjacent(sites, h, n)
            continue
        left = sparse.identity(2 ** sites[0], format="csr")
        right = sparse.identity(2 ** (n - 1 - sites[-1]), format="csr")
        out = out + sparse.kron(sparse.kron(left, sparse.csr_matrix(h)), right, format="csr")
    return out.tocsr()


def _nonadjacent(sites, h, n):
    q1, q2 = sites
    dim = 2**n
    idx = np.arange(dim)
    b1 = (idx >> (n - 1 - q1)) & 1
    b2 = (idx >> (n - 1 - q2)) & 1
    rows, cols, vals = [], [], []
    for a in range(4):
        for b in range(4):
            if h[a, b] == 0:
                continue
            sel = (2 * b1 + b2) == b
            src = idx[sel]
            dst = src.copy()
            na1, na2 = a >> 1, a & 1
            dst = (dst & ~(1 << (n - 1 - q1))) | (na1 << (n - 1 - q1))
            dst = (dst & ~(1 << (n - 1 - q2))) | (na2 << (n - 1 - q2))
            rows.append(dst)
            cols.append(src)
            vals.append(np.full(src.shape, h[a, b]))
    if not vals:
        return sparse.csr_matrix((dim, dim), dtype=complex)
    return sparse.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                             shape=(dim, dim))


def bath_hamiltonian(spec: SpinBathSpec):
    """Sparse ``H_B`` on the bath alone (``2**N_B`` dimensional)."""
    return sparse_operator(bath_terms(spec, offset=0), spec.n_bath)


def dense_expm_hermitian(H, z):
    return linalg.expm(-1j * z * np.asarray(H))
