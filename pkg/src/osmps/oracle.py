"""Brute-force dense reference for small chains.

Everything here works with full 2^n x 2^n (d^n in general) matrices and a
single eigendecomposition per Hamiltonian, so it is exact to roundoff and
feasible up to ORACLE_CAP sites.  The tensor-network pipeline is validated
against these values cell by cell; the dense materialization of supermaps
also lives here, for the same small-n regime only.
"""

from __future__ import annotations

import itertools
from functools import reduce

import numpy as np

from .basis import LocalBasis
from .superop import HamiltonianTerms, MultMpo, SuperMap

ORACLE_CAP = 8


class OracleCapError(ValueError):
    """Chain too long for the dense reference."""


def _check_cap(n: int, cap: int = ORACLE_CAP):
    if n > cap:
        raise OracleCapError(f"dense oracle supports n <= {cap}, got {n}")


def _embed(ops: dict[int, np.ndarray], n: int, d: int) -> np.ndarray:
    factors = [np.asarray(ops.get(j, np.eye(d)), dtype=complex) for j in range(n)]
    return reduce(np.kron, factors)


def dense_hamiltonian(h: HamiltonianTerms, cap: int = ORACLE_CAP) -> np.ndarray:
    """Reassemble the term decomposition into the full d^n x d^n matrix."""
    _check_cap(h.n, cap)
    d = h.d
    dim = d**h.n
    out = np.zeros((dim, dim), dtype=complex)
    for site, op in h.one_site:
        out += _embed({site: op}, h.n, d)
    for bond, op in h.two_site:
        left = d**bond
        right = d ** (h.n - bond - 2)
        out += np.kron(np.kron(np.eye(left), op), np.eye(right))
    return out


def dense_product(factors, n: int, d: int = 2) -> np.ndarray:
    """Dense matrix of a product operator given as (site, d x d) factors."""
    _check_cap(n)
    return _embed(dict(factors), n, d)


def _eig(h: np.ndarray):
    w, v = np.linalg.eigh(h)
    resid = np.linalg.norm(h @ v - v * w)
    if resid > 1e-10 * max(np.linalg.norm(h), 1.0):
        raise RuntimeError(f"eigendecomposition residual {resid:.3e} too large")
    return w, v


def exact_thermal_expectation(h: np.ndarray, a: np.ndarray, beta: float,
                              t: float = 0.0, b: np.ndarray | None = None) -> complex:
    """tr(e^{-beta H} b a(t)) / tr(e^{-beta H}) with a(t) = e^{itH} a e^{-itH}."""
    w, v = _eig(h)
    w0 = w - w.min()
    rho = (v * np.exp(-beta * w0)) @ v.conj().T
    z = np.exp(-beta * w0).sum()
    if t != 0.0:
        u = (v * np.exp(1j * t * w)) @ v.conj().T
        a_t = u @ a @ u.conj().T
    else:
        a_t = a
    ba = a_t if b is None else b @ a_t
    return complex(np.trace(rho @ ba) / z)


def exact_osee(x: np.ndarray, bond: int, d: int = 2) -> float:
    """OSEE in bits of a dense operator across `bond` (cut after site `bond`)."""
    dim = x.shape[0]
    n = round(np.log(dim) / np.log(d))
    _check_cap(n)
    left = d ** (bond + 1)
    right = dim // left
    # matricize the vectorized operator: rows = (row_L, col_L), cols = (row_R, col_R)
    m = (x.reshape(left, right, left, right)
          .transpose(0, 2, 1, 3)
          .reshape(left * left, right * right))
    s = np.linalg.svd(m, compute_uv=False)
    s = s / np.linalg.norm(s)
    p = s[s > 1e-15] ** 2
    return float(-np.sum(p * np.log2(p)))


def dense_supermap(sm: SuperMap, cap: int = 4) -> np.ndarray:
    """Materialize a local-blocks supermap as its full coefficient-space matrix.

    Test-oracle use only: the dimension is d^(2n).
    """
    _check_cap(sm.n, cap)
    k = sm.d**2
    dim = k**sm.n
    out = np.zeros((dim, dim))
    for site, blk in sm.one_site_blocks:
        out = out + _embed({site: blk}, sm.n, k)
    for bond, blk in sm.two_site_blocks:
        left = k**bond
        right = k ** (sm.n - bond - 2)
        out = out + np.kron(np.kron(np.eye(left), blk), np.eye(right))
    return out


def basis_vectorizer(basis: LocalBasis, n: int) -> np.ndarray:
    """Matrix W whose columns are the row-major vectorized product basis operators.

    Coefficients of a dense operator x are d^-n W^dag vec(x); conversely
    vec(x) = W c.  Column order runs over site indices with site 0 slowest,
    matching the kron embedding used everywhere else.
    """
    _check_cap(n, 4)
    elems = basis.elements.astype(complex)
    cols = [reduce(np.kron, [elems[i] for i in idx]).reshape(-1)
            for idx in itertools.product(range(basis.size), repeat=n)]
    return np.array(cols).T


def dense_left_mult(h_dense: np.ndarray, basis: LocalBasis, n: int) -> np.ndarray:
    """Coefficient-space matrix of x -> H x, built from the dense H directly."""
    w = basis_vectorizer(basis, n)
    dim = basis.d**n
    kron_left = np.kron(h_dense, np.eye(dim))
    return w.conj().T @ kron_left @ w / dim


def dense_commutator_map(h_dense: np.ndarray, basis: LocalBasis, n: int) -> np.ndarray:
    """Coefficient-space matrix of x -> [x, H] = xH - Hx."""
    w = basis_vectorizer(basis, n)
    dim = basis.d**n
    right = np.kron(np.eye(dim), h_dense.T)
    left = np.kron(h_dense, np.eye(dim))
    return w.conj().T @ (right - left) @ w / dim


def dense_mult_mpo(mpo: MultMpo) -> np.ndarray:
    """Coefficient-space matrix of a product-term multiplication map (test oracle)."""
    _check_cap(mpo.n, 4)
    k = mpo.basis.size
    dim = k**mpo.n
    out = np.zeros((dim, dim), dtype=complex)
    for term in mpo.terms:
        out += _embed(term, mpo.n, k)
    return out
