"""Orthonormal local operator bases and changes of basis between them.

A local basis holds d^2 operators p_0..p_{d^2-1} with p_0 the identity,
orthonormal under the operator-space inner product (1/d) tr(p_i^dag p_j).
Two kinds are provided: "hermitian" (every element self-adjoint, used for
Heisenberg evolution) and "real" (every element a real matrix, used for
thermal evolution).  The real kind is obtained from the hermitian one by
multiplying each purely imaginary element by -i.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SUPPORTED_DIMS = (2, 3, 4)

PAULI = {
    0: np.eye(2),
    1: np.array([[0.0, 1.0], [1.0, 0.0]]),
    2: np.array([[0.0, -1.0j], [1.0j, 0.0]]),
    3: np.array([[1.0, 0.0], [0.0, -1.0]]),
}


class BasisError(ValueError):
    """Unsupported dimension or mismatched bases."""


@dataclass(frozen=True)
class LocalBasis:
    """d^2 local basis operators, identity first, orthonormal under (1/d) tr(a^dag b)."""

    d: int
    kind: str  # "hermitian" | "real"
    elements: np.ndarray = field(repr=False)  # shape (d^2, d, d)

    @property
    def size(self) -> int:
        return self.d * self.d

    @property
    def label(self) -> str:
        return f"{self.kind}:d={self.d}"

    def __eq__(self, other) -> bool:
        return isinstance(other, LocalBasis) and self.label == other.label

    def __hash__(self) -> int:
        return hash(self.label)


@dataclass(frozen=True)
class BasisTransform:
    """Unitary d^2 x d^2 matrix taking coefficients in `src` to coefficients in `dst`."""

    matrix: np.ndarray
    src: str
    dst: str


def make_basis(d: int, kind: str) -> LocalBasis:
    """Build the local operator basis for dimension d in {2, 3, 4}.

    d=2 gives the Pauli set {1, sx, sy, sz}; d=3 the Gell-Mann matrices
    rescaled to unit norm under (1/d) tr; d=4 the sixteen Pauli products
    sigma^a (x) sigma^b in lexicographic (a, b) order.
    """
    if kind not in ("hermitian", "real"):
        raise BasisError(f"kind must be 'hermitian' or 'real', got {kind!r}")
    if d == 2:
        elems = [PAULI[0], PAULI[1], PAULI[2], PAULI[3]]
    elif d == 3:
        elems = [np.eye(3)] + [g * np.sqrt(3.0 / 2.0) for g in _gell_mann(3)]
    elif d == 4:
        elems = [np.kron(PAULI[a], PAULI[b]) for a in range(4) for b in range(4)]
    else:
        raise BasisError(f"unsupported local dimension {d}; supported: {SUPPORTED_DIMS}")

    stack = np.array(elems, dtype=complex)
    if kind == "real":
        stack = _realify(stack)
        stack = stack.real.copy()
    return LocalBasis(d=d, kind=kind, elements=stack)


def _gell_mann(d: int):
    """Generalized Gell-Mann matrices, normalized to tr(g^2) = 2.

    Order: for each pair i<j the symmetric then antisymmetric generator,
    followed by the diagonal ones.
    """
    out = []
    for i in range(d):
        for j in range(i + 1, d):
            sym = np.zeros((d, d), dtype=complex)
            sym[i, j] = sym[j, i] = 1.0
            anti = np.zeros((d, d), dtype=complex)
            anti[i, j] = -1.0j
            anti[j, i] = 1.0j
            out.append(sym)
            out.append(anti)
    for l in range(1, d):
        diag = np.zeros((d, d), dtype=complex)
        diag[np.diag_indices(l)] = 1.0
        diag[l, l] = -l
        out.append(diag * np.sqrt(2.0 / (l * (l + 1))))
    return out


def _realify(stack: np.ndarray) -> np.ndarray:
    """Multiply purely imaginary elements by -i; error if any element is mixed."""
    out = stack.copy()
    for k, p in enumerate(stack):
        if np.allclose(p.imag, 0, atol=1e-14):
            continue
        if np.allclose(p.real, 0, atol=1e-14):
            out[k] = -1.0j * p
        else:
            raise BasisError(f"basis element {k} has mixed real/imaginary entries")
    return out


def expand_local(op: np.ndarray, basis: LocalBasis) -> np.ndarray:
    """Coefficients c_nu = (1/d) tr(p_nu^dag op); sum c_nu p_nu reconstructs op."""
    if op.shape != (basis.d, basis.d):
        raise BasisError(f"operator shape {op.shape} does not match d={basis.d}")
    coeffs = np.einsum("nab,ab->n", basis.elements.conj(), np.asarray(op, dtype=complex)) / basis.d
    return coeffs


def reconstruct_local(coeffs: np.ndarray, basis: LocalBasis) -> np.ndarray:
    """Inverse of expand_local."""
    return np.tensordot(np.asarray(coeffs), basis.elements, axes=(0, 0))


def change_of_basis(src: LocalBasis, dst: LocalBasis) -> BasisTransform:
    """Unitary transform T_{mu,nu} = (1/d) tr(q_mu^dag p_nu) from src {p} to dst {q}."""
    if src.d != dst.d:
        raise BasisError(f"dimension mismatch: {src.d} != {dst.d}")
    t = np.einsum("mab,nab->mn", dst.elements.conj(), src.elements.astype(complex)) / src.d
    return BasisTransform(matrix=t, src=src.label, dst=dst.label)
