"""Matrix product states over operator space.

A state is a chain of rank-3 tensors (left bond, physical, right bond) with
physical dimension d^2; the physical index refers to a LocalBasis, with
component 0 the identity.  The overall magnitude is kept in a log-domain
accumulator `log_scale` so that thermal evolution, whose norm grows like
tr exp(-beta H), never overflows the tensors: the represented operator is
exp(log_scale) times the contraction of the tensors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .basis import BasisTransform, LocalBasis, expand_local
from .superop import MultMpo
from .tensor import orthogonal_factor, svd_truncate


class MpsError(ValueError):
    """Shape, basis, or gauge violation."""


@dataclass
class OperatorMps:
    """MPS over operator space with open boundaries (boundary bonds of extent 1)."""

    n: int
    basis: LocalBasis
    tensors: list[np.ndarray] = field(repr=False)
    log_scale: float = 0.0
    center: int | None = None

    def __post_init__(self):
        if len(self.tensors) != self.n:
            raise MpsError(f"{len(self.tensors)} tensors for {self.n} sites")
        if self.tensors[0].shape[0] != 1 or self.tensors[-1].shape[2] != 1:
            raise MpsError("boundary bonds must have extent 1")
        for j, t in enumerate(self.tensors):
            if t.ndim != 3 or t.shape[1] != self.phys_dim:
                raise MpsError(f"tensor {j} has shape {t.shape}, expected (*, {self.phys_dim}, *)")
            if j and self.tensors[j - 1].shape[2] != t.shape[0]:
                raise MpsError(f"bond mismatch between sites {j - 1} and {j}")
        if not math.isfinite(self.log_scale):
            raise MpsError(f"non-finite log_scale {self.log_scale}")

    @property
    def phys_dim(self) -> int:
        return self.basis.size

    @property
    def is_real(self) -> bool:
        return all(not np.iscomplexobj(t) for t in self.tensors)

    def bond_dims(self) -> list[int]:
        return [t.shape[0] for t in self.tensors] + [self.tensors[-1].shape[2]]

    def max_bond(self) -> int:
        return max(self.bond_dims())

    def copy(self) -> "OperatorMps":
        # Site tensors are treated as immutable values: every operation in
        # this module rebinds list entries and never writes into an array,
        # so sharing the arrays between copies is safe and O(n).
        return OperatorMps(self.n, self.basis, list(self.tensors),
                           self.log_scale, self.center)


def identity_state(n: int, basis: LocalBasis) -> OperatorMps:
    """|e>: the identity operator, i.e. the infinite-temperature density matrix."""
    t = np.zeros((1, basis.size, 1))
    t[0, 0, 0] = 1.0
    return OperatorMps(n, basis, [t.copy() for _ in range(n)], 0.0, center=0)


def product_operator_state(factors, basis: LocalBasis, n: int,
                           string_range=None) -> OperatorMps:
    """Bond-1 state for a product operator.

    `factors` lists (site, d x d operator); unlisted sites carry the identity.
    `string_range` optionally multiplies an extra d x d string operator onto
    every site in range(start, stop) (applied from the left), as needed for
    Jordan-Wigner strings.  Per-site coefficient vectors are normalized with
    the magnitude pushed into log_scale.
    """
    by_site = {}
    for site, op in factors:
        if not 0 <= site < n:
            raise MpsError(f"factor at site {site} outside chain of {n}")
        if site in by_site:
            raise MpsError(f"duplicate factor at site {site}")
        by_site[site] = np.asarray(op, dtype=complex)
    strung = set()
    string_op = None
    if string_range is not None:
        start, stop, string_op = string_range
        string_op = np.asarray(string_op, dtype=complex)
        strung = set(range(start, stop))

    tensors = []
    log_scale = 0.0
    for j in range(n):
        local = by_site.get(j, np.eye(basis.d, dtype=complex))
        if j in strung:
            local = string_op @ local
        coeffs = expand_local(local, basis)
        norm = float(np.linalg.norm(coeffs))
        if norm == 0.0:
            raise MpsError(f"zero local operator at site {j}")
        coeffs = coeffs / norm
        log_scale += math.log(norm)
        if np.allclose(coeffs.imag, 0, atol=1e-15):
            coeffs = coeffs.real
        tensors.append(coeffs.reshape(1, basis.size, 1).copy())
    return OperatorMps(n, basis, tensors, log_scale, center=0)


def inner(x: OperatorMps, y: OperatorMps) -> complex:
    """Operator-space inner product <<x|y>> including the log_scale factors."""
    val, log = inner_scaled(x, y)
    return val * math.exp(log)


def inner_scaled(x: OperatorMps, y: OperatorMps) -> tuple[complex, float]:
    """(mantissa, log_factor) with <<x|y>> = mantissa * exp(log_factor)."""
    _check_compatible(x, y)
    env = np.ones((1, 1))
    for xt, yt in zip(x.tensors, y.tensors):
        env = np.tensordot(env, xt.conj(), axes=(0, 0))  # (ry, p, rx')
        env = np.tensordot(env, yt, axes=((0, 1), (0, 1)))  # (rx', ry')
    return env[0, 0], x.log_scale + y.log_scale


def _check_compatible(x: OperatorMps, y: OperatorMps):
    if x.n != y.n or x.phys_dim != y.phys_dim:
        raise MpsError(f"incompatible states: n={x.n} vs {y.n}, d^2={x.phys_dim} vs {y.phys_dim}")
    if x.basis != y.basis:
        raise MpsError(f"basis mismatch: {x.basis.label} vs {y.basis.label}; transform first")


def canonicalize(state: OperatorMps, center: int) -> OperatorMps:
    """Return a copy in canonical form around `center` with unit internal norm.

    Tensors left of the center get orthonormal columns and tensors right of
    it orthonormal rows; the state's norm moves into log_scale.
    """
    if not 0 <= center < state.n:
        raise MpsError(f"center {center} outside chain of {state.n}")
    out = state.copy()
    _sweep_center(out, center)
    c = out.tensors[center]
    norm = float(np.linalg.norm(c))
    if norm == 0.0:
        raise MpsError("cannot canonicalize the zero state")
    out.tensors[center] = c / norm
    out.log_scale += math.log(norm)
    out.center = center
    return out


def _sweep_center(state: OperatorMps, center: int):
    """In-place QR sweeps pushing orthogonality toward `center` (no normalization)."""
    start_left = 0 if state.center is None else min(state.center, center)
    for j in range(start_left, center):
        dl, p, dr = state.tensors[j].shape
        q, r = orthogonal_factor(state.tensors[j].reshape(dl * p, dr), "left")
        state.tensors[j] = q.reshape(dl, p, -1)
        state.tensors[j + 1] = np.tensordot(r, state.tensors[j + 1], axes=(1, 0))
    start_right = state.n - 1 if state.center is None else max(state.center, center)
    for j in range(start_right, center, -1):
        dl, p, dr = state.tensors[j].shape
        q, r = orthogonal_factor(state.tensors[j].reshape(dl, p * dr), "right")
        state.tensors[j] = q.reshape(-1, p, dr)
        state.tensors[j - 1] = np.tensordot(state.tensors[j - 1], r, axes=(2, 0))
    state.center = center


def apply_two_site_gate(state: OperatorMps, bond: int, gate: np.ndarray,
                        max_rank: int | None, weight_tol: float,
                        center_after: str = "right") -> tuple[OperatorMps, float]:
    """Apply a d^4 x d^4 gate to sites (bond, bond+1) and re-split with truncation.

    The canonical center is moved to the bond first; the two-site block's norm
    is folded into log_scale so the tensors stay O(1).  Returns the updated
    state and the discarded weight of the split.
    """
    if not 0 <= bond < state.n - 1:
        raise MpsError(f"bond {bond} outside chain of {state.n}")
    p = state.phys_dim
    if gate.shape != (p * p, p * p):
        raise MpsError(f"gate shape {gate.shape}, expected {(p * p, p * p)}")
    out = state.copy()
    if out.center is None or out.center < bond:
        _sweep_center(out, bond)
    elif out.center > bond + 1:
        _sweep_center(out, bond + 1)

    a, b = out.tensors[bond], out.tensors[bond + 1]
    dl, dr = a.shape[0], b.shape[2]
    theta = np.tensordot(a, b, axes=(2, 0))  # (dl, p, p, dr)
    theta = np.tensordot(gate.reshape(p, p, p, p), theta, axes=((2, 3), (1, 2)))
    theta = theta.transpose(2, 0, 1, 3).reshape(dl * p, p * dr)
    fact = svd_truncate(theta, max_rank, weight_tol)
    s = fact.singular_values
    norm = float(np.linalg.norm(s))
    if norm == 0.0:
        raise MpsError("gate annihilated the state")
    s = s / norm
    out.log_scale += math.log(norm)
    if center_after == "right":
        out.tensors[bond] = fact.left.reshape(dl, p, -1)
        out.tensors[bond + 1] = (s[:, None] * fact.right).reshape(-1, p, dr)
        out.center = bond + 1
    else:
        out.tensors[bond] = (fact.left * s).reshape(dl, p, -1)
        out.tensors[bond + 1] = fact.right.reshape(-1, p, dr)
        out.center = bond
    return out, fact.discarded_weight


def schmidt_values(state: OperatorMps, bond: int) -> np.ndarray:
    """Normalized Schmidt coefficients across `bond` (cut between sites bond, bond+1)."""
    if not 0 <= bond < state.n - 1:
        raise MpsError(f"bond {bond} outside chain of {state.n}")
    work = canonicalize(state, bond)
    dl, p, dr = work.tensors[bond].shape
    s = np.linalg.svd(work.tensors[bond].reshape(dl * p, dr), compute_uv=False)
    total = np.linalg.norm(s)
    return s / total


def osee(state: OperatorMps, bond: int) -> float:
    """Operator-space entanglement entropy in bits across `bond`.

    Computed from the Schmidt spectrum of the internally normalized state;
    the caller's state is not mutated.
    """
    lam2 = schmidt_values(state, bond) ** 2
    lam2 = lam2[lam2 > 1e-30]
    return max(0.0, float(-np.sum(lam2 * np.log2(lam2))))


def symmetric_bond(n: int) -> int:
    """Bond index of the symmetric bipartition (cut between sites n//2 - 1 and n//2)."""
    return n // 2 - 1


def transform_basis(state: OperatorMps, transform: BasisTransform,
                    target: LocalBasis) -> OperatorMps:
    """Apply the d^2 x d^2 coefficient transform to every physical index."""
    if state.basis.label != transform.src:
        raise MpsError(f"state is in basis {state.basis.label}, transform expects {transform.src}")
    if target.label != transform.dst:
        raise MpsError(f"target basis {target.label} does not match transform {transform.dst}")
    t = transform.matrix
    tensors = [np.tensordot(t, a, axes=(1, 1)).transpose(1, 0, 2) for a in state.tensors]
    return OperatorMps(state.n, target, tensors, state.log_scale, state.center)


def apply_mpo(state: OperatorMps, mpo: MultMpo) -> OperatorMps:
    """Apply a multiplication map; bond dimensions add across the map's product terms."""
    if mpo.n != state.n:
        raise MpsError(f"map spans {mpo.n} sites, state has {state.n}")
    if mpo.basis != state.basis:
        raise MpsError(f"map basis {mpo.basis.label} != state basis {state.basis.label}")
    parts = []
    for term in mpo.terms:
        part = state.copy()
        part.center = None
        for site, blk in term.items():
            part.tensors[site] = np.tensordot(blk, part.tensors[site], axes=(1, 1)).transpose(1, 0, 2)
        parts.append(part)
    out = parts[0]
    for part in parts[1:]:
        out = mps_add(out, part)
    return out


def mps_add(x: OperatorMps, y: OperatorMps) -> OperatorMps:
    """Direct sum of two states: block-diagonal bond concatenation.

    The relative magnitude exp(log_scale difference) is absorbed into the
    smaller state's first tensor.
    """
    _check_compatible(x, y)
    log = max(x.log_scale, y.log_scale)
    fx = math.exp(x.log_scale - log)
    fy = math.exp(y.log_scale - log)
    if x.n == 1:
        t = fx * x.tensors[0] + fy * y.tensors[0]
        return OperatorMps(1, x.basis, [t], log, center=0)
    tensors = []
    for j in range(x.n):
        a, b = x.tensors[j], y.tensors[j]
        scale_a = fx if j == 0 else 1.0
        scale_b = fy if j == 0 else 1.0
        dtype = np.result_type(a.dtype, b.dtype)
        if j == 0:
            t = np.concatenate([scale_a * a, scale_b * b], axis=2).astype(dtype, copy=False)
        elif j == x.n - 1:
            t = np.concatenate([a, b], axis=0).astype(dtype, copy=False)
        else:
            t = np.zeros((a.shape[0] + b.shape[0], x.phys_dim, a.shape[2] + b.shape[2]), dtype=dtype)
            t[: a.shape[0], :, : a.shape[2]] = a
            t[a.shape[0] :, :, a.shape[2] :] = b
        tensors.append(t)
    return OperatorMps(x.n, x.basis, tensors, log, center=None)


def compress(state: OperatorMps, max_rank: int | None, weight_tol: float) -> tuple[OperatorMps, float]:
    """One truncating left-to-right sweep after right-canonicalizing; returns total discarded weight."""
    out = canonicalize(state, 0)
    total = 0.0
    identity = np.eye(state.phys_dim * state.phys_dim)
    for bond in range(state.n - 1):
        out, w = apply_two_site_gate(out, bond, identity, max_rank, weight_tol, center_after="right")
        total += w
    return out, total
