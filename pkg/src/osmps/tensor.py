"""Dense tensor kernels shared by the MPS machinery.

Tensors are plain numpy arrays in C (row-major) order; real arrays are
float64 and complex ones complex128, and mixing the two in a contraction
promotes to complex.  The row-major linearization is also the on-disk
layout of snapshot files, so it must not change.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

# Singular values closer than this (relative to the largest one) are treated
# as a degenerate group and kept or discarded together, so truncation does
# not depend on the arbitrary basis LAPACK picks inside the group.
DEGENERACY_TOL = 1e-14

# Gate generators are at most d^4 x d^4 with d <= 4.
MAX_EXP_DIM = 256


class TensorError(ValueError):
    """Shape or axis mismatch in a tensor operation."""


class SvdConvergenceError(RuntimeError):
    """SVD failed to converge on both LAPACK drivers."""


class MatrixExpOverflowError(OverflowError):
    """exp(scale * g) would overflow double precision."""


def contract(a: np.ndarray, b: np.ndarray, paired_axes) -> np.ndarray:
    """Contract ``a`` with ``b`` over the given list of (axis_a, axis_b) pairs.

    The result carries the unpaired axes of ``a`` followed by the unpaired
    axes of ``b``, in their original order.
    """
    if not paired_axes:
        return np.tensordot(a, b, axes=0)
    ax_a, ax_b = zip(*paired_axes)
    for i, j in paired_axes:
        if not (-a.ndim <= i < a.ndim) or not (-b.ndim <= j < b.ndim):
            raise TensorError(f"axis pair ({i}, {j}) out of range for shapes {a.shape}, {b.shape}")
        if a.shape[i] != b.shape[j]:
            raise TensorError(
                f"extent mismatch on axis pair ({i}, {j}): {a.shape[i]} != {b.shape[j]}"
            )
    return np.tensordot(a, b, axes=(list(ax_a), list(ax_b)))


@dataclass
class TruncatedFactorization:
    """Truncated SVD ``m ~ left @ diag(singular_values) @ right``.

    ``discarded_weight`` is the sum of squared discarded singular values
    divided by the total sum of squares (0 if nothing was discarded).
    """

    left: np.ndarray
    singular_values: np.ndarray
    right: np.ndarray
    discarded_weight: float

    @property
    def rank(self) -> int:
        return len(self.singular_values)


def svd_truncate(m: np.ndarray, max_rank: int | None, weight_tol: float) -> TruncatedFactorization:
    """SVD ``m`` and keep the smallest rank with discarded weight <= ``weight_tol``,
    capped at ``max_rank`` (``None`` = uncapped).

    Degenerate singular values (equal within DEGENERACY_TOL relative to the
    largest) straddling the cut are kept together, so the kept rank may
    exceed ``max_rank`` by the width of the degenerate group.
    """
    if m.ndim != 2:
        raise TensorError(f"svd_truncate needs a rank-2 tensor, got rank {m.ndim}")
    try:
        u, s, vh = scipy.linalg.svd(m, full_matrices=False, lapack_driver="gesdd",
                                    check_finite=False)
    except np.linalg.LinAlgError:
        try:
            u, s, vh = scipy.linalg.svd(m, full_matrices=False, lapack_driver="gesvd",
                                        check_finite=False)
        except np.linalg.LinAlgError as exc:
            norm = np.linalg.norm(m)
            raise SvdConvergenceError(
                f"SVD did not converge: shape={m.shape}, fro_norm={norm:.3e}, "
                f"max_abs={np.max(np.abs(m)):.3e}"
            ) from exc

    total = float(np.sum(s**2))
    if total == 0.0:
        return TruncatedFactorization(u[:, :1], s[:1], vh[:1], 0.0)

    # tail[k-1] = weight discarded when keeping the first k values
    tail = np.concatenate([np.cumsum((s**2)[::-1])[::-1][1:], [0.0]]) / total
    ok = np.nonzero(tail <= weight_tol)[0]
    keep = int(ok[0]) + 1 if ok.size else len(s)
    if max_rank is not None:
        keep = min(keep, max_rank)
    keep = max(keep, 1)
    # extend across a degenerate group at the cut
    while keep < len(s) and s[keep - 1] - s[keep] <= DEGENERACY_TOL * s[0]:
        keep += 1
    discarded = float(np.sum((s[keep:]) ** 2) / total)
    return TruncatedFactorization(u[:, :keep], s[:keep].copy(), vh[:keep], discarded)


def orthogonal_factor(m: np.ndarray, side: str) -> tuple[np.ndarray, np.ndarray]:
    """Factor ``m`` into an orthonormal factor and a remainder.

    side="left":  m = factor @ remainder, factor has orthonormal columns.
    side="right": m = remainder @ factor, factor has orthonormal rows.

    The remainder's diagonal is made real nonnegative, so an already
    orthonormal input returns (input, identity).
    """
    if m.ndim != 2:
        raise TensorError(f"orthogonal_factor needs a rank-2 tensor, got rank {m.ndim}")
    if side == "left":
        q, r = scipy.linalg.qr(m, mode="economic", check_finite=False)
        phase = _diag_phase(r)
        return q * phase, r * phase.conj()[:, None]
    if side == "right":
        q, r = scipy.linalg.qr(m.T, mode="economic", check_finite=False)
        phase = _diag_phase(r)
        return (q * phase).T, (r * phase.conj()[:, None]).T
    raise TensorError(f"side must be 'left' or 'right', got {side!r}")


def _diag_phase(r: np.ndarray) -> np.ndarray:
    d = np.diagonal(r).copy()
    d[d == 0] = 1.0
    return (d / np.abs(d)).conj()


def matrix_exp(g: np.ndarray, scale: complex = 1.0) -> np.ndarray:
    """exp(scale * g) for a square matrix up to MAX_EXP_DIM.

    Symmetric/hermitian and real antisymmetric generators go through an
    eigendecomposition; anything else falls back to scaling-and-squaring.
    The result is real whenever exactness allows it.
    """
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise TensorError(f"matrix_exp needs a square matrix, got shape {g.shape}")
    if g.shape[0] > MAX_EXP_DIM:
        raise TensorError(f"matrix dimension {g.shape[0]} exceeds the {MAX_EXP_DIM} gate cap")
    g = np.asarray(g)
    real_input = not np.iscomplexobj(g)
    real_scale = np.imag(scale) == 0
    if real_scale:
        scale = np.real(scale)

    norm = np.linalg.norm(g, ord=2) if g.size else 0.0
    if abs(scale) * norm > 700.0:
        raise MatrixExpOverflowError(
            f"exp(scale*g) overflows: |scale|*||g|| = {abs(scale) * norm:.3e}"
        )

    hermitian = np.allclose(g, g.conj().T, rtol=0, atol=1e-13 * max(norm, 1.0))
    antisymmetric = real_input and np.allclose(g, -g.T, rtol=0, atol=1e-13 * max(norm, 1.0))
    if hermitian:
        w, v = np.linalg.eigh(g)
        out = (v * np.exp(scale * w)) @ v.conj().T
    elif antisymmetric:
        # i*g is hermitian; exp(s*g) = V exp(-i s w) V^dag is real orthogonal for real s
        w, v = np.linalg.eigh(1j * g)
        out = (v * np.exp(-1j * scale * w)) @ v.conj().T
    else:
        out = scipy.linalg.expm(scale * g)
    if real_input and real_scale and np.iscomplexobj(out):
        out = out.real if np.allclose(out.imag, 0, atol=1e-12 * max(np.abs(out).max(), 1.0)) else out
    return out
