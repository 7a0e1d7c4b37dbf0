"""Maps over operator space built from a term decomposition of H.

Three maps are needed: the thermal generator chi (left multiplication by H,
real in a real basis), the Heisenberg generator (the commutator map, whose
matrix is skew-symmetric with purely imaginary entries in a hermitian basis,
so -i times it is a real antisymmetric generator), and product-operator
multiplication maps used when assembling correlators.

All maps inherit the locality of H: one d^2 x d^2 block per one-site term
and one d^4 x d^4 block per bond term.  The global matrix is never stored;
dense materialization lives in the small-chain oracle only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import LocalBasis

REALITY_TOL = 1e-13


class SuperMapError(ValueError):
    """Construction failed a reality or symmetry requirement."""


@dataclass
class HamiltonianTerms:
    """H as a sum of one-site (d x d) and bond (d^2 x d^2) operators.

    Bond index j couples sites (j, j+1); the bond operator is given in the
    kron layout where the row index is i_left * d + i_right.
    """

    n: int
    d: int
    one_site: list[tuple[int, np.ndarray]] = field(default_factory=list)
    two_site: list[tuple[int, np.ndarray]] = field(default_factory=list)

    def __post_init__(self):
        for site, op in self.one_site:
            if not 0 <= site < self.n:
                raise SuperMapError(f"one-site term at site {site} outside chain of {self.n}")
            if op.shape != (self.d, self.d):
                raise SuperMapError(f"one-site term shape {op.shape}, expected d={self.d}")
        for bond, op in self.two_site:
            if not 0 <= bond < self.n - 1:
                raise SuperMapError(f"bond term at bond {bond} outside chain of {self.n}")
            if op.shape != (self.d**2, self.d**2):
                raise SuperMapError(f"bond term shape {op.shape}, expected d^2={self.d**2}")


@dataclass
class SuperMap:
    """Nearest-neighbor map over operator space as local coefficient blocks."""

    n: int
    d: int
    one_site_blocks: list[tuple[int, np.ndarray]]
    two_site_blocks: list[tuple[int, np.ndarray]]
    basis: LocalBasis
    is_real: bool


def _pair_elements(basis: LocalBasis) -> np.ndarray:
    """Stack of d^4 two-site basis operators kron(p_i, p_j), row index i*d^2 + j."""
    p = basis.elements
    k = basis.size
    d = basis.d
    pairs = np.einsum("iab,jcd->ijacbd", p, p).reshape(k * k, d * d, d * d)
    return pairs


def _left_block(op: np.ndarray, elems: np.ndarray, dim: int) -> np.ndarray:
    """block[j,l] = dim^-1 tr(p_j^dag op p_l)."""
    return np.einsum("jba,bc,lca->jl", elems.conj(), op, elems) / dim


def _right_block(op: np.ndarray, elems: np.ndarray, dim: int) -> np.ndarray:
    """block[j,l] = dim^-1 tr(p_j^dag p_l op)."""
    return np.einsum("jba,lbc,ca->jl", elems.conj(), elems, op) / dim


def _require_real(block: np.ndarray, what: str) -> np.ndarray:
    resid = float(np.max(np.abs(block.imag))) if np.iscomplexobj(block) else 0.0
    if resid > REALITY_TOL:
        idx = np.unravel_index(np.argmax(np.abs(block.imag)), block.shape)
        raise SuperMapError(f"{what} has complex residue {resid:.3e} at entry {idx}")
    return np.ascontiguousarray(block.real)


def build_chi(h: HamiltonianTerms, basis: LocalBasis) -> SuperMap:
    """Thermal generator: coefficient blocks of x -> H x in the given real basis."""
    if basis.kind != "real":
        raise SuperMapError("build_chi expects a real-kind basis")
    if basis.d != h.d:
        raise SuperMapError(f"basis dimension {basis.d} does not match terms d={h.d}")
    elems = basis.elements.astype(complex)
    pairs = _pair_elements(basis).astype(complex)
    ones = [(site, _require_real(_left_block(np.asarray(op, dtype=complex), elems, h.d),
                                 f"chi one-site block at site {site}"))
            for site, op in h.one_site]
    twos = [(bond, _require_real(_left_block(np.asarray(op, dtype=complex), pairs, h.d**2),
                                 f"chi bond block at bond {bond}"))
            for bond, op in h.two_site]
    return SuperMap(n=h.n, d=h.d, one_site_blocks=ones, two_site_blocks=twos,
                    basis=basis, is_real=True)


def build_commutator_generator(h: HamiltonianTerms, basis: LocalBasis) -> SuperMap:
    """Real generator G = -i * (commutator map) in a hermitian basis.

    The commutator map sends x to [x, H] = xH - Hx; each of its blocks is the
    right-multiplication block minus the left one, which is skew-symmetric
    with purely imaginary entries for hermitian basis and H.  Evolution by
    exp(-i t Hhat) is then exp(t G) with G real antisymmetric.
    """
    if basis.kind != "hermitian":
        raise SuperMapError("build_commutator_generator expects a hermitian-kind basis")
    if basis.d != h.d:
        raise SuperMapError(f"basis dimension {basis.d} does not match terms d={h.d}")
    elems = basis.elements
    pairs = _pair_elements(basis)

    def gen_block(op, stack, dim, what):
        op = np.asarray(op, dtype=complex)
        commutator = _right_block(op, stack, dim) - _left_block(op, stack, dim)
        g = _require_real(-1.0j * commutator, what)
        asym = np.max(np.abs(g + g.T))
        scale = max(np.max(np.abs(g)), 1.0)
        if asym > 1e-12 * scale:
            raise SuperMapError(f"{what} is not antisymmetric (residue {asym:.3e}); "
                                "is the Hamiltonian hermitian?")
        return g

    ones = [(site, gen_block(op, elems, h.d, f"generator one-site block at site {site}"))
            for site, op in h.one_site]
    twos = [(bond, gen_block(op, pairs, h.d**2, f"generator bond block at bond {bond}"))
            for bond, op in h.two_site]
    return SuperMap(n=h.n, d=h.d, one_site_blocks=ones, two_site_blocks=twos,
                    basis=basis, is_real=True)


def bond_generators(sm: SuperMap) -> list[np.ndarray]:
    """Per-bond d^4 x d^4 generators with one-site blocks absorbed.

    Bulk one-site blocks are split half/half between the two adjacent bonds;
    boundary sites put their full weight on the single adjacent bond.  The
    evolution engine sweeps bond gates only.
    """
    if sm.n < 2:
        raise SuperMapError("bond generators need a chain of at least 2 sites")
    k = sm.d**2
    eye = np.eye(k)
    gens = [np.zeros((k * k, k * k)) for _ in range(sm.n - 1)]
    for bond, blk in sm.two_site_blocks:
        gens[bond] = gens[bond] + blk
    for site, blk in sm.one_site_blocks:
        if site == 0:
            gens[0] += np.kron(blk, eye)
        elif site == sm.n - 1:
            gens[sm.n - 2] += np.kron(eye, blk)
        else:
            gens[site - 1] += 0.5 * np.kron(eye, blk)
            gens[site] += 0.5 * np.kron(blk, eye)
    return gens


@dataclass
class MultMpo:
    """Multiplication map x -> b x (or x b) for b a sum of product operators.

    Stored as a list of product terms; each term maps sites to d^2 x d^2
    coefficient blocks (identity on unlisted sites), with any scalar factor
    folded into one of the blocks.  Applying a single term never grows bond
    dimension, so this doubles as a bond-1 MPO per term.
    """

    n: int
    basis: LocalBasis
    side: str  # "left" | "right"
    terms: list[dict[int, np.ndarray]]


def build_mult_mpo(factors, side: str, basis: LocalBasis, n: int,
                   coefficient: complex = 1.0) -> MultMpo:
    """Multiplication map for the product operator with the given (site, d x d) factors.

    side="left" represents x -> b x, side="right" x -> x b.  Sites not listed
    carry the identity.
    """
    if side not in ("left", "right"):
        raise SuperMapError(f"side must be 'left' or 'right', got {side!r}")
    blocks: dict[int, np.ndarray] = {}
    elems = basis.elements.astype(complex)
    for site, op in factors:
        if not 0 <= site < n:
            raise SuperMapError(f"factor at site {site} outside chain of {n}")
        if site in blocks:
            raise SuperMapError(f"duplicate factor at site {site}")
        op = np.asarray(op, dtype=complex)
        blk = _left_block(op, elems, basis.d) if side == "left" else _right_block(op, elems, basis.d)
        blocks[site] = blk
    if blocks:
        first = min(blocks)
        blocks[first] = blocks[first] * coefficient
    elif coefficient != 1.0:
        blocks[0] = np.eye(basis.size, dtype=complex) * coefficient
    return MultMpo(n=n, basis=basis, side=side, terms=[blocks])


def mult_mpo_sum(mpos: list[MultMpo]) -> MultMpo:
    """Concatenate the product terms of several maps acting on the same side."""
    if not mpos:
        raise SuperMapError("empty sum")
    head = mpos[0]
    terms = []
    for m in mpos:
        if (m.n, m.basis.label, m.side) != (head.n, head.basis.label, head.side):
            raise SuperMapError("cannot sum multiplication maps with mismatched metadata")
        terms.extend(m.terms)
    return MultMpo(n=head.n, basis=head.basis, side=head.side, terms=terms)
