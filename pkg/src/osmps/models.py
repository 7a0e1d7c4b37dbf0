"""Concrete spin-chain models and the local operators evolved for them.

The XXZ chain uses bare Pauli matrices (not spin-1/2 S operators), so the
free-fermion point is Delta = 0.  The single-impurity Anderson model is the
unfolded two-chain form: up-spin bath to the left, down-spin bath to the
right, the two impurity orbitals on the central bond with hopping zero
across it and the Hubbard U as the only coupling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import LocalBasis, expand_local
from .mps import OperatorMps, compress, mps_add, product_operator_state
from .superop import HamiltonianTerms, MultMpo, build_mult_mpo, mult_mpo_sum

SX = np.array([[0.0, 1.0], [1.0, 0.0]])
SY = np.array([[0.0, -1.0j], [1.0j, 0.0]])
SZ = np.array([[1.0, 0.0], [0.0, -1.0]])
SP = np.array([[0.0, 1.0], [0.0, 0.0]])   # sigma^+ = (sx + i sy)/2
SM = np.array([[0.0, 0.0], [1.0, 0.0]])   # sigma^- = (sx - i sy)/2
NUM = SM @ SP                              # n = sigma^- sigma^+ = diag(0, 1)

LOCAL_OPS = {"sx": SX, "sy": SY, "sz": SZ, "sp": SP, "sm": SM, "n": NUM,
             "id": np.eye(2)}


class ModelError(ValueError):
    """Invalid model parameters."""


@dataclass
class XxzModel:
    """Open XXZ chain: sum over bonds of sx sx + sy sy + delta * sz sz."""

    n: int
    delta: float

    def __post_init__(self):
        if self.n < 2:
            raise ModelError(f"XXZ chain needs n >= 2, got {self.n}")


def xxz_terms(model: XxzModel) -> HamiltonianTerms:
    bond_op = (np.kron(SX, SX) + np.kron(SY, SY)).real + model.delta * np.kron(SZ, SZ)
    return HamiltonianTerms(
        n=model.n, d=2,
        one_site=[],
        two_site=[(j, bond_op.copy()) for j in range(model.n - 1)],
    )


@dataclass
class SiamChain:
    """Single-impurity Anderson model unfolded onto an open chain of n sites.

    taus[j] is the hopping on bond j; the junction bond between the two
    impurity sites (up at n//2 - 1, down at n//2) must carry hopping zero
    and instead holds the U n n term.  The two bonds adjacent to the
    junction are the hybridization and must be equal.
    """

    n: int
    taus: list[float]
    u: float
    eps_f: float

    def __post_init__(self):
        if self.n < 2 or self.n % 2:
            raise ModelError(f"SIAM chain needs even n >= 2, got {self.n}")
        if len(self.taus) != self.n - 1:
            raise ModelError(f"expected {self.n - 1} hoppings, got {len(self.taus)}")
        if self.taus[self.junction_bond] != 0.0:
            raise ModelError("the junction bond hopping must be zero")
        j = self.junction_bond
        if 0 < j < self.n - 2 and self.taus[j - 1] != self.taus[j + 1]:
            raise ModelError(
                f"hybridization mismatch: taus[{j - 1}]={self.taus[j - 1]} "
                f"!= taus[{j + 1}]={self.taus[j + 1]}"
            )

    @property
    def junction_bond(self) -> int:
        return self.n // 2 - 1

    @property
    def up_impurity(self) -> int:
        return self.n // 2 - 1

    @property
    def down_impurity(self) -> int:
        return self.n // 2

    @classmethod
    def uniform(cls, n: int, tau: float, u: float, eps_f: float) -> "SiamChain":
        taus = [tau] * (n - 1)
        taus[n // 2 - 1] = 0.0
        return cls(n=n, taus=taus, u=u, eps_f=eps_f)


def siam_terms(model: SiamChain) -> HamiltonianTerms:
    hop = (np.kron(SP, SM) + np.kron(SM, SP)).real
    two_site = []
    for j, tau in enumerate(model.taus):
        if j == model.junction_bond:
            if model.u != 0.0:
                two_site.append((j, model.u * np.kron(NUM, NUM)))
        elif tau != 0.0:
            two_site.append((j, tau * hop))
    one_site = []
    if model.eps_f != 0.0:
        one_site = [(model.up_impurity, model.eps_f * NUM),
                    (model.down_impurity, model.eps_f * NUM)]
    return HamiltonianTerms(n=model.n, d=2, one_site=one_site, two_site=two_site)


@dataclass
class SpinCurrent:
    """Current j_m = i (s^+_m s^-_{m+1} - s^-_m s^+_{m+1}) on bond m.

    Expanded into hermitian factors, j_m = (sx sy - sy sx) / 2, which keeps
    every coefficient real in the hermitian basis.
    """

    m: int

    def terms(self):
        return [(0.5, [(self.m, SX), (self.m + 1, SY)]),
                (-0.5, [(self.m, SY), (self.m + 1, SX)])]

    def dense_two_site(self) -> np.ndarray:
        """The defining i(s+ s- - s- s+) on the bond's 4-dim space (oracle form)."""
        return 1.0j * (np.kron(SP, SM) - np.kron(SM, SP))


def spin_current_state(m: int, n: int, basis: LocalBasis) -> OperatorMps:
    """|j_m> as a sum of its two product terms; hermitian and traceless."""
    if not 0 <= m < n - 1:
        raise ModelError(f"current bond {m} outside chain of {n}")
    parts = []
    for coeff, factors in SpinCurrent(m).terms():
        factors = [(site, coeff * op) if k == 0 else (site, op)
                   for k, (site, op) in enumerate(factors)]
        parts.append(product_operator_state(factors, basis, n))
    state = mps_add(parts[0], parts[1])
    if basis.kind == "hermitian":
        state = _drop_zero_imag(state)
    return state


def total_current_state(n: int, basis: LocalBasis,
                        max_rank: int | None = None) -> OperatorMps:
    """Sum of j_m over all bonds, compressed to its exact small bond dimension."""
    state = spin_current_state(0, n, basis)
    for m in range(1, n - 1):
        state = mps_add(state, spin_current_state(m, n, basis))
    state, _ = compress(state, max_rank, 1e-28)
    return state


def _drop_zero_imag(state: OperatorMps) -> OperatorMps:
    """Cast tensors to real when the imaginary parts are exact numerical zeros."""
    out = state.copy()
    for j, t in enumerate(out.tensors):
        if np.iscomplexobj(t) and np.allclose(t.imag, 0, atol=1e-14):
            out.tensors[j] = np.ascontiguousarray(t.real)
    return out


@dataclass
class MajoranaPair:
    """Majorana partners w = f + f^dag and w' = i(f - f^dag) of the up impurity.

    With the Jordan-Wigner convention f = (prod_{j<site} sz_j) s^+_site the
    partners are string * sx and -string * sy: products of single Pauli
    factors, so both are hermitian with real coefficients in the hermitian
    basis.
    """

    site: int

    def w_factors(self, n):
        return [(j, SZ) for j in range(self.site)] + [(self.site, SX)]

    def wp_factors(self, n):
        return [(j, SZ) for j in range(self.site)] + [(self.site, -SY)]


def majorana_states(pair: MajoranaPair, n: int, basis: LocalBasis) -> tuple[OperatorMps, OperatorMps]:
    if not 0 <= pair.site < n:
        raise ModelError(f"impurity site {pair.site} outside chain of {n}")
    w = product_operator_state(pair.w_factors(n), basis, n)
    wp = product_operator_state(pair.wp_factors(n), basis, n)
    if basis.kind == "hermitian":
        w, wp = _drop_zero_imag(w), _drop_zero_imag(wp)
    return w, wp


def hamiltonian_state(h: HamiltonianTerms, basis: LocalBasis) -> OperatorMps:
    """|H> as an MPS, splitting every bond term into product operators.

    The operator Schmidt decomposition runs in coefficient space, where a
    hermitian H has real coefficients in the hermitian basis (and a real H
    real coefficients in the real basis), so the state stays real.
    """
    k = basis.size
    parts = []
    for site, op in h.one_site:
        c = _real_coeffs(expand_local(np.asarray(op, dtype=complex), basis))
        parts.append(_coefficient_product({site: c}, basis, h.n))
    pair = np.einsum("iab,jcd->ijacbd", basis.elements, basis.elements) \
             .reshape(k * k, h.d**2, h.d**2)
    for bond, op in h.two_site:
        c2 = np.einsum("nab,ab->n", pair.conj().astype(complex),
                       np.asarray(op, dtype=complex)) / h.d**2
        c2 = _real_coeffs(c2).reshape(k, k)
        u, s, vh = np.linalg.svd(c2)
        for i in range(len(s)):
            if s[i] < 1e-14 * s[0]:
                break
            parts.append(_coefficient_product({bond: u[:, i] * s[i], bond + 1: vh[i]},
                                              basis, h.n))
    if not parts:
        raise ModelError("Hamiltonian has no terms")
    state = parts[0]
    for p in parts[1:]:
        state = mps_add(state, p)
    state, _ = compress(state, None, 1e-28)
    return state


def _real_coeffs(c: np.ndarray) -> np.ndarray:
    if np.abs(c.imag).max() > 1e-12 * max(np.abs(c).max(), 1.0):
        raise ModelError("Hamiltonian term has complex coefficients in this basis")
    return np.ascontiguousarray(c.real)


def _coefficient_product(coeff_by_site: dict, basis: LocalBasis, n: int) -> OperatorMps:
    """Bond-1 state from explicit per-site coefficient vectors (identity elsewhere)."""
    log_scale = 0.0
    tensors = []
    for j in range(n):
        if j in coeff_by_site:
            c = np.asarray(coeff_by_site[j], dtype=float)
            norm = float(np.linalg.norm(c))
            if norm == 0.0:
                raise ModelError(f"zero coefficient vector at site {j}")
            log_scale += np.log(norm)
            c = c / norm
        else:
            c = np.zeros(basis.size)
            c[0] = 1.0
        tensors.append(c.reshape(1, basis.size, 1))
    return OperatorMps(n, basis, tensors, log_scale, center=0)


def current_mult_maps(m: int, n: int, basis: LocalBasis) -> tuple[MultMpo, MultMpo]:
    """(left, right) multiplication maps for the local current j_m."""
    lefts, rights = [], []
    for coeff, factors in SpinCurrent(m).terms():
        lefts.append(build_mult_mpo(factors, "left", basis, n, coefficient=coeff))
        rights.append(build_mult_mpo(factors, "right", basis, n, coefficient=coeff))
    return mult_mpo_sum(lefts), mult_mpo_sum(rights)


def total_current_mult_maps(n: int, basis: LocalBasis) -> tuple[MultMpo, MultMpo]:
    """(left, right) multiplication maps for the total current sum_m j_m."""
    lefts, rights = [], []
    for m in range(n - 1):
        l, r = current_mult_maps(m, n, basis)
        lefts.append(l)
        rights.append(r)
    return mult_mpo_sum(lefts), mult_mpo_sum(rights)


def product_mult_maps(factors, n: int, basis: LocalBasis,
                      coefficient: complex = 1.0) -> tuple[MultMpo, MultMpo]:
    """(left, right) multiplication maps for one product operator."""
    return (build_mult_mpo(factors, "left", basis, n, coefficient=coefficient),
            build_mult_mpo(factors, "right", basis, n, coefficient=coefficient))
