"""Expectation values and correlators from saved thermal and Heisenberg states.

Every quantity is a ratio of operator-space inner products against the same
thermal state, so the overall magnitude of each state cancels; numerator and
denominator log-scales are subtracted before exponentiation, which keeps
large-beta runs finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .basis import change_of_basis
from .evolve import Snapshot
from .mps import MpsError, OperatorMps, identity_state, inner_scaled, transform_basis
from .superop import MultMpo

DENOMINATOR_FLOOR = 1e-300


class ObservableError(ValueError):
    """Inconsistent inputs to a correlator evaluation."""


def _to_basis(state: OperatorMps, basis) -> OperatorMps:
    if state.basis == basis:
        return state
    return transform_basis(state, change_of_basis(state.basis, basis), basis)


def _denominator(rho: OperatorMps, e: OperatorMps) -> tuple[float, float]:
    """<<rho|e>> as (mantissa, log); must be positive (it is 2^-n tr exp(-beta H))."""
    val, log = inner_scaled(rho, e)
    val = complex(val)
    if abs(val.imag) > 1e-10 * max(abs(val.real), 1e-30) or val.real <= DENOMINATOR_FLOOR:
        raise ObservableError(f"thermal normalization <<rho|e>> = {val} is not positive")
    return val.real, log


def thermal_expectation(rho: OperatorMps, a: OperatorMps,
                        e: OperatorMps | None = None) -> complex:
    """<a>_beta = <<rho|a>> / <<rho|e>>, transforming rho into a's basis if needed."""
    rho = _to_basis(rho, a.basis)
    if e is None:
        e = identity_state(a.n, a.basis)
    else:
        e = _to_basis(e, a.basis)
    num, log_num = inner_scaled(rho, a)
    den, log_den = _denominator(rho, e)
    return complex(num) / den * math.exp(log_num - log_den)


def sandwich_scaled(x: OperatorMps, mpo: MultMpo, y: OperatorMps) -> tuple[complex, float]:
    """<<x| B |y>> as (mantissa, log), summed over the map's product terms."""
    if mpo.basis != y.basis:
        raise MpsError(f"map basis {mpo.basis.label} != state basis {y.basis.label}")
    if x.basis != y.basis:
        raise MpsError(f"basis mismatch: {x.basis.label} vs {y.basis.label}")
    total = 0.0 + 0.0j
    for term in mpo.terms:
        env = np.ones((1, 1))
        for j, (xt, yt) in enumerate(zip(x.tensors, y.tensors)):
            if j in term:
                yt = np.tensordot(term[j], yt, axes=(1, 1)).transpose(1, 0, 2)
            env = np.tensordot(env, xt.conj(), axes=(0, 0))
            env = np.tensordot(env, yt, axes=((0, 1), (0, 1)))
        total += complex(env[0, 0])
    return total, x.log_scale + y.log_scale


def time_correlation(rho: OperatorMps, b_map: MultMpo, a_t: OperatorMps,
                     e: OperatorMps | None = None) -> complex:
    """<b a(t)>_beta for a left map, <a(t) b>_beta for a right map."""
    rho = _to_basis(rho, a_t.basis)
    if e is None:
        e = identity_state(a_t.n, a_t.basis)
    else:
        e = _to_basis(e, a_t.basis)
    num, log_num = sandwich_scaled(rho, b_map, a_t)
    den, log_den = _denominator(rho, e)
    return num / den * math.exp(log_num - log_den)


@dataclass
class CellMeta:
    denom_log: float
    trunc_thermal: float
    trunc_real: float


@dataclass
class ExpectationGrid:
    """Correlator values on the cross product of the beta and t snapshot axes."""

    label: str
    beta_axis: list[float]
    t_axis: list[float]
    values: np.ndarray  # complex, shape (len(beta_axis), len(t_axis))
    meta: list[list[CellMeta]]


def evaluate_grid(thermal_snaps: list[Snapshot], heisenberg_snaps: list[Snapshot],
                  b_left: MultMpo, e: OperatorMps | None = None,
                  b_right: MultMpo | None = None, kind: str = "plain",
                  label: str = "correlator", threads: int = 1) -> ExpectationGrid:
    """One cell per (beta, t) pair: <b a(t)>_beta, or the anticommutator when
    kind="anticommutator" (requires b_right).

    Snapshots are read-only; the thermal states are transformed into the
    Heisenberg basis once per beta and denominators are cached per beta.
    """
    if not thermal_snaps or not heisenberg_snaps:
        raise ObservableError("both snapshot sets must be nonempty")
    if kind not in ("plain", "anticommutator"):
        raise ObservableError(f"unsupported correlator kind {kind!r}")
    if kind == "anticommutator" and b_right is None:
        raise ObservableError("anticommutator needs the right-multiplication map")
    basis = heisenberg_snaps[0].state.basis
    if e is None:
        e = identity_state(heisenberg_snaps[0].state.n, basis)
    else:
        e = _to_basis(e, basis)

    beta_axis = [s.stamp for s in thermal_snaps]
    t_axis = [s.stamp for s in heisenberg_snaps]
    values = np.zeros((len(beta_axis), len(t_axis)), dtype=complex)
    meta = [[None] * len(t_axis) for _ in beta_axis]

    def one_beta(i: int):
        rho = _to_basis(thermal_snaps[i].state, basis)
        den, log_den = _denominator(rho, e)
        for j, hsnap in enumerate(heisenberg_snaps):
            num, log_num = sandwich_scaled(rho, b_left, hsnap.state)
            if kind == "anticommutator":
                num2, log2 = sandwich_scaled(rho, b_right, hsnap.state)
                num += num2 * math.exp(log2 - log_num)
            values[i, j] = num / den * math.exp(log_num - log_den)
            meta[i][j] = CellMeta(denom_log=math.log(den) + log_den,
                                  trunc_thermal=thermal_snaps[i].cum_discarded,
                                  trunc_real=hsnap.cum_discarded)

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(one_beta, range(len(beta_axis))))
    else:
        for i in range(len(beta_axis)):
            one_beta(i)
    return ExpectationGrid(label=label, beta_axis=beta_axis, t_axis=t_axis,
                           values=values, meta=meta)


@dataclass
class GreenFunctionSeries:
    """G(t) = -i <{f^dag, f(t)}>_beta assembled from Majorana correlators.

    anticommutators maps the four labels "ww", "wpwp", "wwp", "wpw" to the
    series <{x, y(t)}> they denote; G(0) must come out as -i.
    """

    beta: float
    t_axis: list[float]
    values: np.ndarray
    anticommutators: dict[str, np.ndarray] = field(repr=False)
    meta: list[CellMeta] = field(default_factory=list)


def greens_function(rho: Snapshot | OperatorMps, w_snaps: list[Snapshot],
                    wp_snaps: list[Snapshot], w_maps: tuple[MultMpo, MultMpo],
                    wp_maps: tuple[MultMpo, MultMpo],
                    e: OperatorMps | None = None) -> GreenFunctionSeries:
    """Combine the four Majorana anticommutator series into the Green's function.

    With f = (w - i w')/2 the expansion of -i <{f^dag, f(t)}> is
    -(i/4) [<{w, w(t)}> + <{w', w'(t)}>] - (1/4) [<{w, w'(t)}> - <{w', w(t)}>],
    validated against the dense oracle in the test suite.
    """
    stamps_w = [s.stamp for s in w_snaps]
    stamps_wp = [s.stamp for s in wp_snaps]
    if stamps_w != stamps_wp:
        raise ObservableError(f"snapshot stamps differ: {stamps_w} vs {stamps_wp}")
    if isinstance(rho, Snapshot):
        beta, rho_state, trunc_th = rho.stamp, rho.state, rho.cum_discarded
    else:
        beta, rho_state, trunc_th = float("nan"), rho, 0.0
    basis = w_snaps[0].state.basis
    rho_state = _to_basis(rho_state, basis)
    if e is None:
        e = identity_state(w_snaps[0].state.n, basis)
    else:
        e = _to_basis(e, basis)
    den, log_den = _denominator(rho_state, e)

    def anticomm(maps, snaps):
        left, right = maps
        out = np.zeros(len(snaps), dtype=complex)
        for j, snap in enumerate(snaps):
            n1, l1 = sandwich_scaled(rho_state, left, snap.state)
            n2, l2 = sandwich_scaled(rho_state, right, snap.state)
            out[j] = (n1 * math.exp(l1 - log_den) + n2 * math.exp(l2 - log_den)) / den
        return out

    series = {
        "ww": anticomm(w_maps, w_snaps),
        "wpwp": anticomm(wp_maps, wp_snaps),
        "wwp": anticomm(w_maps, wp_snaps),
        "wpw": anticomm(wp_maps, w_snaps),
    }
    values = (-0.25j * (series["ww"] + series["wpwp"])
              - 0.25 * (series["wwp"] - series["wpw"]))
    meta = [CellMeta(denom_log=math.log(den) + log_den, trunc_thermal=trunc_th,
                     trunc_real=max(w.cum_discarded, p.cum_discarded))
            for w, p in zip(w_snaps, wp_snaps)]
    return GreenFunctionSeries(beta=beta, t_axis=stamps_w, values=values,
                               anticommutators=series, meta=meta)
