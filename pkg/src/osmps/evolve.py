"""Trotterized tDMRG evolution for both legs of the method.

The thermal leg integrates d|rho>/dbeta = -chi|rho> from the identity; the
real-time leg integrates d|a>/dt = G|a> with the real antisymmetric
commutator generator, so its gates are orthogonal and conserve the norm.
Both legs share one driver that records bond growth, truncation, and OSEE,
and snapshots full state copies at requested stamps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .mps import OperatorMps, apply_two_site_gate, osee as osee_of
from .superop import SuperMap, bond_generators
from .tensor import matrix_exp

STAMP_TOL = 1e-12
DEFAULT_HARD_CAP = 4096


class ScheduleError(ValueError):
    """Invalid Trotter or snapshot configuration."""


class EvolutionAbort(RuntimeError):
    """Bond dimension hit the hard cap with the weight tolerance unmet.

    Carries the snapshots and log accumulated so far.
    """

    def __init__(self, message, snapshots, log):
        super().__init__(message)
        self.snapshots = snapshots
        self.log = log


@dataclass
class TrotterSchedule:
    """Cached per-bond gates grouped into sweeps.

    Each group is a list of (bond, gate) pairs applied in order, together
    with the canonical-center drift direction of that sweep.  Order 2 uses
    the symmetric composition: half-step odd bonds, full-step even bonds,
    half-step odd bonds.
    """

    order: int
    step: float
    direction: str  # "imaginary" | "real"
    basis_label: str
    groups: list[tuple[str, list[tuple[int, np.ndarray]]]]

    @property
    def is_real(self) -> bool:
        return all(not np.iscomplexobj(g) for _, group in self.groups for _, g in group)


def build_schedule(generator: SuperMap, step: float, order: int, direction: str) -> TrotterSchedule:
    """Exponentiate the per-bond generators into an even/odd gate schedule.

    direction="imaginary" gives gates exp(-step * chi_bond); "real" gives
    exp(+step * G_bond), orthogonal because G is antisymmetric.
    """
    if direction not in ("imaginary", "real"):
        raise ScheduleError(f"direction must be 'imaginary' or 'real', got {direction!r}")
    if order not in (1, 2):
        raise ScheduleError(f"Trotter order must be 1 or 2, got {order}")
    if step <= 0:
        raise ScheduleError(f"step must be positive, got {step}")
    gens = bond_generators(generator)
    sign = -1.0 if direction == "imaginary" else 1.0
    evens = list(range(0, generator.n - 1, 2))
    odds = list(range(1, generator.n - 1, 2))

    def gates(bonds, factor):
        return [(b, matrix_exp(gens[b], sign * factor * step)) for b in bonds]

    if order == 1:
        groups = [("right", gates(evens, 1.0)), ("left", gates(odds[::-1], 1.0))]
    else:
        half_asc = gates(odds, 0.5)
        groups = [
            ("right", half_asc),
            ("left", gates(evens[::-1], 1.0)),
            ("right", half_asc),
        ]
    groups = [(drift, grp) for drift, grp in groups if grp]
    return TrotterSchedule(order=order, step=step, direction=direction,
                           basis_label=generator.basis.label, groups=groups)


@dataclass
class EvolutionConfig:
    max_rank: int | None
    weight_tol: float
    step: float
    extent: float
    snapshot_points: list[float]
    osee_bond: int | None = None
    hard_cap: int = DEFAULT_HARD_CAP

    def __post_init__(self):
        self.snapshot_points = sorted(self.snapshot_points)
        self.step_count = _as_steps(self.extent, self.step, "extent")
        self.snapshot_steps = {}
        for x in self.snapshot_points:
            k = _as_steps(x, self.step, f"snapshot point {x}")
            if k > self.step_count:
                raise ScheduleError(f"snapshot point {x} beyond extent {self.extent}")
            self.snapshot_steps[k] = x


def _as_steps(x: float, step: float, what: str) -> int:
    k = round(x / step)
    if abs(x - k * step) > STAMP_TOL * max(1.0, abs(x)):
        raise ScheduleError(f"{what} = {x} is not a multiple of step {step}")
    return k


@dataclass
class LogRecord:
    stamp: float
    max_bond: int
    cum_discarded: float
    osee_bits: float
    log_norm: float


@dataclass
class EvolutionLog:
    stamp_kind: str  # "beta" | "t"
    records: list[LogRecord] = field(default_factory=list)


@dataclass
class Snapshot:
    stamp: float
    kind: str  # "beta" | "t"
    state: OperatorMps
    cum_discarded: float


def evolve(initial: OperatorMps, schedule: TrotterSchedule,
           config: EvolutionConfig) -> tuple[list[Snapshot], EvolutionLog]:
    """Run the schedule for config.extent, snapshotting at the requested stamps.

    Deterministic: no randomized truncation, fixed gate order.  Raises
    EvolutionAbort (with partial results attached) if the bond dimension
    hits the hard cap while the weight tolerance cannot be met.
    """
    if initial.basis.label != schedule.basis_label:
        raise ScheduleError(
            f"initial state basis {initial.basis.label} does not match "
            f"schedule basis {schedule.basis_label}"
        )
    if abs(schedule.step - config.step) > STAMP_TOL:
        raise ScheduleError(f"schedule step {schedule.step} != config step {config.step}")
    kind = "beta" if schedule.direction == "imaginary" else "t"
    expect_real = initial.is_real and schedule.is_real
    # The hard cap backstops an unbounded (or over-generous) max_rank; when it
    # is the binding constraint and the tolerance cannot be met, abort.
    if config.max_rank is None:
        effective_rank, cap_binding = config.hard_cap, True
    else:
        effective_rank = min(config.max_rank, config.hard_cap)
        cap_binding = config.max_rank > config.hard_cap

    log = EvolutionLog(stamp_kind=kind)
    snapshots: list[Snapshot] = []
    if 0 in config.snapshot_steps:
        snapshots.append(Snapshot(config.snapshot_steps[0], kind, initial.copy(), 0.0))

    state = initial.copy()
    cum = 0.0
    for k in range(1, config.step_count + 1):
        # Alternate the within-group sweep direction per step so the canonical
        # center never has to traverse the whole chain between steps.  Gates in
        # one group act on disjoint bonds, so their order is free.
        groups = schedule.groups
        if schedule.order == 2 and k % 2 == 0:
            groups = [("left" if drift == "right" else "right", group[::-1])
                      for drift, group in groups]
        for drift, group in groups:
            for bond, gate in group:
                state, w = apply_two_site_gate(
                    state, bond, gate, effective_rank, config.weight_tol,
                    center_after=drift,
                )
                cum += w
                if w > config.weight_tol and cap_binding and state.max_bond() >= config.hard_cap:
                    raise EvolutionAbort(
                        f"bond dimension {state.max_bond()} at hard cap {config.hard_cap} "
                        f"with discarded weight {w:.3e} > weight_tol {config.weight_tol:.3e}",
                        snapshots, log,
                    )
        stamp = k * config.step
        bits = osee_of(state, config.osee_bond) if config.osee_bond is not None else float("nan")
        log.records.append(LogRecord(stamp, state.max_bond(), cum, bits, state.log_scale))
        if k in config.snapshot_steps:
            if state.is_real != expect_real:
                raise ScheduleError("arithmetic flag changed during evolution")
            snapshots.append(Snapshot(config.snapshot_steps[k], kind, state.copy(), cum))
    return snapshots, log
