"""Command-line pipeline: thermal | heisenberg | correlate | validate | report.

The thermal and heisenberg legs are independent jobs writing snapshot files
plus a manifest and an evolution-log CSV into the output directory;
`correlate` consumes only those files and writes the (beta, t) grid CSV;
`validate` replays a small-chain configuration against the dense oracle;
`report` renders the CSVs into gnuplot-ready column files.

Exit codes: 0 ok, 2 config error, 3 evolution abort (partial outputs are
flagged in the manifest), 4 incompatible inputs, 5 oracle cap exceeded.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import models
from .basis import make_basis
from .evolve import (
    EvolutionAbort,
    EvolutionConfig,
    EvolutionLog,
    ScheduleError,
    Snapshot,
    build_schedule,
    evolve,
)
from .models import (
    MajoranaPair,
    ModelError,
    SiamChain,
    XxzModel,
    majorana_states,
    siam_terms,
    spin_current_state,
    xxz_terms,
)
from .mps import MpsError, OperatorMps, identity_state, product_operator_state, symmetric_bond
from .observables import ObservableError, evaluate_grid, greens_function
from .oracle import (
    ORACLE_CAP,
    OracleCapError,
    dense_hamiltonian,
    dense_product,
    exact_thermal_expectation,
)
from .snapshot_io import (
    SnapshotFormatError,
    load_manifest_snapshots,
    save_snapshot,
    sha256_of,
    write_manifest,
)
from .superop import MultMpo, SuperMapError, build_chi, build_commutator_generator

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ABORT = 3
EXIT_INCOMPATIBLE = 4
EXIT_ORACLE_CAP = 5


class ConfigError(ValueError):
    """Schema violation in the run configuration."""


# ---------------------------------------------------------------------------
# configuration


@dataclass
class OperatorSpec:
    kind: str
    site: int | None = None
    sites: list[int] = field(default_factory=list)
    ops: list[str] = field(default_factory=list)
    coefficient: float = 1.0


@dataclass
class LegConfig:
    step: float
    order: int
    snapshots: list[float]
    extent: float
    osee_bond: int | None


@dataclass
class RunConfig:
    model_kind: str
    model: XxzModel | SiamChain
    thermal: LegConfig
    heisenberg: LegConfig
    initial_op: OperatorSpec
    b_op: OperatorSpec
    correlator_kind: str
    max_rank: int | None
    weight_tol: float
    hard_cap: int
    tolerance: float
    out_dir: str

    @property
    def n(self) -> int:
        return self.model.n


def _want(section: dict, key: str, types, where: str):
    if key not in section:
        raise ConfigError(f"missing key '{key}' in [{where}]")
    val = section[key]
    if not isinstance(val, types):
        raise ConfigError(f"[{where}] {key} has type {type(val).__name__}")
    return val


def _numeric(section, key, where, default=None):
    if key not in section:
        if default is None:
            raise ConfigError(f"missing key '{key}' in [{where}]")
        return default
    val = section[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"[{where}] {key} must be a number")
    return float(val)


def load_config(path) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config is not valid TOML: {exc}")

    msec = doc.get("model")
    if not isinstance(msec, dict):
        raise ConfigError("missing [model] section")
    kind = _want(msec, "kind", str, "model")
    n = _want(msec, "n", int, "model")
    if kind == "xxz":
        model = XxzModel(n=n, delta=_numeric(msec, "delta", "model"))
    elif kind == "siam":
        u = _numeric(msec, "u", "model")
        eps_f = _numeric(msec, "eps_f", "model")
        if "taus" in msec:
            taus = [float(x) for x in _want(msec, "taus", list, "model")]
            model = SiamChain(n=n, taus=taus, u=u, eps_f=eps_f)
        else:
            model = SiamChain.uniform(n, _numeric(msec, "tau", "model"), u=u, eps_f=eps_f)
    else:
        raise ConfigError(f"[model] kind must be 'xxz' or 'siam', got {kind!r}")

    trunc = doc.get("truncation", {})
    max_rank = trunc.get("max_rank")
    if max_rank is not None and (not isinstance(max_rank, int) or max_rank < 1):
        raise ConfigError("[truncation] max_rank must be a positive integer")
    weight_tol = _numeric(trunc, "weight_tol", "truncation", default=1e-12)
    if weight_tol < 0:
        raise ConfigError("[truncation] weight_tol must be nonnegative")
    hard_cap = trunc.get("hard_cap", 4096)
    if not isinstance(hard_cap, int) or hard_cap < 1:
        raise ConfigError("[truncation] hard_cap must be a positive integer")

    bsec = doc.get("basis", {})
    if bsec.get("thermal", "real") != "real":
        raise ConfigError("[basis] thermal evolution requires the real basis")
    if bsec.get("heisenberg", "hermitian") != "hermitian":
        raise ConfigError("[basis] heisenberg evolution requires the hermitian basis")
    run = doc.get("run", {})
    if run.get("deterministic", True) is not True:
        raise ConfigError("[run] only deterministic = true is supported")

    def leg(name) -> LegConfig:
        sec = doc.get(name)
        if not isinstance(sec, dict):
            raise ConfigError(f"missing [{name}] section")
        step = _numeric(sec, "step", name)
        if step <= 0:
            raise ConfigError(f"[{name}] step must be positive")
        order = sec.get("order", 2)
        if order not in (1, 2):
            raise ConfigError(f"[{name}] order must be 1 or 2")
        snaps = _want(sec, "snapshots", list, name)
        if not snaps or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in snaps):
            raise ConfigError(f"[{name}] snapshots must be a nonempty list of numbers")
        snaps = sorted(float(x) for x in snaps)
        if snaps[0] < 0:
            raise ConfigError(f"[{name}] snapshot points must be nonnegative")
        extent = _numeric(sec, "extent", name, default=snaps[-1])
        osee_bond = sec.get("osee_bond", symmetric_bond(n) if n >= 2 else None)
        if osee_bond is not None and not (0 <= osee_bond < n - 1):
            raise ConfigError(f"[{name}] osee_bond {osee_bond} outside chain of {n}")
        return LegConfig(step=step, order=order, snapshots=snaps, extent=extent,
                         osee_bond=osee_bond)

    thermal = leg("thermal")
    heisenberg = leg("heisenberg")

    hsec = doc["heisenberg"]
    initial_op = _operator_spec(hsec.get("operator"), "heisenberg.operator", model)
    osec = doc.get("observable", {})
    correlator_kind = osec.get("kind", "plain")
    if correlator_kind not in ("plain", "anticommutator", "greens"):
        raise ConfigError("[observable] kind must be plain, anticommutator, or greens")
    if correlator_kind == "greens":
        if initial_op.kind != "majorana_pair":
            raise ConfigError("greens correlators need heisenberg operator kind 'majorana_pair'")
        if not isinstance(model, SiamChain):
            raise ConfigError("greens correlators are defined for the siam model")
        b_op = OperatorSpec(kind="majorana_pair", site=initial_op.site)
    else:
        if initial_op.kind == "majorana_pair":
            raise ConfigError("operator kind 'majorana_pair' is only for greens runs")
        b_op = _operator_spec(osec.get("b"), "observable.b", model, allow_total=True)

    tolerance = _numeric(doc.get("validate", {}), "tolerance", "validate", default=1e-4)
    out_dir = doc.get("output", {}).get("dir", "out")
    cfg = RunConfig(model_kind=kind, model=model, thermal=thermal, heisenberg=heisenberg,
                    initial_op=initial_op, b_op=b_op, correlator_kind=correlator_kind,
                    max_rank=max_rank, weight_tol=weight_tol, hard_cap=hard_cap,
                    tolerance=tolerance, out_dir=out_dir)
    _resolve_stamps(cfg)
    return cfg


def _operator_spec(sec, where, model, allow_total=False) -> OperatorSpec:
    if not isinstance(sec, dict):
        raise ConfigError(f"missing [{where}] table")
    kind = _want(sec, "kind", str, where)
    allowed = {"identity", "current", "majorana_w", "majorana_wp", "majorana_pair", "product"}
    if allow_total:
        allowed.add("total_current")
    if kind not in allowed:
        raise ConfigError(f"[{where}] kind {kind!r} not in {sorted(allowed)}")
    spec = OperatorSpec(kind=kind)
    n = model.n
    if kind == "current":
        spec.site = _want(sec, "site", int, where)
        if not 0 <= spec.site < n - 1:
            raise ConfigError(f"[{where}] current bond {spec.site} outside chain of {n}")
    elif kind in ("majorana_w", "majorana_wp", "majorana_pair"):
        default = model.up_impurity if isinstance(model, SiamChain) else None
        spec.site = sec.get("site", default)
        if spec.site is None or not 0 <= spec.site < n:
            raise ConfigError(f"[{where}] majorana needs a valid 'site'")
    elif kind == "product":
        spec.sites = _want(sec, "sites", list, where)
        spec.ops = _want(sec, "ops", list, where)
        if len(spec.sites) != len(spec.ops) or not spec.sites:
            raise ConfigError(f"[{where}] sites and ops must be equal-length nonempty lists")
        for s in spec.sites:
            if not isinstance(s, int) or not 0 <= s < n:
                raise ConfigError(f"[{where}] site {s} outside chain of {n}")
        if len(set(spec.sites)) != len(spec.sites):
            raise ConfigError(f"[{where}] duplicate sites in product")
        for name in spec.ops:
            if name not in models.LOCAL_OPS:
                raise ConfigError(f"[{where}] unknown local operator {name!r}; "
                                  f"choose from {sorted(models.LOCAL_OPS)}")
        spec.coefficient = _numeric(sec, "coefficient", where, default=1.0)
    return spec


def _resolve_stamps(cfg: RunConfig):
    """Reject snapshot points that are not multiples of the step (checked at load)."""
    for name, leg in (("thermal", cfg.thermal), ("heisenberg", cfg.heisenberg)):
        for x in leg.snapshots + [leg.extent]:
            k = round(x / leg.step)
            if abs(x - k * leg.step) > 1e-12 * max(1.0, abs(x)):
                raise ConfigError(f"[{name}] {x} is not a multiple of step {leg.step}")
        if leg.extent < leg.snapshots[-1]:
            raise ConfigError(f"[{name}] extent {leg.extent} below last snapshot")


# ---------------------------------------------------------------------------
# shared pipeline pieces


def model_terms(cfg: RunConfig):
    return xxz_terms(cfg.model) if cfg.model_kind == "xxz" else siam_terms(cfg.model)


def initial_state(cfg: RunConfig, basis, which: str = "") -> OperatorMps:
    spec = cfg.initial_op
    kind = spec.kind
    if kind == "majorana_pair":
        kind = {"w": "majorana_w", "wp": "majorana_wp"}[which]
    n = cfg.n
    if kind == "identity":
        return identity_state(n, basis)
    if kind == "current":
        return spin_current_state(spec.site, n, basis)
    if kind in ("majorana_w", "majorana_wp"):
        w, wp = majorana_states(MajoranaPair(site=spec.site), n, basis)
        return w if kind == "majorana_w" else wp
    factors = [(s, models.LOCAL_OPS[o]) for s, o in zip(spec.sites, spec.ops)]
    factors = [(s, spec.coefficient * op) if i == 0 else (s, op)
               for i, (s, op) in enumerate(factors)]
    return product_operator_state(factors, basis, n)


def b_maps(spec: OperatorSpec, n: int, basis) -> tuple[MultMpo, MultMpo]:
    if spec.kind == "identity":
        return models.product_mult_maps([], n, basis)
    if spec.kind == "current":
        return models.current_mult_maps(spec.site, n, basis)
    if spec.kind == "total_current":
        return models.total_current_mult_maps(n, basis)
    if spec.kind in ("majorana_w", "majorana_wp"):
        pair = MajoranaPair(site=spec.site)
        factors = pair.w_factors(n) if spec.kind == "majorana_w" else pair.wp_factors(n)
        return models.product_mult_maps(factors, n, basis)
    factors = [(s, models.LOCAL_OPS[o]) for s, o in zip(spec.sites, spec.ops)]
    return models.product_mult_maps(factors, n, basis, coefficient=spec.coefficient)


def _evolution_config(cfg: RunConfig, leg: LegConfig) -> EvolutionConfig:
    return EvolutionConfig(max_rank=cfg.max_rank, weight_tol=cfg.weight_tol,
                           step=leg.step, extent=leg.extent,
                           snapshot_points=leg.snapshots, osee_bond=leg.osee_bond,
                           hard_cap=cfg.hard_cap)


def run_leg(cfg: RunConfig, direction: str, which: str = "") -> tuple[list[Snapshot], EvolutionLog, bool]:
    """Run one evolution leg; returns (snapshots, log, aborted)."""
    terms = model_terms(cfg)
    if direction == "imaginary":
        basis = make_basis(2, "real")
        gen = build_chi(terms, basis)
        leg = cfg.thermal
        init = identity_state(cfg.n, basis)
    else:
        basis = make_basis(2, "hermitian")
        gen = build_commutator_generator(terms, basis)
        leg = cfg.heisenberg
        init = initial_state(cfg, basis, which)
    schedule = build_schedule(gen, leg.step, leg.order, direction)
    try:
        snaps, log = evolve(init, schedule, _evolution_config(cfg, leg))
        return snaps, log, False
    except EvolutionAbort as abort:
        print(f"evolution aborted: {abort}", file=sys.stderr)
        return abort.snapshots, abort.log, True


# ---------------------------------------------------------------------------
# file emission


def _fmt(x: float) -> str:
    return repr(float(x))


def write_log_csv(path, log: EvolutionLog):
    col = "beta" if log.stamp_kind == "beta" else "t"
    lines = [f"{col},max_bond,cum_discarded_weight,osee_bits,log_norm"]
    for r in log.records:
        osee = "nan" if math.isnan(r.osee_bits) else _fmt(r.osee_bits)
        lines.append(f"{_fmt(r.stamp)},{r.max_bond},{_fmt(r.cum_discarded)},{osee},{_fmt(r.log_norm)}")
    _atomic_write(path, "\n".join(lines) + "\n")


def _atomic_write(path, text: str):
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def emit_leg(cfg: RunConfig, out: Path, prefix: str, snaps, log, aborted: bool, metadata: dict):
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, snap in enumerate(snaps):
        fname = f"{prefix}_{i:04d}.omps"
        save_snapshot(out / fname, snap)
        entries.append({
            "stamp": snap.stamp,
            "file": fname,
            "sha256": sha256_of(out / fname),
            "cum_discarded": snap.cum_discarded,
        })
    basis_label = snaps[0].state.basis.label if snaps else ""
    write_manifest(out / f"{prefix}_manifest.json", kind=prefix, n=cfg.n, d=2,
                   basis=basis_label, entries=entries, metadata=metadata, aborted=aborted)
    write_log_csv(out / f"{prefix}_log.csv", log)


def _leg_metadata(cfg: RunConfig, leg: LegConfig, operator: str) -> dict:
    return {
        "model": cfg.model_kind,
        "model_params": _model_params(cfg),
        "step": leg.step,
        "order": leg.order,
        "max_rank": cfg.max_rank,
        "weight_tol": cfg.weight_tol,
        "operator": operator,
    }


def _model_params(cfg: RunConfig) -> dict:
    if cfg.model_kind == "xxz":
        return {"n": cfg.model.n, "delta": cfg.model.delta}
    return {"n": cfg.model.n, "taus": cfg.model.taus, "u": cfg.model.u, "eps_f": cfg.model.eps_f}


# ---------------------------------------------------------------------------
# subcommands


def cmd_thermal(cfg: RunConfig, out: Path, threads: int) -> int:
    snaps, log, aborted = run_leg(cfg, "imaginary")
    emit_leg(cfg, out, "thermal", snaps, log, aborted, _leg_metadata(cfg, cfg.thermal, "identity"))
    return EXIT_ABORT if aborted else EXIT_OK


def cmd_heisenberg(cfg: RunConfig, out: Path, threads: int) -> int:
    if cfg.initial_op.kind == "majorana_pair":
        status = EXIT_OK
        for which, prefix in (("w", "heisenberg_w"), ("wp", "heisenberg_wp")):
            snaps, log, aborted = run_leg(cfg, "real", which)
            emit_leg(cfg, out, prefix, snaps, log, aborted,
                     _leg_metadata(cfg, cfg.heisenberg, f"majorana_{which}"))
            status = EXIT_ABORT if aborted else status
        return status
    snaps, log, aborted = run_leg(cfg, "real")
    emit_leg(cfg, out, "heisenberg", snaps, log, aborted,
             _leg_metadata(cfg, cfg.heisenberg, cfg.initial_op.kind))
    return EXIT_ABORT if aborted else EXIT_OK


def _check_manifest_pair(a: dict, b: dict):
    for key in ("n", "d"):
        if a[key] != b[key]:
            raise SnapshotFormatError(f"manifests disagree on {key}: {a[key]} != {b[key]}")
    if a.get("aborted") or b.get("aborted"):
        raise SnapshotFormatError("refusing to correlate a flagged (aborted) run")


def grid_csv_lines(grid) -> list[str]:
    lines = ["beta,t,value_re,value_im,denom_log,trunc_weight_thermal,trunc_weight_real"]
    for i, beta in enumerate(grid.beta_axis):
        for j, t in enumerate(grid.t_axis):
            v = grid.values[i, j]
            m = grid.meta[i][j]
            lines.append(
                f"{_fmt(beta)},{_fmt(t)},{_fmt(v.real)},{_fmt(v.imag)},"
                f"{_fmt(m.denom_log)},{_fmt(m.trunc_thermal)},{_fmt(m.trunc_real)}"
            )
    return lines


def cmd_correlate(cfg: RunConfig, out: Path, threads: int) -> int:
    hbasis = make_basis(2, "hermitian")
    tdoc, tsnaps = load_manifest_snapshots(out / "thermal_manifest.json")
    if cfg.correlator_kind == "greens":
        wdoc, wsnaps = load_manifest_snapshots(out / "heisenberg_w_manifest.json")
        pdoc, psnaps = load_manifest_snapshots(out / "heisenberg_wp_manifest.json")
        _check_manifest_pair(tdoc, wdoc)
        _check_manifest_pair(tdoc, pdoc)
        pair = MajoranaPair(site=cfg.initial_op.site)
        w_maps = models.product_mult_maps(pair.w_factors(cfg.n), cfg.n, hbasis)
        wp_maps = models.product_mult_maps(pair.wp_factors(cfg.n), cfg.n, hbasis)
        lines = ["beta,t,value_re,value_im,denom_log,trunc_weight_thermal,trunc_weight_real"]
        for tsnap in tsnaps:
            series = greens_function(tsnap, wsnaps, psnaps, w_maps, wp_maps)
            for j, t in enumerate(series.t_axis):
                v = series.values[j]
                m = series.meta[j]
                lines.append(
                    f"{_fmt(tsnap.stamp)},{_fmt(t)},{_fmt(v.real)},{_fmt(v.imag)},"
                    f"{_fmt(m.denom_log)},{_fmt(m.trunc_thermal)},{_fmt(m.trunc_real)}"
                )
        _atomic_write(out / "grid.csv", "\n".join(lines) + "\n")
        return EXIT_OK

    hdoc, hsnaps = load_manifest_snapshots(out / "heisenberg_manifest.json")
    _check_manifest_pair(tdoc, hdoc)
    left, right = b_maps(cfg.b_op, cfg.n, hbasis)
    grid = evaluate_grid(tsnaps, hsnaps, left,
                         b_right=right if cfg.correlator_kind == "anticommutator" else None,
                         kind=cfg.correlator_kind, label=cfg.b_op.kind, threads=threads)
    _atomic_write(out / "grid.csv", "\n".join(grid_csv_lines(grid)) + "\n")
    return EXIT_OK


def cmd_validate(cfg: RunConfig, out: Path, threads: int, tolerance: float | None) -> int:
    tol = cfg.tolerance if tolerance is None else tolerance
    if cfg.n > ORACLE_CAP:
        print(f"validate: n={cfg.n} exceeds the dense-oracle cap {ORACLE_CAP}", file=sys.stderr)
        return EXIT_ORACLE_CAP
    terms = model_terms(cfg)
    h_dense = dense_hamiltonian(terms)
    tsnaps, _, ab1 = run_leg(cfg, "imaginary")
    checks = []

    if cfg.correlator_kind == "greens":
        pair = MajoranaPair(site=cfg.initial_op.site)
        hbasis = make_basis(2, "hermitian")
        wsnaps, _, ab2 = run_leg(cfg, "real", "w")
        psnaps, _, ab3 = run_leg(cfg, "real", "wp")
        if ab1 or ab2 or ab3:
            return EXIT_ABORT
        w_maps = models.product_mult_maps(pair.w_factors(cfg.n), cfg.n, hbasis)
        wp_maps = models.product_mult_maps(pair.wp_factors(cfg.n), cfg.n, hbasis)
        wd = dense_product(pair.w_factors(cfg.n), cfg.n)
        wpd = dense_product(pair.wp_factors(cfg.n), cfg.n)
        f = (wd - 1j * wpd) / 2
        fd = (wd + 1j * wpd) / 2
        for tsnap in tsnaps:
            series = greens_function(tsnap, wsnaps, psnaps, w_maps, wp_maps)
            for j, t in enumerate(series.t_axis):
                exact = -1j * _dense_anticommutator(h_dense, fd, f, tsnap.stamp, t)
                dev = abs(series.values[j] - exact)
                checks.append((f"greens[beta={tsnap.stamp},t={t}]", dev))
            checks.append((f"greens_t0[beta={tsnap.stamp}] G(0)+i", abs(series.values[0] + 1j)))
    else:
        hsnaps, _, ab2 = run_leg(cfg, "real")
        if ab1 or ab2:
            return EXIT_ABORT
        hbasis = make_basis(2, "hermitian")
        left, right = b_maps(cfg.b_op, cfg.n, hbasis)
        grid = evaluate_grid(tsnaps, hsnaps, left,
                             b_right=right if cfg.correlator_kind == "anticommutator" else None,
                             kind=cfg.correlator_kind, threads=threads)
        a_dense = _dense_operator(cfg.initial_op, cfg.n, cfg)
        b_dense = _dense_operator(cfg.b_op, cfg.n, cfg)
        for i, beta in enumerate(grid.beta_axis):
            for j, t in enumerate(grid.t_axis):
                exact = exact_thermal_expectation(h_dense, a_dense, beta, t, b=b_dense)
                if cfg.correlator_kind == "anticommutator":
                    exact = exact + _dense_right_product(h_dense, a_dense, b_dense, beta, t)
                dev = abs(grid.values[i, j] - exact)
                checks.append((f"grid[beta={beta},t={t}]", dev))

    worst = 0.0
    failed = 0
    for name, dev in checks:
        ok = dev <= tol
        failed += 0 if ok else 1
        worst = max(worst, dev)
        print(f"{'PASS' if ok else 'FAIL'} {name} |dev|={dev:.3e} tol={tol:.1e}")
    print(f"validate: {len(checks) - failed}/{len(checks)} checks passed, "
          f"max |dev| = {worst:.3e}")
    return EXIT_OK if failed == 0 else 1


def _dense_anticommutator(h, x, y, beta, t):
    """<{x, y(t)}>_beta densely."""
    return (exact_thermal_expectation(h, y, beta, t, b=x)
            + _dense_right_product(h, y, x, beta, t))


def _dense_right_product(h, a, b, beta, t):
    """<a(t) b>_beta: evolve a, multiply b from the right."""
    w, v = np.linalg.eigh(h)
    w0 = w - w.min()
    rho = (v * np.exp(-beta * w0)) @ v.conj().T
    z = np.exp(-beta * w0).sum()
    u = (v * np.exp(1j * t * w)) @ v.conj().T
    a_t = u @ a @ u.conj().T
    return complex(np.trace(rho @ a_t @ b) / z)


def _dense_operator(spec: OperatorSpec, n: int, cfg: RunConfig) -> np.ndarray:
    if spec.kind == "identity":
        return np.eye(2**n, dtype=complex)
    if spec.kind == "current":
        return _dense_current(spec.site, n)
    if spec.kind == "total_current":
        return sum(_dense_current(m, n) for m in range(n - 1))
    if spec.kind in ("majorana_w", "majorana_wp"):
        pair = MajoranaPair(site=spec.site)
        factors = pair.w_factors(n) if spec.kind == "majorana_w" else pair.wp_factors(n)
        return dense_product(factors, n)
    factors = [(s, models.LOCAL_OPS[o]) for s, o in zip(spec.sites, spec.ops)]
    return spec.coefficient * dense_product(factors, n)


def _dense_current(m: int, n: int) -> np.ndarray:
    return 1j * (dense_product([(m, models.SP), (m + 1, models.SM)], n)
                 - dense_product([(m, models.SM), (m + 1, models.SP)], n))


def cmd_report(cfg: RunConfig, out: Path, threads: int) -> int:
    wrote = []
    for prefix, dat in (("thermal", "report_osee_beta.dat"),
                        ("heisenberg", "report_osee_t.dat"),
                        ("heisenberg_w", "report_osee_t_w.dat"),
                        ("heisenberg_wp", "report_osee_t_wp.dat")):
        log = out / f"{prefix}_log.csv"
        if log.exists():
            _report_log(log, out / dat)
            wrote.append(dat)
    grid = out / "grid.csv"
    if grid.exists():
        _report_grid(grid, out / "report_grid.dat")
        wrote.append("report_grid.dat")
    if not wrote:
        print(f"report: no CSV outputs found in {out}", file=sys.stderr)
        return EXIT_INCOMPATIBLE
    for name in wrote:
        print(f"wrote {out / name}")
    return EXIT_OK


def _report_log(csv_path: Path, dat_path: Path):
    rows = csv_path.read_text().strip().splitlines()
    header = rows[0].split(",")
    lines = ["# " + "  ".join(header)]
    for row in rows[1:]:
        lines.append("  ".join(row.split(",")))
    _atomic_write(dat_path, "\n".join(lines) + "\n")


def _report_grid(csv_path: Path, dat_path: Path):
    """Gnuplot blocks: one block per beta, columns t, re, im."""
    rows = csv_path.read_text().strip().splitlines()[1:]
    by_beta: dict[float, list[tuple[float, float, float]]] = {}
    for row in rows:
        beta, t, re, im = row.split(",")[:4]
        by_beta.setdefault(float(beta), []).append((float(t), float(re), float(im)))
    blocks = ["# t  value_re  value_im   (one block per beta)"]
    for beta in sorted(by_beta):
        blocks.append(f'# beta = {_fmt(beta)}')
        for t, re, im in sorted(by_beta[beta]):
            blocks.append(f"{_fmt(t)}  {_fmt(re)}  {_fmt(im)}")
        blocks.append("")
        blocks.append("")
    _atomic_write(dat_path, "\n".join(blocks).rstrip("\n") + "\n")


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="osmps", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("thermal", "heisenberg", "correlate", "validate", "report"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="TOML run configuration")
        p.add_argument("--out", default=None, help="output directory (overrides [output] dir)")
        p.add_argument("--threads", type=int, default=1, help="internal parallelism hint")
        if name == "validate":
            p.add_argument("--tolerance-override", type=float, default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except (ConfigError, ModelError, SuperMapError, ScheduleError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out) if args.out else Path(cfg.out_dir)
    threads = max(1, args.threads)
    try:
        if args.command == "thermal":
            return cmd_thermal(cfg, out, threads)
        if args.command == "heisenberg":
            return cmd_heisenberg(cfg, out, threads)
        if args.command == "correlate":
            return cmd_correlate(cfg, out, threads)
        if args.command == "validate":
            return cmd_validate(cfg, out, threads, args.tolerance_override)
        if args.command == "report":
            return cmd_report(cfg, out, threads)
    except (SnapshotFormatError, MpsError, ObservableError) as exc:
        print(f"incompatible inputs: {exc}", file=sys.stderr)
        return EXIT_INCOMPATIBLE
    except OracleCapError as exc:
        print(f"oracle cap: {exc}", file=sys.stderr)
        return EXIT_ORACLE_CAP
    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
