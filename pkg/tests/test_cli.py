import json
import math

import numpy as np
import pytest

from osmps.basis import make_basis
from osmps.cli import (
    EXIT_ABORT,
    EXIT_CONFIG,
    EXIT_INCOMPATIBLE,
    EXIT_ORACLE_CAP,
    EXIT_OK,
    ConfigError,
    load_config,
    main,
)
from osmps.evolve import Snapshot
from osmps.mps import identity_state, inner, product_operator_state
from osmps.models import SZ
from osmps.snapshot_io import (
    SnapshotFormatError,
    load_snapshot,
    read_manifest,
    save_snapshot,
    sha256_of,
)

HERM2 = make_basis(2, "hermitian")
REAL2 = make_basis(2, "real")

BASE_CONFIG = """
[model]
kind = "xxz"
n = 4
delta = 1.0

[truncation]
max_rank = 64
weight_tol = 1e-12

[thermal]
step = {tstep}
snapshots = {bsnaps}

[heisenberg]
step = {hstep}
snapshots = {tsnaps}

[heisenberg.operator]
kind = "current"
site = 1

[observable]
kind = "plain"

[observable.b]
kind = "current"
site = 1
"""


def write_config(path, tstep=0.05, hstep=0.05, bsnaps="[0.0, 0.25]", tsnaps="[0.0, 0.25]",
                 extra=""):
    path.write_text(BASE_CONFIG.format(tstep=tstep, hstep=hstep,
                                       bsnaps=bsnaps, tsnaps=tsnaps) + extra)
    return str(path)


def write_and_read(tmp_path, **kw) -> str:
    write_config(tmp_path / "_scratch.toml", **kw)
    return (tmp_path / "_scratch.toml").read_text()


class TestConfig:
    def test_valid_config_loads(self, tmp_path):
        cfg = load_config(write_config(tmp_path / "c.toml"))
        assert cfg.n == 4 and cfg.model_kind == "xxz"
        assert cfg.b_op.kind == "current"

    def test_missing_model(self, tmp_path):
        p = tmp_path / "c.toml"
        p.write_text("[thermal]\nstep = 0.1\nsnapshots = [0.1]\n")
        with pytest.raises(ConfigError):
            load_config(str(p))

    def test_bad_kind(self, tmp_path):
        p = tmp_path / "c.toml"
        p.write_text(BASE_CONFIG.format(tstep=0.05, hstep=0.05, bsnaps="[0.0]",
                                        tsnaps="[0.0]").replace('"xxz"', '"ising"'))
        with pytest.raises(ConfigError):
            load_config(str(p))

    def test_misaligned_snapshot(self, tmp_path):
        with pytest.raises(ConfigError, match="multiple of step"):
            load_config(write_config(tmp_path / "c.toml", bsnaps="[0.03]"))

    def test_config_error_exit_code(self, tmp_path):
        p = tmp_path / "bad.toml"
        p.write_text("[model]\nkind = 'xxz'\n")
        assert main(["thermal", "--config", str(p)]) == EXIT_CONFIG

    def test_greens_needs_majorana_pair(self, tmp_path):
        p = tmp_path / "c.toml"
        p.write_text(BASE_CONFIG.format(tstep=0.05, hstep=0.05, bsnaps="[0.0]",
                                        tsnaps="[0.0]").replace('kind = "plain"', 'kind = "greens"'))
        with pytest.raises(ConfigError, match="majorana_pair"):
            load_config(str(p))


class TestSnapshotIO:
    def test_roundtrip_bit_exact(self, tmp_path):
        state = product_operator_state([(0, SZ), (2, SZ)], HERM2, 4)
        state.log_scale = -1.25
        snap = Snapshot(0.75, "t", state, 3e-9)
        path = tmp_path / "s.omps"
        save_snapshot(path, snap)
        back = load_snapshot(path)
        assert back.stamp == 0.75 and back.kind == "t"
        assert back.state.log_scale == -1.25
        assert back.state.basis.label == "hermitian:d=2"
        for a, b in zip(state.tensors, back.state.tensors):
            assert a.dtype == b.dtype
            assert np.array_equal(a, b)

    def test_complex_roundtrip(self, tmp_path):
        rng = np.random.default_rng(5)
        from osmps.mps import OperatorMps

        tensors = [rng.normal(size=(1, 4, 3)) + 1j * rng.normal(size=(1, 4, 3)),
                   rng.normal(size=(3, 4, 1)) + 1j * rng.normal(size=(3, 4, 1))]
        state = OperatorMps(2, HERM2, tensors, 0.5, None)
        save_snapshot(tmp_path / "c.omps", Snapshot(1.0, "beta", state, 0.0))
        back = load_snapshot(tmp_path / "c.omps")
        for a, b in zip(state.tensors, back.state.tensors):
            assert np.array_equal(a, b)

    def test_bad_magic_rejected(self, tmp_path):
        p = tmp_path / "x.omps"
        p.write_bytes(b"NOPE" + b"\x00" * 64)
        with pytest.raises(SnapshotFormatError):
            load_snapshot(p)

    def test_unknown_version_rejected(self, tmp_path):
        state = identity_state(2, REAL2)
        p = tmp_path / "v.omps"
        save_snapshot(p, Snapshot(0.0, "beta", state, 0.0))
        raw = bytearray(p.read_bytes())
        raw[4] = 99
        p.write_bytes(bytes(raw))
        with pytest.raises(SnapshotFormatError, match="version"):
            load_snapshot(p)


class TestPipeline:
    def test_thermal_beta_zero_snapshot_is_identity(self, tmp_path):
        cfg = write_config(tmp_path / "c.toml", bsnaps="[0.0]")
        out = tmp_path / "out"
        assert main(["thermal", "--config", cfg, "--out", str(out)]) == EXIT_OK
        doc = read_manifest(out / "thermal_manifest.json")
        snap = load_snapshot(out / doc["snapshots"][0]["file"])
        e = identity_state(4, REAL2)
        assert abs(inner(snap.state, e) - 1) < 1e-12

    def test_heisenberg_t_zero_snapshot_is_initial(self, tmp_path):
        cfg = write_config(tmp_path / "c.toml", tsnaps="[0.0]")
        out = tmp_path / "out"
        assert main(["heisenberg", "--config", cfg, "--out", str(out)]) == EXIT_OK
        doc = read_manifest(out / "heisenberg_manifest.json")
        snap = load_snapshot(out / doc["snapshots"][0]["file"])
        from osmps.models import spin_current_state

        j = spin_current_state(1, 4, HERM2)
        overlap = inner(snap.state, j)
        assert abs(overlap - inner(j, j)) < 1e-12

    def test_identity_initial_operator_stays_e(self, tmp_path):
        cfg = write_config(tmp_path / "c.toml", tsnaps="[0.0, 0.25]",
                           )
        text = (tmp_path / "c.toml").read_text().replace(
            'kind = "current"\nsite = 1', 'kind = "identity"', 1)
        (tmp_path / "c.toml").write_text(text)
        out = tmp_path / "out"
        assert main(["heisenberg", "--config", str(tmp_path / "c.toml"),
                     "--out", str(out)]) == EXIT_OK
        doc = read_manifest(out / "heisenberg_manifest.json")
        e = identity_state(4, HERM2)
        for entry in doc["snapshots"]:
            snap = load_snapshot(out / entry["file"])
            assert abs(inner(snap.state, e) - 1) < 1e-12

    def test_correlate_single_cell_value(self, tmp_path):
        # n=2 chain, b = a = j_0, beta = 0, t = 0: exact value 1/2
        p = tmp_path / "c.toml"
        p.write_text("""
[model]
kind = "xxz"
n = 2
delta = 1.0
[thermal]
step = 0.05
snapshots = [0.0]
[heisenberg]
step = 0.05
snapshots = [0.0]
[heisenberg.operator]
kind = "current"
site = 0
[observable]
kind = "plain"
[observable.b]
kind = "current"
site = 0
""")
        out = tmp_path / "out"
        assert main(["thermal", "--config", str(p), "--out", str(out)]) == EXIT_OK
        assert main(["heisenberg", "--config", str(p), "--out", str(out)]) == EXIT_OK
        assert main(["correlate", "--config", str(p), "--out", str(out)]) == EXIT_OK
        rows = (out / "grid.csv").read_text().strip().splitlines()
        assert rows[0] == "beta,t,value_re,value_im,denom_log,trunc_weight_thermal,trunc_weight_real"
        beta, t, re, im = rows[1].split(",")[:4]
        assert float(beta) == 0.0 and float(t) == 0.0
        assert abs(float(re) - 0.5) < 1e-12
        assert abs(float(im)) < 1e-12

    def test_identity_b_gives_ones(self, tmp_path):
        text = write_config(tmp_path / "c.toml")
        content = (tmp_path / "c.toml").read_text()
        content = content.replace('[observable.b]\nkind = "current"\nsite = 1',
                                  '[observable.b]\nkind = "identity"')
        content = content.replace('[heisenberg.operator]\nkind = "current"\nsite = 1',
                                  '[heisenberg.operator]\nkind = "identity"')
        (tmp_path / "c.toml").write_text(content)
        out = tmp_path / "out"
        for cmd in ("thermal", "heisenberg", "correlate"):
            assert main([cmd, "--config", str(tmp_path / "c.toml"), "--out", str(out)]) == EXIT_OK
        for row in (out / "grid.csv").read_text().strip().splitlines()[1:]:
            assert abs(float(row.split(",")[2]) - 1.0) < 1e-10

    def test_rerun_byte_identical(self, tmp_path):
        cfg = write_config(tmp_path / "c.toml")
        out1, out2 = tmp_path / "a", tmp_path / "b"
        for out in (out1, out2):
            for cmd in ("thermal", "heisenberg", "correlate"):
                assert main([cmd, "--config", cfg, "--out", str(out)]) == EXIT_OK
        for f in sorted(out1.iterdir()):
            assert (out2 / f.name).read_bytes() == f.read_bytes(), f.name

    def test_thermal_osee_monotone_in_beta(self, tmp_path):
        p = tmp_path / "c.toml"
        p.write_text("""
[model]
kind = "xxz"
n = 8
delta = 1.0
[truncation]
max_rank = 64
weight_tol = 1e-10
[thermal]
step = 0.025
snapshots = [0.5, 1.0]
[heisenberg]
step = 0.05
snapshots = [0.0]
[heisenberg.operator]
kind = "current"
site = 3
[observable]
kind = "plain"
[observable.b]
kind = "current"
site = 3
""")
        out = tmp_path / "out"
        assert main(["thermal", "--config", str(p), "--out", str(out)]) == EXIT_OK
        rows = (out / "thermal_log.csv").read_text().strip().splitlines()[1:]
        by_stamp = {float(r.split(",")[0]): float(r.split(",")[3]) for r in rows}
        # nondecreasing across the requested beta grid
        assert 0.0 < by_stamp[0.5] <= by_stamp[1.0]

    def test_evolution_abort_exit_and_flag(self, tmp_path):
        harsh = tmp_path / "harsh.toml"
        harsh.write_text(write_and_read(tmp_path, tsnaps="[0.0, 1.0]").replace(
            "[truncation]\nmax_rank = 64\nweight_tol = 1e-12",
            "[truncation]\nweight_tol = 1e-14\nhard_cap = 2", 1))
        out = tmp_path / "out"
        assert main(["heisenberg", "--config", str(harsh), "--out", str(out)]) == EXIT_ABORT
        doc = read_manifest(out / "heisenberg_manifest.json")
        assert doc["aborted"] is True
        # correlate must refuse flagged runs (thermal leg from a sane config)
        sane = write_config(tmp_path / "sane.toml", tsnaps="[0.0, 1.0]")
        assert main(["thermal", "--config", sane, "--out", str(out)]) == EXIT_OK
        assert main(["correlate", "--config", sane, "--out", str(out)]) == EXIT_INCOMPATIBLE

    def test_missing_manifest_incompatible(self, tmp_path):
        cfg = write_config(tmp_path / "c.toml")
        out = tmp_path / "out"
        assert main(["correlate", "--config", cfg, "--out", str(out)]) == EXIT_INCOMPATIBLE


class TestValidate:
    def test_default_suite_passes(self, tmp_path):
        cfg = write_config(tmp_path / "c.toml", tstep=0.005, hstep=0.005,
                           bsnaps="[0.0, 0.25]", tsnaps="[0.0, 0.25]")
        assert main(["validate", "--config", cfg]) == EXIT_OK

    def test_coarse_step_fails(self, tmp_path):
        cfg = write_config(tmp_path / "c.toml", tstep=0.2, hstep=0.2,
                           bsnaps="[0.0, 1.0]", tsnaps="[0.0, 1.0]")
        assert main(["validate", "--config", cfg]) == 1

    def test_tolerance_override(self, tmp_path):
        cfg = write_config(tmp_path / "c.toml", tstep=0.2, hstep=0.2,
                           bsnaps="[0.0, 1.0]", tsnaps="[0.0, 1.0]")
        assert main(["validate", "--config", cfg, "--tolerance-override", "0.5"]) == EXIT_OK

    def test_oracle_cap_exit(self, tmp_path):
        cfg = write_config(tmp_path / "c.toml")
        text = (tmp_path / "c.toml").read_text().replace("n = 4", "n = 10")
        (tmp_path / "c.toml").write_text(text)
        assert main(["validate", "--config", cfg]) == EXIT_ORACLE_CAP


class TestReport:
    def test_emits_dat_files(self, tmp_path):
        cfg = write_config(tmp_path / "c.toml")
        out = tmp_path / "out"
        for cmd in ("thermal", "heisenberg", "correlate"):
            assert main([cmd, "--config", cfg, "--out", str(out)]) == EXIT_OK
        assert main(["report", "--config", cfg, "--out", str(out)]) == EXIT_OK
        assert (out / "report_osee_beta.dat").exists()
        assert (out / "report_osee_t.dat").exists()
        grid_dat = (out / "report_grid.dat").read_text()
        assert grid_dat.startswith("#")
        assert "beta = 0.25" in grid_dat

    def test_empty_dir_incompatible(self, tmp_path):
        cfg = write_config(tmp_path / "c.toml")
        out = tmp_path / "empty"
        out.mkdir()
        assert main(["report", "--config", cfg, "--out", str(out)]) == EXIT_INCOMPATIBLE


class TestDecoupling:
    def test_thermal_regeneration_leaves_heisenberg_untouched(self, tmp_path):
        cfg1 = write_config(tmp_path / "c1.toml", bsnaps="[0.0, 0.25]")
        out = tmp_path / "out"
        for cmd in ("thermal", "heisenberg", "correlate"):
            assert main([cmd, "--config", cfg1, "--out", str(out)]) == EXIT_OK
        heis_files = {f.name: sha256_of(f) for f in out.iterdir()
                      if f.name.startswith("heisenberg")}
        grid1 = (out / "grid.csv").read_text()
        # new beta grid, same t grid
        cfg2 = write_config(tmp_path / "c2.toml", bsnaps="[0.0, 0.1, 0.3]",
                            tstep=0.05)
        assert main(["thermal", "--config", cfg2, "--out", str(out)]) == EXIT_OK
        assert main(["correlate", "--config", cfg2, "--out", str(out)]) == EXIT_OK
        for name, digest in heis_files.items():
            assert sha256_of(out / name) == digest, f"{name} changed"
        grid2 = (out / "grid.csv").read_text()
        assert grid1 != grid2  # the beta axis did change
