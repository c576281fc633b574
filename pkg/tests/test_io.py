import json

import numpy as np
import pytest

import wavelab as wl
from wavelab import io
from wavelab.io import StateFileError


def test_state_round_trip_bit_exact(tmp_path, wave09, params):
    path = tmp_path / "wave.csv"
    io.write_state(path, wave09.profile, params, omega=wave09.omega,
                   extra={"residual_norm": wave09.residual_norm})
    U, meta, warns = io.read_state(path)
    assert np.array_equal(U.first.values, wave09.profile.first.values)
    assert np.array_equal(U.second.values, wave09.profile.second.values)
    assert meta["omega"] == wave09.omega
    assert warns == []


def test_state_meta_mismatch_warns(tmp_path, wave09, params):
    path = tmp_path / "wave.csv"
    io.write_state(path, wave09.profile, params, omega=wave09.omega,
                   extra={"residual_norm": wave09.residual_norm})
    meta_path = tmp_path / "wave.csv.meta.json"
    meta = json.loads(meta_path.read_text())
    meta["omega"] = 0.7  # stale speed: recomputed residual will not match
    meta_path.write_text(json.dumps(meta))
    _, _, warns = io.read_state(path)
    assert warns and "inconsistent" in warns[0]


def test_state_truncated_csv_error(tmp_path, wave09, params):
    path = tmp_path / "wave.csv"
    io.write_state(path, wave09.profile, params, omega=wave09.omega)
    lines = path.read_text().splitlines()
    bad = lines[:5] + ["0.1,0.2"] + lines[6:]
    path.write_text("\n".join(bad) + "\n")
    with pytest.raises(StateFileError, match="row 6"):
        io.read_state(path)


def test_state_missing_sidecar(tmp_path, wave09, params):
    path = tmp_path / "wave.csv"
    io.write_state(path, wave09.profile, params, omega=wave09.omega)
    (tmp_path / "wave.csv.meta.json").unlink()
    with pytest.raises(StateFileError, match="sidecar"):
        io.read_state(path)


def test_state_row_count_mismatch(tmp_path, wave09, params):
    path = tmp_path / "wave.csv"
    io.write_state(path, wave09.profile, params, omega=wave09.omega)
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-10]) + "\n")
    with pytest.raises(StateFileError, match="rows"):
        io.read_state(path)


def test_branch_round_trip(tmp_path, branch095):
    path = tmp_path / "branch.csv"
    io.write_branch(path, branch095)
    loaded = io.read_branch(path)
    assert np.array_equal(loaded.omega, branch095.omega)
    assert np.array_equal(loaded.d, branch095.d)
    assert np.array_equal(loaded.i2w, branch095.i2w)
    assert loaded.params.p == branch095.params.p
    assert loaded.points is None
    # derivative machinery works on the reloaded scalar branch
    dp = wl.dprime(loaded, 2)
    assert dp.via_charge == pytest.approx(wl.dprime(branch095, 2).via_charge)


def test_branch_bad_header(tmp_path, branch095):
    path = tmp_path / "branch.csv"
    io.write_branch(path, branch095)
    text = path.read_text().replace("Iw_min", "IWMIN")
    path.write_text(text)
    with pytest.raises(StateFileError, match="columns"):
        io.read_branch(path)


def test_trace_write(tmp_path, wave095):
    cfg = wl.EvolutionConfig(T=0.5, dt=0.01, monitor_stride=10)
    _, trace = wl.evolve(wave095.profile, wave095.params, cfg, reference=wave095.profile)
    path = tmp_path / "trace.csv"
    io.write_trace(path, trace)
    rows = path.read_text().splitlines()
    assert rows[0] == "t,H,Q,x_norm,orbit_distance"
    assert len(rows) == 1 + len(trace.times)


def test_write_dat(tmp_path):
    path = tmp_path / "data.dat"
    io.write_dat(path, {"x": [1.0, 2.0], "y": [3.0, 4.0]})
    lines = path.read_text().splitlines()
    assert lines[0] == "# x y"
    assert len(lines) == 3


def test_float_format_round_trips():
    vals = [1.0 / 3.0, np.pi, 1e-300, -2.5e17, 0.1 + 0.2]
    for v in vals:
        assert float(io.FLOAT_FMT.format(v)) == v
