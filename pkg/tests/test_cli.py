import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from pbcrowd import cli, scenario

SPARSE = scenario.load_bundled("sparse_passing_small")


@pytest.fixture(scope="module")
def sparse_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("scen") / "sparse.json"
    path.write_text(scenario.serialize(SPARSE))
    return path


def run(sparse_file, out, **kw):
    return cli.run(cli.RunConfig(sparse_file, out, **kw), log=io.StringIO())


def data_rows(path):
    lines = path.read_text().splitlines()
    assert lines[0] == cli.TRAJECTORY_HEADER
    return lines[1:]


def test_ten_steps_write_ten_rows_per_agent(sparse_file, tmp_path):
    assert run(sparse_file, tmp_path, steps=10) == 0
    rows = data_rows(tmp_path / "trajectory.csv")
    assert len(rows) == 10 * SPARSE.agent_count
    keys = [tuple(map(int, r.split(",")[:2])) for r in rows]
    assert keys == sorted(keys)
    assert len((tmp_path / "steps.csv").read_text().splitlines()) == 11
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["agents"] == 200 and report["steps"] == 10
    assert report["ms_per_frame_mean"] == pytest.approx(2 * report["wall_clock_ms_mean"])


def test_stride_five_over_ten_steps(sparse_file, tmp_path):
    assert run(sparse_file, tmp_path, steps=10, stride=5) == 0
    steps = {int(r.split(",")[0]) for r in data_rows(tmp_path / "trajectory.csv")}
    assert steps == {0, 5}


@pytest.mark.parametrize("steps, stride", [(7, 3), (12, 4), (1, 5)])
def test_row_count_contract(sparse_file, tmp_path, steps, stride):
    assert run(sparse_file, tmp_path, steps=steps, stride=stride) == 0
    rows = data_rows(tmp_path / "trajectory.csv")
    assert len(rows) == math.ceil(steps / stride) * SPARSE.agent_count


def test_missing_file_names_the_path(tmp_path, capsys):
    missing = tmp_path / "nope" / "absent.json"
    assert cli.main(["--scenario", str(missing), "--out", str(tmp_path / "o")]) != 0
    assert str(missing) in capsys.readouterr().err


def test_malformed_scenario(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"schema_version": 1,\n "name": }')
    assert cli.main(["--scenario", str(bad), "--out", str(tmp_path / "o")]) != 0
    assert "line 2" in capsys.readouterr().err


def test_invalid_scenario_field(tmp_path, capsys):
    doc = scenario.to_dict(SPARSE)
    doc["groups"][0]["mass"] = -1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    assert cli.main(["--scenario", str(bad), "--out", str(tmp_path / "o")]) != 0
    assert "groups[0].mass" in capsys.readouterr().err


def test_bad_flags(sparse_file, tmp_path):
    with pytest.raises(SystemExit) as err:
        cli.main(["--scenario", str(sparse_file), "--out", str(tmp_path), "--mode", "fast"])
    assert err.value.code != 0
    assert cli.main(["--scenario", str(sparse_file), "--out", str(tmp_path), "--stride", "0"]) != 0
    assert cli.main(["--scenario", str(sparse_file), "--out", str(tmp_path), "--steps", "0"]) != 0


def test_unwritable_output(sparse_file, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert run(sparse_file, blocker / "sub", steps=1) != 0


def test_same_seed_same_bytes(sparse_file, tmp_path):
    for name in ("a", "b", "c"):
        assert run(sparse_file, tmp_path / name, steps=30, seed=3 if name != "c" else 4) == 0
    a, b, c = ((tmp_path / n / "trajectory.csv").read_bytes() for n in "abc")
    assert a == b and a != c
    assert (tmp_path / "a" / "steps.csv").read_bytes() == (tmp_path / "b" / "steps.csv").read_bytes()


def test_mode_flag_applies(sparse_file, tmp_path):
    assert run(sparse_file, tmp_path, steps=2, mode="avoidance") == 0
    assert json.loads((tmp_path / "report.json").read_text())["mode"] == "avoidance"


def test_export_round_trip(tmp_path):
    state = scenario.build_state(SPARSE, 0)
    rng = np.random.default_rng(0)
    state.agents.position = rng.uniform(-1e3, 1e3, state.agents.position.shape)
    state.agents.velocity = rng.normal(0, 1, state.agents.velocity.shape) * 10.0 ** rng.integers(-12, 1, (200, 1))
    path = tmp_path / "t.csv"
    cli.export_trajectories([(0, state)], path)
    table = cli.read_trajectories(path)
    assert len(table) == 200
    for col, src in (("x", state.agents.position[:, 0]), ("vy", state.agents.velocity[:, 1])):
        printed = np.array([float(cli.fmt(v)) for v in src])
        np.testing.assert_array_equal(table[col], printed)
        np.testing.assert_allclose(table[col], src, rtol=5e-9, atol=0)


def test_one_agent_one_step(tmp_path):
    single = scenario.parse_scenario(json.dumps({
        "schema_version": 1, "name": "one",
        "goals": [{"kind": "points", "points": [[5, 0]]}],
        "groups": [{"formation": {"type": "explicit", "points": [[0, 0]]}}]}))
    state = scenario.build_state(single)
    path = tmp_path / "one.csv"
    cli.export_trajectories([(0, state)], path)
    assert path.read_text() == cli.TRAJECTORY_HEADER + "\n0,0,0,0,0,0,0.5\n"


def test_fixed_significant_digits():
    assert cli.fmt(1.0 / 3.0) == "0.333333333"
    assert cli.fmt(12345.678901234) == "12345.6789"
    assert cli.fmt(0.0) == "0"


def test_console_entry_point(sparse_file, tmp_path):
    out = subprocess.run([sys.executable, "-m", "pbcrowd.cli", "--scenario", str(sparse_file),
                          "--out", str(tmp_path), "--steps", "3", "--threads", "1"],
                         capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
    assert "ms/frame" in out.stdout
