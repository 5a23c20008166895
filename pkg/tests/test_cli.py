"""Command-line driver: argument plumbing and end-to-end smoke runs."""

import csv
import json
import socket
import subprocess
import sys
import time

import pytest

from lcsim.cli import _load_conditions, _parse_checkpoints, main


def test_parse_checkpoints():
    assert _parse_checkpoints("50,100,175") == (50, 100, 175)
    assert _parse_checkpoints("50:150:50") == (50, 100, 150)
    assert _parse_checkpoints("10:55:20") == (10, 30, 50)
    with pytest.raises(Exception):
        _parse_checkpoints("10:20")


def test_load_conditions(tmp_path):
    path = tmp_path / "conditions.json"
    path.write_text(json.dumps([
        {"n_obstacles": 10, "p_l": 0.1},
        {"occupancy": 22.7},
    ]))
    first, second = _load_conditions(path)
    assert first.n_obstacles == 10 and first.p_l == 0.1
    assert second.occupancy == 22.7 / 100.0  # percent on the CLI side
    assert second.p_l == 0.0


def test_genmap_then_run(tmp_path, capsys):
    world_path = tmp_path / "map.json"
    episode_path = tmp_path / "episode.csv"
    assert main(["genmap", "--width", "60", "--height", "60",
                 "--obstacles", "1", "--seed", "4",
                 "--out", str(world_path)]) == 0
    assert "landmarks" in capsys.readouterr().out
    assert world_path.exists()

    assert main(["run", "--world", str(world_path), "--policy", "random",
                 "--seed", "1", "--agents", "2", "--max-steps", "60",
                 "--out", str(episode_path)]) == 0
    with open(episode_path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0][:4] == ["episode", "step", "obs_count", "c0"]
    assert len(rows) == 61  # header + one row per step
    assert "steps 60" in capsys.readouterr().out


def test_curriculum_table(tmp_path, capsys):
    assert main(["curriculum", "--stage", "3", "--episodes", "10"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "episode,stage,n_obstacles,p_l"
    assert lines[1] == "0,3,1,0.05"
    assert lines[6] == "5,3,1,0.1"
    assert len(lines) == 11


def test_bench_cli(tmp_path, capsys):
    conditions = tmp_path / "conditions.json"
    conditions.write_text(json.dumps([{"n_obstacles": 0},
                                      {"n_obstacles": 1, "p_l": 0.1}]))
    out_dir = tmp_path / "bench"
    assert main(["bench", "--conditions", str(conditions),
                 "--checkpoints", "5,20", "--policy", "random",
                 "--trials", "2", "--seed", "2", "--agents", "2",
                 "--width", "60", "--height", "60", "--max-steps", "80",
                 "--out-dir", str(out_dir)]) == 0
    assert (out_dir / "aggregate.csv").exists()
    assert len(list(out_dir.glob("raw_*.csv"))) == 4
    assert len(list(out_dir.glob("*.svg"))) == 3


def test_serve_subprocess_round_trip():
    proc = subprocess.Popen(
        [sys.executable, "-m", "lcsim.cli", "serve", "--protocol", "env",
         "--port", "0"],
        stdout=subprocess.PIPE, stderr=subprocess.DEVNULL, text=True)
    try:
        banner = proc.stdout.readline().strip()
        assert banner.startswith("listening on ")
        host, port = banner.removeprefix("listening on ").rsplit(":", 1)
        with socket.create_connection((host, int(port)), timeout=30) as sk:
            rfile = sk.makefile("r", encoding="utf-8")
            sk.sendall(b'{"t":"reset","seed":2,"n_agents":2,'
                       b'"width":60,"height":60}\n')
            reply = json.loads(rfile.readline())
            assert reply["t"] == "obs"
            assert len(reply["grids"]) == 2
            sk.sendall(b'{"t":"close"}\n')
            assert json.loads(rfile.readline()) == {"t": "bye"}
    finally:
        proc.terminate()
        try:
            proc.wait(timeout=10)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()
