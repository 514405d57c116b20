import csv
import os

import pytest
import ujson

from shiftmpc.cli import (
    EXIT_BAD_CONFIG,
    EXIT_CAP_REACHED,
    EXIT_FAILURE,
    EXIT_OK,
    main,
)
from shiftmpc.cli._base import make_run_dir
from shiftmpc.conf.utils import patch_conf

ASSETS = os.path.join(os.path.dirname(__file__), "assets")


def _asset(name):
    return os.path.join(ASSETS, name)


def _run_dir(root, prefix):
    dirs = [d for d in os.listdir(root) if d.startswith(prefix)]
    assert len(dirs) == 1, dirs
    return os.path.join(root, dirs[0])


def _json(path):
    with open(path, encoding="utf-8") as f:
        return ujson.load(f)


def test_schema(capsys):
    assert main(["schema"]) == EXIT_OK

    schema = ujson.loads(capsys.readouterr().out)

    assert "plant" in schema["properties"]
    assert "sweep" in schema["properties"]


def test_no_command():
    assert main([]) == EXIT_FAILURE


def test_inspect(tmp_path, capsys):
    code = main(["inspect", "--config", _asset("small.json"), "--out", str(tmp_path)])

    assert code == EXIT_OK

    out = _run_dir(tmp_path, "small-inspect-")
    report = _json(os.path.join(out, "inspect.json"))
    config = _json(os.path.join(out, "config.json"))

    assert report["s"] == 3
    assert report["a2_decaying"] is True
    assert config["family"]["kind"] == "laguerre"
    assert config["constraints"]["b"] == [1.0, 1.0]
    assert ujson.loads(capsys.readouterr().out)["kind"] == "laguerre"


def test_nmax(tmp_path):
    assert main(["nmax", "--config", _asset("classic.py"), "--out", str(tmp_path)]) == 0

    certificate = _json(os.path.join(_run_dir(tmp_path, "classic-nmax-"), "nmax.json"))

    assert certificate["nmax"] == 2
    assert certificate["start"] == 0
    assert certificate["J"][0]["values"] == ["inf", "inf"]


def test_nmax_cap_reached(tmp_path):
    with patch_conf({"NMAX_CAP_FACTOR": 0}):
        code = main(["nmax", "--config", _asset("classic.py"), "--out", str(tmp_path)])

    assert code == EXIT_CAP_REACHED

    certificate = _json(os.path.join(_run_dir(tmp_path, "classic-nmax-"), "nmax.json"))

    assert certificate["cap_reached"] is True
    assert certificate["nmax"] is None


def test_run(tmp_path, capsys):
    code = main(
        [
            "run",
            "--config",
            _asset("small.json"),
            "--out",
            str(tmp_path),
            "--seed",
            "5",
        ]
    )

    assert code == EXIT_OK

    out = _run_dir(tmp_path, "small-run-")

    with open(os.path.join(out, "log.csv"), newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))

    summary = _json(os.path.join(out, "summary.json"))

    assert len(rows) == 1 + 30
    assert rows[0][:4] == ["k", "t", "x0", "x1"]
    assert summary["steps"] == 30
    assert summary["feasible"] is True
    assert summary["metadata"]["seed"] == 5
    assert _json(os.path.join(out, "config.json"))["seed"] == 5
    assert ujson.loads(capsys.readouterr().out)["steps"] == 30


def test_sweep(tmp_path):
    code = main(
        [
            "sweep",
            "--config",
            _asset("small_sweep.json"),
            "--out",
            str(tmp_path),
            "--workers",
            "1",
        ]
    )

    assert code == EXIT_OK

    with open(
        os.path.join(_run_dir(tmp_path, "small-sweep-sweep-"), "sweep.csv"),
        newline="",
        encoding="utf-8",
    ) as f:
        rows = list(csv.DictReader(f))

    assert [r["s"] for r in rows] == ["2", "3"]
    assert all(int(r["feasible"]) + int(r["infeasible"]) == 2 for r in rows)


def test_sweep_needs_a_sweep(tmp_path, capsys):
    code = main(["sweep", "--config", _asset("small.json"), "--out", str(tmp_path)])

    assert code == EXIT_BAD_CONFIG
    assert "sweep" in capsys.readouterr().err


@pytest.mark.parametrize(
    "name, location",
    [
        ("bad_family.json", "family"),
        ("bad_field.json", "plant.ts"),
        ("bad_extra.json", "horizon"),
        ("not_a_mapping.json", "(root)"),
        ("missing.json", "Cannot read"),
    ],
)
def test_bad_configs(tmp_path, capsys, name, location):
    code = main(["inspect", "--config", _asset(name), "--out", str(tmp_path)])

    assert code == EXIT_BAD_CONFIG
    assert location in capsys.readouterr().err


def test_run_dir_collision(tmp_path):
    first = make_run_dir(str(tmp_path), "x", "run")
    second = make_run_dir(str(tmp_path), "x", "run")

    assert first != second
    assert os.path.isdir(first) and os.path.isdir(second)
