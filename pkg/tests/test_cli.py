import json

import pytest

from minpart.cli import build_parser, length, main
from minpart.reporting import validate_artifact


def run(tmp_path, *argv):
    return main([*argv, "--out-dir", str(tmp_path)])


def load(path):
    doc = json.loads(path.read_text())
    validate_artifact(doc)
    return doc


@pytest.mark.parametrize("text, value", [("0.5", 0.5), ("pi", 3.141592653589793),
                                         ("pi/200", 3.141592653589793 / 200), ("2*pi/3", 2.0943951023931953)])
def test_length_parser(text, value):
    assert length(text) == pytest.approx(value)


def test_length_parser_rejects():
    import argparse

    for bad in ("abc", "-1", "0"):
        with pytest.raises(argparse.ArgumentTypeError):
            length(bad)


def test_spectrum_square(tmp_path, capsys):
    assert run(tmp_path, "spectrum", "--a", "3.1415926", "--b", "3.1415926", "--count", "5") == 0
    doc = load(tmp_path / "spectrum.json")
    levels = doc["result"]["levels"]
    assert len(levels) == 5
    assert levels[0]["value"] == pytest.approx(2.0, rel=1e-6)
    assert levels[0]["modes"] == [[1, 1]]
    assert doc["config"]["params"]["count"] == 5
    assert str(tmp_path / "spectrum.json") in capsys.readouterr().out


def test_spectrum_byte_reproducible(tmp_path):
    run(tmp_path, "spectrum", "--eps", "0.7", "--format", "json,csv")
    first = [(tmp_path / f).read_bytes() for f in ("spectrum.json", "spectrum.csv")]
    run(tmp_path, "spectrum", "--eps", "0.7", "--format", "json,csv")
    assert [(tmp_path / f).read_bytes() for f in ("spectrum.json", "spectrum.csv")] == first


def test_courant_sharp(tmp_path):
    assert run(tmp_path, "courant-sharp", "--eps", "1") == 0
    rules = {tuple(r["mode"]): r["active"] for r in load(tmp_path / "courant-sharp.json")["result"]["rules"]}
    assert rules[(2, 2)] and not rules[(3, 2)]


def test_nodal_family(tmp_path):
    assert run(tmp_path, "nodal-family", "--alpha", "2", "--beta", "1") == 0
    doc = load(tmp_path / "nodal-family.json")
    assert doc["result"]["domain_count"] == 3
    svg = (tmp_path / "nodal-family.svg").read_text()
    assert svg.startswith("<svg") and "<polyline" in svg and "<circle" in svg
    assert doc["content_hash"] in svg


def test_isospec(tmp_path):
    assert run(tmp_path, "isospec", "--eps", "1", "--k", "3", "--grids", "pi/20,pi/40", "--format", "json,csv") == 0
    doc = load(tmp_path / "isospec.json")
    labels = {p["label"] for p in doc["result"]["problems"]}
    assert {"ab", "uh", "lh", "leh", "rih"} <= labels
    assert (tmp_path / "isospec.csv").read_text().splitlines()[2] == "label,h,index,eigenvalue"


def test_partition3(tmp_path):
    assert run(tmp_path, "partition3", "--eps", "1", "--h", "pi/50", "--sweep", "8", "--out", "json+svg") == 0
    doc = load(tmp_path / "partition3.json")
    assert doc["result"]["sweep"]["best"]["Lambda"] < 10
    assert len(doc["result"]["triple_point_angles"]) == 3
    assert "<polygon" in (tmp_path / "partition3.svg").read_text()


def test_partition3_without_feasible_point_writes_json(tmp_path):
    assert run(tmp_path, "partition3", "--eps", "1", "--type", "c", "--h", "pi/30", "--sweep", "4") == 0
    doc = load(tmp_path / "partition3.json")
    assert doc["result"]["sweep"]["argmin"] is None
    assert not (tmp_path / "partition3.svg").exists()


def test_transition(tmp_path):
    assert run(tmp_path, "transition", "--eps-from", "0.6123", "--eps-to", "1", "--steps", "3",
               "--h", "pi/40", "--sweep", "12") == 0
    doc = load(tmp_path / "transition.json")
    rows = doc["result"]["rows"]
    assert len(rows) == 3 and doc["result"]["monotone"]
    assert rows[0]["eps"] == pytest.approx(0.6123724356957945)


@pytest.mark.parametrize(
    "argv",
    [
        ["spectrum", "--a", "4", "--b", "3"],
        ["spectrum", "--eps", "1", "--a", "1"],
        ["spectrum"],
        ["isospec", "--eps", "1", "--grids", "pi/30"],
        ["isospec", "--eps", "0.8", "--grids", "pi/20,pi/30", "--diagonals"],
        ["nodal-family", "--alpha", "1", "--beta", "0", "--resolution", "16"],
        ["partition3", "--eps", "0.8", "--diagonal", "--h", "pi/30"],
        ["transition", "--eps-from", "0.5"],
        ["spectrum", "--eps", "1", "--format", "svg"],
    ],
)
def test_invalid_input_exit_two(tmp_path, argv, capsys):
    assert run(tmp_path, *argv) == 2
    assert "minpart:" in capsys.readouterr().err


def test_argparse_errors_exit_two(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["partition3", "--type", "d"])
    assert exc.value.code == 2


def test_bad_thread_setting(tmp_path, monkeypatch):
    monkeypatch.setenv("MINPART_THREADS", "zero")
    assert run(tmp_path, "spectrum", "--eps", "1") == 2


def test_nonconvergence_exit_three(tmp_path, capsys):
    assert main(["--tol", "1e-30", "isospec", "--eps", "1", "--k", "2", "--grids", "pi/20,pi/30",
                 "--out-dir", str(tmp_path)]) == 3
    assert "did not reach" in capsys.readouterr().err


def test_help_documents_every_flag():
    import argparse

    parser = build_parser()
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    assert set(sub.choices) == {"spectrum", "courant-sharp", "nodal-family", "isospec", "partition3", "transition"}
    for name, p in [("minpart", parser), *sub.choices.items()]:
        for action in p._actions:
            if isinstance(action, argparse._SubParsersAction):
                continue
            assert action.help, (name, action.dest)
