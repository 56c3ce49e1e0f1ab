import json

import pytest

from chiralsync.cli import EXIT_INVALID, EXIT_NUMERICAL, EXIT_OK, main

DIMER = {"n_nodes": 2, "edges": [[0, 1]], "frequencies": [1.0, 1.9], "pump_rates": [0.045, 0.0], "gamma": 0.05}


def _write(path, doc):
    path.write_text(json.dumps(doc))
    return path


def test_validate_ok(tmp_path, capsys):
    assert main(["validate", str(_write(tmp_path / "n.json", DIMER))]) == EXIT_OK


def test_validate_bidirectional(tmp_path, capsys):
    bad = dict(DIMER, edges=[[0, 1], [1, 0]])
    assert main(["validate", str(_write(tmp_path / "n.json", bad))]) == EXIT_INVALID
    assert "(0,1)" in capsys.readouterr().out


def test_validate_missing_file(tmp_path):
    assert main(["validate", str(tmp_path / "missing.json"), "--quiet"]) == EXIT_INVALID


def test_predict_writes_json(tmp_path, capsys):
    code = main(["predict", str(_write(tmp_path / "n.json", DIMER)), "--out", str(tmp_path / "o")])
    assert code == EXIT_OK
    assert json.loads(capsys.readouterr().out)["clusters"][0]["nodes"] == [0, 1]
    assert (tmp_path / "o" / "prediction.json").exists()


def test_simulate(tmp_path):
    sc = {"name": "d", "network": DIMER, "time": {"horizon": 300.0}, "analyses": {"pearson": True}}
    assert main(["simulate", str(_write(tmp_path / "s.json", sc)), "--out", str(tmp_path / "o"), "--quiet"]) == EXIT_OK
    assert (tmp_path / "o" / "summary.json").exists()


def test_simulate_bad_scenario(tmp_path):
    assert main(["simulate", str(_write(tmp_path / "s.json", {"network": DIMER})), "--quiet"]) == EXIT_INVALID


def test_simulate_unstable_discord_is_numerical(tmp_path, caplog):
    # over-pumped source grows until the covariance loses precision
    net = dict(DIMER, pump_rates=[0.2, 0.0])
    sc = {"name": "u", "network": net, "time": {"horizon": 400.0}, "analyses": {"discord_pairs": [[0, 1]]}}
    code = main(["simulate", str(_write(tmp_path / "s.json", sc)), "--out", str(tmp_path / "o"), "--quiet"])
    assert code == EXIT_NUMERICAL
    assert "growing" in caplog.text


def test_predict_unstable_network(tmp_path, capsys):
    net = dict(DIMER, pump_rates=[0.2, 0.0])
    assert main(["predict", str(_write(tmp_path / "n.json", net)), "--quiet"]) == EXIT_OK


def test_reproduce_rejects_unknown_figure():
    with pytest.raises(SystemExit):
        main(["reproduce", "42"])
