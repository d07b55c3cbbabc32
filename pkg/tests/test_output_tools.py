import json
import os

import numpy as np
import pytest

from phasespace import __version__
from tools.config_tools import ConfigTools
from tools.output_tools import OutputTools
from phasespace.errors import ConfigError
from phasespace.states import GaussianPacket, Superposition


def test_config_hash_is_canonical():
    a = OutputTools.config_hash({"eps": 0.01, "state": {"q": [0.5], "p": [-1.0]}})
    b = OutputTools.config_hash({"state": {"p": [-1.0], "q": [0.5]}, "eps": 0.01})
    assert a == b
    assert len(a) == 16
    assert a != OutputTools.config_hash({"eps": 0.02})
    assert OutputTools.config_hash({"x": np.float64(1.5)}) == OutputTools.config_hash({"x": 1.5})


def test_metadata():
    meta = OutputTools.metadata(7, {"eps": 0.1}, N=3)
    assert meta["version"] == __version__
    assert meta["seed"] == 7
    assert meta["N"] == 3
    assert meta["config_hash"] == OutputTools.config_hash({"eps": 0.1})


def test_csv_round_trip(tmp_path):
    path = str(tmp_path / "nested" / "table.csv")
    rows = np.array([[0.1, 1.0 / 3.0], [2.0, -1e-300]])
    written = OutputTools.write_csv(path, ["q", "p"], rows, {"seed": 1, "eps": 0.01})
    assert os.path.isabs(written)
    meta, header, back = OutputTools.read_csv(path)
    assert meta == {"seed": "1", "eps": "0.01"}
    assert header == ["q", "p"]
    np.testing.assert_array_equal(np.array(back, dtype=float), rows)
    assert [f for f in os.listdir(tmp_path / "nested") if f.startswith(".tmp-")] == []


def test_csv_rejects_ragged_rows(tmp_path):
    path = tmp_path / "bad.csv"
    with pytest.raises(ValueError):
        OutputTools.write_csv(str(path), ["a", "b"], [[1, 2], [3]])
    assert not path.exists()


def test_json_carries_meta(tmp_path):
    path = str(tmp_path / "out.json")
    OutputTools.write_json(path, {"estimate": np.float64(1.25), "z": 1 + 2j, "counts": np.arange(3)}, {"seed": None})
    with open(path) as fh:
        doc = json.load(fh)
    assert doc == {"estimate": 1.25, "z": [1.0, 2.0], "counts": [0, 1, 2], "meta": {"seed": None}}
    assert OutputTools.sidecar_path("/x/samples_j2.csv") == "/x/samples_j2.json"


def test_config_builds_states():
    cfg = ConfigTools.parse_config({
        "eps": 0.05,
        "state": {
            "type": "superposition",
            "terms": [
                {"coeff": 1.0, "state": {"type": "gaussian", "q": [-1.0], "p": [0.0]}},
                {"coeff": [0.0, 1.0], "state": {"type": "gaussian", "q": [1.0], "p": [0.0]}},
            ],
        },
    })
    s = ConfigTools.build_state(cfg)
    assert isinstance(s, Superposition)
    assert isinstance(ConfigTools.build_state(ConfigTools.parse_config(
        {"eps": 0.1, "state": {"type": "gaussian", "q": [0.0], "p": [1.0]}})), GaussianPacket)
    with pytest.raises(ConfigError):
        ConfigTools.build_state(ConfigTools.parse_config({"eps": 0.1}))


def test_config_validation_errors(tmp_path):
    with pytest.raises(ConfigError):
        ConfigTools.parse_config({"eps": -1.0})
    with pytest.raises(ConfigError):
        ConfigTools.parse_config({"state": {"type": "squeezed"}})
    with pytest.raises(ConfigError):
        ConfigTools.parse_config({"expect": {"observable": "q", "order": 9}})
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(ConfigError):
        ConfigTools.load_config(str(broken))


def test_chain_resolution():
    cfg = ConfigTools.parse_config({
        "seed": 5,
        "quad": {"kind": "monte_carlo", "nodes": 500},
        "sample": {"chain": {"n_samples": 20, "seed": 1}},
    })
    chain = ConfigTools.resolve_chain(cfg.sample.chain, cfg)
    assert chain.seed == 5
    assert chain.quad.kind == "monte_carlo"
    assert ConfigTools.resolve_chain(cfg.sample.chain, cfg, seed=9).seed == 9
    assert ConfigTools.resolve_chain(cfg.sample.chain, ConfigTools.parse_config({})).seed == 1


def test_thread_resolution(monkeypatch):
    monkeypatch.delenv("SPECTRO_THREADS", raising=False)
    assert ConfigTools.resolve_threads(None) == 1
    monkeypatch.setenv("SPECTRO_THREADS", "4")
    assert ConfigTools.resolve_threads(None) == 4
    assert ConfigTools.resolve_threads(None, ConfigTools.parse_config({"threads": 2})) == 2
    assert ConfigTools.resolve_threads(3, ConfigTools.parse_config({"threads": 2})) == 3
    with pytest.raises(ConfigError):
        ConfigTools.resolve_threads(0)
