import json

import pytest

from main import main
from phasespace.errors import SamplerError
from tools.output_tools import OutputTools

GAUSSIAN = {"type": "gaussian", "q": [0.5], "p": [-1.0]}


@pytest.fixture
def write_config(tmp_path):
    def write(payload, name="run.json"):
        path = tmp_path / name
        path.write_text(json.dumps(payload))
        return str(path)

    return write


def test_coeffs_prints_exact_weights(capsys, tmp_path):
    out = tmp_path / "coeffs.json"
    assert main(["coeffs", "--dim", "1", "--order", "3", "--out", str(out)]) == 0
    payload = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert payload["weights"] == [["7/4", 1], ["1", -1], ["1/4", 1]]
    assert payload["multiplicities"] == [1, 1, 1]
    assert payload["signed_mass"] == "1"
    written = OutputTools.read_json(str(out))
    assert written["weights"] == payload["weights"]
    assert "version" in written["meta"]


def test_coeffs_in_two_dimensions(capsys):
    assert main(["coeffs", "--dim", "2", "--order", "2"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["weights"] == [["2", 1], ["1/2", -1]]
    assert payload["multiplicities"] == [1, 2]


def test_coeffs_rejects_bad_arguments(capsys):
    assert main(["coeffs", "--dim", "0", "--order", "2"]) == 1
    assert "error:" in capsys.readouterr().err
    assert main(["coeffs", "--dim", "1", "--order", "0"]) == 1


def test_density_grid(write_config, tmp_path):
    config = write_config({
        "eps": 0.01,
        "state": GAUSSIAN,
        "density": {
            "which": "mu",
            "order": 3,
            "grid": {"q_min": 0.0, "q_max": 1.0, "p_min": -1.5, "p_max": -0.5, "nq": 11, "np": 11},
        },
    })
    out = tmp_path / "mu3.csv"
    assert main(["density", "--config", config, "--out", str(out)]) == 0
    meta, header, rows = OutputTools.read_csv(str(out))
    assert header == ["q", "p", "value"]
    assert len(rows) == 121
    assert meta["N"] == "3"
    assert min(float(r[2]) for r in rows) < 0


def test_density_profile(write_config, tmp_path):
    config = write_config({"eps": 0.01, "state": GAUSSIAN, "density": {"which": "profile"}})
    out = tmp_path / "profile.csv"
    assert main(["density", "--config", config, "--out", str(out)]) == 0
    _, header, rows = OutputTools.read_csv(str(out))
    assert header == ["radius", "wigner", "husimi", "mu1", "mu2", "mu3", "mu4"]
    assert len(rows) == 121


def test_sample_is_deterministic(write_config, tmp_path):
    config = write_config({
        "eps": 0.01,
        "state": GAUSSIAN,
        "seed": 3,
        "sample": {"orders": [0, 1], "chain": {"n_samples": 100, "burn_in": 10}},
    })
    first, second = tmp_path / "a" / "samples.csv", tmp_path / "b" / "samples.csv"
    assert main(["sample", "--config", config, "--out", str(first)]) == 0
    assert main(["sample", "--config", config, "--out", str(second), "--threads", "2"]) == 0
    for j in (0, 1):
        _, header, rows_a = OutputTools.read_csv(str(tmp_path / "a" / f"samples_j{j}.csv"))
        _, _, rows_b = OutputTools.read_csv(str(tmp_path / "b" / f"samples_j{j}.csv"))
        assert header == ["q_1", "p_1"]
        assert len(rows_a) == 100
        assert rows_a == rows_b
        sidecar = OutputTools.read_json(str(tmp_path / "a" / f"samples_j{j}.json"))
        assert sidecar["j"] == j
        assert sidecar["seed"] == 3


def test_sample_seed_override(write_config, tmp_path):
    config = write_config({"eps": 0.01, "state": GAUSSIAN, "sample": {"chain": {"n_samples": 50, "burn_in": 5}}})
    assert main(["sample", "--config", config, "--out", str(tmp_path / "s.csv"), "--seed", "8"]) == 0
    assert OutputTools.read_json(str(tmp_path / "s_j0.json"))["seed"] == 8


def test_expect_deterministic_matches_the_oracle(write_config, tmp_path):
    config = write_config({
        "eps": 0.01,
        "state": GAUSSIAN,
        "expect": {"observable": "q^4 + 1", "order": 3, "method": "deterministic"},
    })
    out = tmp_path / "expect.json"
    assert main(["expect", "--config", config, "--out", str(out)]) == 0
    payload = OutputTools.read_json(str(out))
    assert payload["estimate"] == pytest.approx(payload["oracle"], abs=1e-10)
    assert payload["oracle"] == pytest.approx(17 / 16 + 0.0075 + 0.000075)
    assert payload["meta"]["seed"] is None


def test_expect_mcmc(write_config, tmp_path):
    config = write_config({
        "eps": 0.01,
        "state": GAUSSIAN,
        "seed": 11,
        "expect": {"observable": "q^4 + 1", "order": 3, "chain": {"n_samples": 5000, "burn_in": 500}},
    })
    out = tmp_path / "expect.json"
    assert main(["expect", "--config", config, "--out", str(out)]) == 0
    payload = OutputTools.read_json(str(out))
    assert payload["method"] == "mcmc"
    assert len(payload["per_order_means"]) == 3
    assert abs(payload["estimate"] - payload["oracle"]) < 5 * payload["std_error"]
    assert payload["meta"]["seed"] == 11


def test_converge(write_config, tmp_path):
    config = write_config({"converge": {"observables": ["q^4 + 1"], "orders": [3], "eps_grid": [0.1, 0.01]}})
    out = tmp_path / "converge.csv"
    assert main(["converge", "--config", config, "--out", str(out)]) == 0
    _, header, rows = OutputTools.read_csv(str(out))
    assert header == ["eps", "N", "observable", "error", "slope_fit"]
    assert len(rows) == 2
    assert all(float(r[3]) < 1e-10 for r in rows)


def test_histogram(write_config, tmp_path):
    config = write_config({
        "eps": 0.01,
        "state": GAUSSIAN,
        "seed": 2,
        "histogram": {"order": 2, "bins": 12, "chain": {"n_samples": 500, "burn_in": 50}},
    })
    out = tmp_path / "hist.csv"
    assert main(["histogram", "--config", config, "--out", str(out)]) == 0
    _, header, rows = OutputTools.read_csv(str(out))
    assert header == ["q", "p", "signed_density"]
    assert len(rows) == 144


def test_hat_study(write_config, tmp_path):
    config = write_config({
        "eps": 0.05,
        "state": {"type": "hat", "q": 0.0},
        "seed": 4,
        "hat_study": {"observable": "q", "order": 1, "n_list": [50, 100], "runs": 2,
                      "chain": {"burn_in": 10}},
    })
    out = tmp_path / "hat.csv"
    assert main(["hat-study", "--config", config, "--out", str(out)]) == 0
    meta, header, rows = OutputTools.read_csv(str(out))
    assert header == ["n", "mean_abs_error", "slope_fit"]
    assert [r[0] for r in rows] == ["50", "100"]
    assert float(meta["reference"]) == pytest.approx(0.0, abs=1e-12)


def test_unknown_key_fails_without_output(write_config, tmp_path, capsys):
    config = write_config({"eps": 0.01, "state": GAUSSIAN, "density": {"which": "mu"}, "colour": "red"})
    out = tmp_path / "never.csv"
    assert main(["density", "--config", config, "--out", str(out)]) == 1
    assert not out.exists()
    assert "colour" in capsys.readouterr().err


def test_missing_block_and_missing_file(write_config, tmp_path):
    config = write_config({"eps": 0.01, "state": GAUSSIAN})
    assert main(["expect", "--config", config]) == 1
    assert main(["density", "--config", str(tmp_path / "absent.json")]) == 1


def test_unknown_command_exits_with_usage():
    with pytest.raises(SystemExit):
        main(["plot"])


def test_setup_smoke_check(capsys):
    from check_setup import check_smoke

    assert check_smoke()
    assert "15/8, -11/8, 5/8, -1/8" in capsys.readouterr().out


def test_coeffs_stdout_carries_metadata(capsys):
    assert main(["coeffs", "--dim", "1", "--order", "2", "--seed", "5", "--threads", "2"]) == 0
    meta = json.loads(capsys.readouterr().out)["meta"]
    assert meta["seed"] == 5
    assert meta["config_hash"] == OutputTools.config_hash({"dim": 1, "order": 2})
    assert "version" in meta
    assert main(["coeffs", "--dim", "1", "--order", "2", "--threads", "0"]) == 1


def test_negative_sample_order_writes_nothing(write_config, tmp_path, capsys):
    config = write_config({"eps": 0.01, "state": GAUSSIAN, "sample": {"orders": [0, -1]}})
    assert main(["sample", "--config", config, "--out", str(tmp_path / "s.csv")]) == 1
    assert list(tmp_path.glob("s_j*")) == []
    assert "orders" in capsys.readouterr().err
    empty = write_config({"eps": 0.01, "state": GAUSSIAN, "sample": {"orders": []}}, name="empty.json")
    assert main(["sample", "--config", empty, "--out", str(tmp_path / "s.csv")]) == 1


def test_failing_order_writes_nothing(write_config, tmp_path, monkeypatch):
    import estimators.run_manager as run_manager

    real_chain = run_manager.metropolis_chain

    def chain(s, j, cfg, threads=1):
        if j == 1:
            raise SamplerError("chain stuck")
        return real_chain(s, j, cfg, threads)

    monkeypatch.setattr(run_manager, "metropolis_chain", chain)
    config = write_config({"eps": 0.01, "state": GAUSSIAN,
                           "sample": {"orders": [0, 1], "chain": {"n_samples": 20, "burn_in": 5}}})
    assert main(["sample", "--config", config, "--out", str(tmp_path / "s.csv")]) == 1
    assert list(tmp_path.glob("s_j*")) == []
