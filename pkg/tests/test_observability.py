import numpy as np
import pytest

import observability.langfuse_config as langfuse_config
from estimators.run_manager import RunManager
from phasespace.errors import ConfigError, QuadratureAccuracyWarning
from phasespace.quadrature import QuadratureSpec, inner_products
from phasespace.states import HermiteState
from tools.config_tools import ConfigTools


class FakeSpan:
    def __init__(self, name, metadata):
        self.name = name
        self.metadata = metadata
        self.output = None
        self.ended = False

    def update(self, output=None):
        self.output = output

    def end(self):
        self.ended = True


class FakeLangfuse:
    instances = []

    def __init__(self, public_key=None, secret_key=None, host=None):
        self.host = host
        self.spans = []
        self.events = []
        self.flushed = 0
        FakeLangfuse.instances.append(self)

    def start_span(self, name, metadata=None):
        span = FakeSpan(name, metadata)
        self.spans.append(span)
        return span

    def create_event(self, name, metadata=None):
        self.events.append((name, metadata))

    def flush(self):
        self.flushed += 1


@pytest.fixture
def fake_client(monkeypatch):
    FakeLangfuse.instances = []
    monkeypatch.setenv("SPECTRO_TRACING", "1")
    monkeypatch.setenv("LANGFUSE_PUBLIC_KEY", "pk-test")
    monkeypatch.setenv("LANGFUSE_SECRET_KEY", "sk-test")
    monkeypatch.delenv("LANGFUSE_HOST", raising=False)
    monkeypatch.setattr(langfuse_config, "Langfuse", FakeLangfuse)
    langfuse_config.reset_client()
    return langfuse_config.get_langfuse_client()


def test_tracing_switches(monkeypatch):
    monkeypatch.setenv("LANGFUSE_PUBLIC_KEY", "pk")
    monkeypatch.setenv("LANGFUSE_SECRET_KEY", "sk")
    for flag in ("0", "false", "OFF", "no"):
        monkeypatch.setenv("SPECTRO_TRACING", flag)
        assert not langfuse_config.tracing_enabled()
    monkeypatch.setenv("SPECTRO_TRACING", "1")
    assert langfuse_config.tracing_enabled()
    monkeypatch.delenv("LANGFUSE_SECRET_KEY")
    assert not langfuse_config.tracing_enabled()


def test_disabled_tracing_is_silent():
    assert langfuse_config.get_langfuse_client() is None
    assert langfuse_config.trace_run("density") is None
    langfuse_config.log_run_event("run_started", "test", {})
    langfuse_config.end_span(None, "done")
    langfuse_config.flush()


def test_client_is_created_once(fake_client):
    assert isinstance(fake_client, FakeLangfuse)
    assert fake_client.host == "https://cloud.langfuse.com"
    assert langfuse_config.get_langfuse_client() is fake_client
    assert len(FakeLangfuse.instances) == 1


def test_spans_and_events(fake_client):
    span = langfuse_config.trace_run("sample", {"seed": 3})
    assert span.name == "spectro_sample"
    assert span.metadata == {"command": "sample", "seed": 3}
    langfuse_config.log_run_event("chain_completed", "sampler", {"j": 1})
    assert fake_client.events == [("chain_completed", {"component": "sampler", "j": 1})]
    langfuse_config.end_span(span, "ok")
    assert span.ended and span.output == "ok"
    langfuse_config.flush()
    assert fake_client.flushed == 1


def test_client_failures_are_swallowed(fake_client, monkeypatch):
    def broken(*args, **kwargs):
        raise RuntimeError("network down")

    monkeypatch.setattr(fake_client, "create_event", broken)
    monkeypatch.setattr(fake_client, "start_span", broken)
    langfuse_config.log_run_event("run_started", "test", {})
    assert langfuse_config.trace_run("density") is None


def test_run_manager_reports_runs(fake_client, tmp_path):
    config = ConfigTools.parse_config({"converge": {"observables": ["q^2"], "orders": [2], "eps_grid": [0.1, 0.01],
                                                    "precision_digits": None}})
    out = str(tmp_path / "converge.csv")
    result = RunManager(config, out=out).process("converge")
    names = [name for name, _ in fake_client.events]
    assert names[0] == "run_started"
    assert names[-1] == "run_completed"
    assert "experiment_cell_done" in names
    assert fake_client.spans[0].name == "spectro_converge"
    assert fake_client.spans[0].ended
    assert result.outputs == [out]


def test_run_manager_reports_failures(fake_client):
    manager = RunManager(ConfigTools.parse_config({}))
    with pytest.raises(ConfigError):
        manager.process("expect")
    assert [name for name, _ in fake_client.events] == ["run_started", "run_failed"]
    assert fake_client.spans[0].output.startswith("failed")
    with pytest.raises(ConfigError):
        manager.process("plot")


def test_underresolved_window_is_reported(fake_client):
    s = HermiteState((0,), 0.1)
    with pytest.warns(QuadratureAccuracyWarning):
        inner_products(s, np.zeros((1, 2)), (30,), QuadratureSpec.gauss_hermite(40))
    name, metadata = fake_client.events[-1]
    assert name == "quadrature_warning"
    assert metadata == {"component": "quadrature", "k": [30], "kind": "gauss_hermite", "nodes": 40}
