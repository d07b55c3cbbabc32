"""
Langfuse Observability Configuration
Sets up Langfuse for tracking runs, sampler chains and experiment cells
"""
import os
import threading
import warnings
from typing import Optional

from dotenv import load_dotenv
from langfuse import Langfuse

# Suppress Langfuse context warnings
warnings.filterwarnings("ignore", category=UserWarning, module="langfuse")

load_dotenv()

_client = None
_client_lock = threading.Lock()


def tracing_enabled() -> bool:
    """Tracing is on unless SPECTRO_TRACING is 0/false/off or no Langfuse keys are set"""
    flag = os.getenv("SPECTRO_TRACING", "1").strip().lower()
    if flag in ("0", "false", "off", "no"):
        return False
    return bool(os.getenv("LANGFUSE_PUBLIC_KEY") and os.getenv("LANGFUSE_SECRET_KEY"))


def get_langfuse_client():
    """Get the Langfuse client instance, created on first use (None when tracing is off)"""
    global _client
    if not tracing_enabled():
        return None
    with _client_lock:
        if _client is None:
            try:
                _client = Langfuse(
                    public_key=os.getenv("LANGFUSE_PUBLIC_KEY"),
                    secret_key=os.getenv("LANGFUSE_SECRET_KEY"),
                    host=os.getenv("LANGFUSE_HOST", "https://cloud.langfuse.com"),
                )
            except Exception:
                # Observability is optional
                return None
    return _client


def reset_client() -> None:
    """Drop the cached client so the next call re-reads the environment"""
    global _client
    with _client_lock:
        _client = None


def trace_run(command: str, metadata: Optional[dict] = None):
    """
    Open the root span of a CLI run

    Args:
        command: Subcommand name; the span is called spectro_<command>
        metadata: Run configuration summary

    Returns:
        The span object, or None if tracing is off or fails
    """
    client = get_langfuse_client()
    if client is None:
        return None
    try:
        return client.start_span(name=f"spectro_{command}", metadata={"command": command, **(metadata or {})})
    except Exception:
        return None


def log_run_event(event_name: str, component: str, data: dict):
    """
    Log a custom event

    Args:
        event_name: e.g. run_started, chain_completed, seed_retry
        component: Emitting component (sampler, expectation, run_manager, ...)
        data: Event payload
    """
    client = get_langfuse_client()
    if client is None:
        return
    try:
        client.create_event(name=event_name, metadata={"component": component, **data})
    except Exception:
        # Events are not critical for the computation
        pass


def end_span(span, output: Optional[str] = None):
    """End a span returned by trace_run with optional output"""
    if span is None:
        return
    try:
        if output:
            span.update(output=output)
        span.end()
    except Exception:
        pass


def flush():
    client = get_langfuse_client()
    if client is None:
        return
    try:
        client.flush()
    except Exception:
        pass
