"""Observability module for run tracking"""
from .langfuse_config import end_span, flush, get_langfuse_client, log_run_event, reset_client, trace_run, tracing_enabled

__all__ = ['get_langfuse_client', 'trace_run', 'log_run_event', 'end_span', 'flush', 'reset_client', 'tracing_enabled']
