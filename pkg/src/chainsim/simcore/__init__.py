"""Discrete-event simulation core: engine, sampling kernels, world model."""

from .engine import EventQueue, SimEvent, derive_stream
from .kernels import HAVE_COMPILED, serve_store_day

__all__ = ["EventQueue", "SimEvent", "derive_stream", "HAVE_COMPILED", "serve_store_day"]
