"""Intent-based orchestrator for encrypted multi-layer transport services."""

__version__ = "0.1.0"
