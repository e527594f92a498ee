"""Exception types shared across the orchestrator."""

from __future__ import annotations


class OrchestratorError(Exception):
    """Base class for all orchestrator-raised errors."""


class SchemaError(OrchestratorError):
    """A document does not match the expected file schema."""


class InvariantError(OrchestratorError):
    """A structurally valid document violates a model invariant.

    Carries the id of the offending element so callers can point at it.
    """

    def __init__(self, message: str, element: str):
        super().__init__(f"{message} (element: {element})")
        self.element = element


class UnknownLink(OrchestratorError):
    def __init__(self, link_id: str):
        super().__init__(f"unknown link: {link_id}")
        self.link_id = link_id


class UnknownSite(OrchestratorError):
    def __init__(self, site_id: str):
        super().__init__(f"unknown site: {site_id}")
        self.site_id = site_id


class UnknownIntent(OrchestratorError):
    def __init__(self, intent_id: str):
        super().__init__(f"unknown intent: {intent_id}")
        self.intent_id = intent_id


class ValidationError(OrchestratorError):
    """Intent request rejected; ``reasons`` lists one message per bad field."""

    def __init__(self, reasons: list[str]):
        super().__init__("; ".join(reasons))
        self.reasons = list(reasons)


class UnresolvableSite(OrchestratorError):
    """A site has no UP attachment at any layer."""

    def __init__(self, site_id: str):
        super().__init__(f"site {site_id} has no UP attachment at any layer")
        self.site_id = site_id


class IllegalTransition(OrchestratorError):
    def __init__(self, current: str, requested: str):
        super().__init__(f"illegal intent transition {current} -> {requested}")
        self.current = current
        self.requested = requested


class NoFeasibleEncryptionLayer(OrchestratorError):
    """Endpoints share no encryption layer that passes the compliance profile."""


class NoFeasiblePath(OrchestratorError):
    """Every (layer, path, wavelength) candidate was rejected.

    ``candidates`` holds the per-candidate report (same shape as explain output).
    """

    def __init__(self, message: str, candidates: list[dict]):
        super().__init__(message)
        self.candidates = candidates


class Conflict(OrchestratorError):
    """A reservation lost a race against the current ledger; recompile."""


class InstallFailed(OrchestratorError):
    def __init__(self, device: str, reason: str):
        super().__init__(f"install failed at {device}: {reason}")
        self.device = device
        self.reason = reason


class InstallTimeout(OrchestratorError):
    def __init__(self, device: str, phase: str):
        super().__init__(f"southbound timeout at {device} during {phase}")
        self.device = device
        self.phase = phase


class Reject(OrchestratorError):
    """A device agent refused a southbound message."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class StartupError(OrchestratorError):
    """Service startup aborted (bad file or corrupt event log)."""
