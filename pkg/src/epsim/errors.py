"""Exception types shared across the simulator."""


class EpsimError(Exception):
    """Base class for all simulator errors."""


class ProtocolViolation(EpsimError):
    """A caller broke an API precondition (consumer bug, duplicate sequence, ...)."""


class ChannelShutdown(EpsimError):
    """Push refused because the channel was shut down."""


class ConfigError(EpsimError):
    """Invalid configuration (bad scenario field, QP budget exceeded, ...)."""


class FaultError(EpsimError):
    """Out-of-bounds access against a registered memory region."""

    def __init__(self, msg, rank=None, offset=None, length=None):
        super().__init__(msg)
        self.rank = rank
        self.offset = offset
        self.length = length


class ConnectionError_(EpsimError):
    """No established queue pair for the requested destination."""


class UnsupportedOperation(EpsimError):
    """Operation not available under the active transport profile."""


class InvariantViolation(EpsimError):
    """A runtime invariant tripped (canary overwrite, lost message, ...)."""


class RingDeadlock(EpsimError):
    """Ring-channel consumer never advanced; watchdog expired."""
