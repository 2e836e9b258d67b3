"""Named errors raised by nudgecast.

The CLI catches NudgecastError and turns it into a diagnostic and exit status 1.
"""


class NudgecastError(Exception):
    """Base class for all nudgecast errors."""


class ConfigError(NudgecastError):
    """Configuration file missing, unreadable, or holding invalid values."""


class ParameterError(NudgecastError, ValueError):
    """A function argument lies outside its documented range."""


class EdgeListParseError(NudgecastError):
    """Edge-list file does not follow the `n <N>` + `v w` format."""


class SelfLoopError(NudgecastError):
    """An edge connects an agent to itself."""


class IsolatedAgentError(NudgecastError):
    """An agent has no neighbors, so its influence fraction is undefined."""


class DisconnectedGraphError(NudgecastError):
    """The influence network has more than one connected component."""


class ConnectivityRetryError(NudgecastError):
    """A generator did not produce a connected network within its retry bound."""


class AgentRecordError(NudgecastError):
    """An agent record is malformed or has a field out of range."""


class EmptySeedSetError(NudgecastError):
    """No agent is an initial adopter."""


class OracleSizeError(NudgecastError):
    """Network too large for exact enumeration of adopter sets."""


class NetworkMismatchError(NudgecastError):
    """Configurations compared side by side use different networks."""
