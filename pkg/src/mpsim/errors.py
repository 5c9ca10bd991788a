"""Error taxonomy shared by the library and the CLI.

Each class maps to one machine-readable error tag emitted by the CLI
(`config`, `gauge`, `blowup`, `nonconvergence`, `io`).
"""

from __future__ import annotations


class MpsimError(Exception):
    """Base class; `tag` is the machine-readable class name."""

    tag = "error"


class ConfigurationError(MpsimError):
    """Invalid parameters, malformed config, under-resolved requests."""

    tag = "config"


class GaugeError(MpsimError):
    """A vector potential violated the divergence-free constraint."""

    tag = "gauge"


class BlowupError(MpsimError):
    """Non-finite values appeared in a state or functional."""

    tag = "blowup"


class NonconvergenceError(MpsimError):
    """An iterative solve (fixed point, quadrature refinement) ran out of budget."""

    tag = "nonconvergence"


class FormatError(MpsimError):
    """Unreadable or inconsistent on-disk artifact (checkpoint, schema)."""

    tag = "io"
