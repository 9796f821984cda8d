"""Controlled direct secure communication simulator: GHZ channels, supervised
teleportation, eavesdropping attack models, and channel-verification tests."""

__version__ = "0.1.0"

from . import cli, protocol, qsim, security

__all__ = ["cli", "protocol", "qsim", "security", "__version__"]
