"""Exception types shared across the package.

``ConfigError`` marks bad user input (config files, CLI arguments,
malformed serialized documents) and maps to exit code 2 in the CLI.
``GuardError`` marks a numerical or resource guard tripping (enumeration
too large, unphysical matrix, imaginary residue above tolerance) and
maps to exit code 3.
"""

__all__ = ["ConfigError", "GuardError"]


class ConfigError(ValueError):
    """Invalid configuration, argument, or serialized document."""


class GuardError(RuntimeError):
    """A numerical or resource guard rejected the computation."""
