"""Levi-form signatures, tangential CR failure degrees and pairing asymptotics for CR manifolds."""

from .errors import CRLeviError
from .manifest import DefiningSystem, Manifest

__version__ = "0.1.0"

__all__ = ["CRLeviError", "DefiningSystem", "Manifest", "__version__"]
