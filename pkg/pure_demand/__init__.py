"""Pure demand semantics toolkit: interpreters, stack-stitching analysis and Horn clause checks."""

from .const import DOMAIN, VERSION

__version__ = VERSION

__all__ = ["DOMAIN", "VERSION", "__version__"]
