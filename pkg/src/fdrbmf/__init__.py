"""Boolean matrix factorization with false-discovery control of mined tiles."""
from ._backend import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
