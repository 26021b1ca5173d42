"""Training-free forgery evidence mining."""

from .config import RunConfig
from .pipeline import MiningResult, mine

__version__ = "0.1.0"

__all__ = ["MiningResult", "RunConfig", "mine", "__version__"]
