from .config import GanConfig
from .networks import Discriminator, Generator, build_networks

__all__ = ["GanConfig", "Generator", "Discriminator", "build_networks"]
