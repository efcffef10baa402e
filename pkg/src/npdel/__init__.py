"""Neural polar decoders for the binary deletion channel."""

from . import channels, harness, nn, npd, oracle, polar, trainer
from ._accel import HAVE_NUMBA, use_numba

__version__ = "0.1.0"

__all__ = ["HAVE_NUMBA", "channels", "harness", "nn", "npd", "oracle", "polar", "trainer",
           "use_numba"]
