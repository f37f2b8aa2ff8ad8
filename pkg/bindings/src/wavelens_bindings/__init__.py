"""Array-based bindings of the wavelens simulator for external autodiff.

`BoundSimulator` exposes the depth-dependent image formation as a
forward/backward pair over plain row-major numpy arrays (channel-last),
the calling pattern training frameworks expect from a custom-gradient
operation. Results match the core library bit-for-bit: both calls run the
same code paths.
"""

__version__ = "0.1.0"

from .simulator import BoundSimulator, core_version

__all__ = ["BoundSimulator", "core_version", "__version__"]
