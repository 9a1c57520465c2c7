"""Python bindings for the emlp C++ core."""

from ._emlp import *  # noqa: F401,F403
from ._emlp import __doc__  # noqa: F401
