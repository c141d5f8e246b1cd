"""Wind-power forecasting toolkit (C++ core)."""

from ._core import *  # noqa: F401,F403
from ._core import WindfcError, RunConfig  # noqa: F401
