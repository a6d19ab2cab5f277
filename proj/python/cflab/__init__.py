from ._cfl import *  # noqa: F401,F403
