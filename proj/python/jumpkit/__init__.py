from ._jumpkit import *  # noqa: F401,F403
