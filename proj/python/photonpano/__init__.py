"""Panoramas and motion trajectories from single-photon binary frame streams.

Thin wrapper over the compiled extension module; everything in ``_core`` is
re-exported at package level. Installed wheels carry the extension inside
this package; in a build tree the module sits on sys.path instead.
"""

try:
    from ._core import *  # noqa: F401,F403
except ImportError:  # build-tree layout
    from _core import *  # noqa: F401,F403
