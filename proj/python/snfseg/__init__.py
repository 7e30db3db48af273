"""Hierarchical music structure analysis with similarity network fusion."""

try:
    from ._snfseg import *  # noqa: F401,F403
    from ._snfseg import SnfsegError, FeatureKind
except ImportError:  # extension built next to the sources rather than installed
    from _snfseg import *  # noqa: F401,F403
    from _snfseg import SnfsegError, FeatureKind

__all__ = [name for name in dir() if not name.startswith("_")]
