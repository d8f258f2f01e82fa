"""Deep evolving fuzzy network for drifting data streams.

The heavy lifting lives in the compiled ``_core`` module; this package
re-exports the pieces a stream-learning experiment needs: a drifting-stream
generator, the drift detector, and the self-organising deep stack.
"""

from ._core import (
    DeepStack,
    DriftConfig,
    DriftPhase,
    GClassConfig,
    StackConfig,
    __version__,
    assess,
    chebyshev_expand,
    generate,
)

__all__ = [
    "DeepStack",
    "DriftConfig",
    "DriftPhase",
    "GClassConfig",
    "StackConfig",
    "__version__",
    "assess",
    "chebyshev_expand",
    "generate",
]
