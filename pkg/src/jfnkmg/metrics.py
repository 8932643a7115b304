"""Work metrics shared by the driver and the benchmark harness."""

from __future__ import annotations

__all__ = ["effective_ge"]


def effective_ge(per_level_ge, d: int, L: int | None = None) -> float:
    """Gradient evaluations with level l weighted by 2**(-d (L - l)).

    ``per_level_ge`` is either a sequence indexed by level (coarsest first)
    or a mapping level -> count. ``L`` defaults to the largest level present.
    """
    if hasattr(per_level_ge, "items"):
        items = list(per_level_ge.items())
    else:
        items = list(enumerate(per_level_ge))
    if any(c < 0 for _, c in items):
        raise ValueError("gradient-evaluation counts must be nonnegative")
    if L is None:
        L = max((l for l, _ in items), default=0)
    return float(sum(c * 2.0 ** (-d * (L - l)) for l, c in items))
