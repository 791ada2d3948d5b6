"""Zero-order-hold reference and load signals.

A signal is a finite list of breakpoints with held values:
value(t) = values[j] on [times[j], times[j+1]), and values[-1] from the
last breakpoint onward. Times before the first breakpoint clamp to the
first value. Breakpoints are stored as plain tuples so signals compare
exactly and round-trip through configuration files unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatch, ValidationError


@dataclass(frozen=True)
class PiecewiseSignal:
    """Right-continuous step function defined by (times, values) pairs."""

    times: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        try:
            times = tuple(float(x) for x in self.times)
            values = tuple(float(x) for x in self.values)
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"breakpoints must be numeric: {exc}") from exc
        if len(times) == 0:
            raise ValidationError("signal needs at least one breakpoint")
        if len(times) != len(values):
            raise LengthMismatch(
                f"times ({len(times)}) and values ({len(values)}) must align"
            )
        if times[0] != 0.0:
            raise ValidationError(f"first breakpoint must be t = 0 (got {times[0]!r})")
        if any(b - a <= 0 for a, b in zip(times, times[1:])):
            raise ValidationError("breakpoint times must be strictly increasing")
        if not all(np.isfinite(times)) or not all(np.isfinite(values)):
            raise ValidationError("breakpoints must be finite")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def __call__(self, t):
        """Evaluate at a scalar or array of times."""
        idx = np.searchsorted(np.asarray(self.times), t, side="right") - 1
        idx = np.maximum(idx, 0)
        out = np.asarray(self.values)[idx]
        return float(out) if np.ndim(t) == 0 else out

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Lower to (times, values) float arrays for the stepping kernel."""
        return (
            np.asarray(self.times, dtype=np.float64),
            np.asarray(self.values, dtype=np.float64),
        )

    @property
    def peak_abs(self) -> float:
        """Largest magnitude the signal ever takes."""
        return max(abs(v) for v in self.values)


def constant(value: float) -> PiecewiseSignal:
    """Signal holding one value forever."""
    return PiecewiseSignal(times=(0.0,), values=(float(value),))


def step(at: float, before: float, after: float) -> PiecewiseSignal:
    """Single step from `before` to `after` at time `at` > 0."""
    if not at > 0:
        raise ValidationError(f"step time must be > 0 (got {at!r})")
    return PiecewiseSignal(times=(0.0, float(at)), values=(float(before), float(after)))


def piecewise(times, values) -> PiecewiseSignal:
    """General held signal from parallel breakpoint lists."""
    return PiecewiseSignal(times=tuple(times), values=tuple(values))
