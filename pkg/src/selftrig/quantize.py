"""Deadzone sign and uniform quantizers."""

import math


def sign_eps(z: float, eps: float) -> int:
    """Ternary deadzone sign: ``sign(z)`` when ``|z| >= eps``, else 0."""
    if not eps > 0:
        raise ValueError(f"deadzone width must be positive, got {eps}")
    if math.isnan(z):
        raise ValueError("cannot quantize NaN")
    if z >= eps:
        return 1
    if z <= -eps:
        return -1
    return 0


def q_uniform(x: float, delta: float) -> float:
    """``delta * floor(x/delta + 1/2)``; midpoints round toward +inf."""
    if not delta > 0:
        raise ValueError(f"quantizer step must be positive, got {delta}")
    return delta * math.floor(x / delta + 0.5)
