"""Composite-Simpson quadrature with doubling refinement.

All integrands handled here are smooth (products of exponentials and
rational functions of exponentials), so Simpson with Richardson-style
doubling converges in a handful of levels.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import AccuracyError

__all__ = ["composite_simpson", "simpson_adaptive", "simpson_weights"]


def simpson_weights(n_panels: int, h: float) -> np.ndarray:
    """Weights of the composite Simpson rule on ``n_panels`` uniform panels."""

    if n_panels < 2 or n_panels % 2:
        raise ValueError("n_panels must be a positive even integer.")
    w = np.ones(n_panels + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * (h / 3.0)


def composite_simpson(f: Callable[[np.ndarray], np.ndarray], a: float, b: float,
                      n_panels: int) -> float:
    """Composite Simpson estimate of ``∫_a^b f`` using a vectorized integrand."""

    if b == a:
        return 0.0
    x = np.linspace(a, b, n_panels + 1)
    y = np.asarray(f(x), dtype=float)
    return float(np.sum(simpson_weights(n_panels, (b - a) / n_panels) * y))


def simpson_adaptive(f: Callable[[np.ndarray], np.ndarray], a: float, b: float,
                     rel_tol: float = 1e-8, abs_tol: float = 0.0,
                     n0: int = 8, max_panels: int = 1 << 20) -> float:
    """Integrate ``f`` on [a, b] by Simpson panel doubling.

    Stops when the Richardson error estimate |S_2n - S_n| / 15 is within
    ``rel_tol * |S_2n| + abs_tol`` and returns the extrapolated value.
    Raises :class:`AccuracyError` if ``max_panels`` is hit first.
    """

    if b == a:
        return 0.0
    if b < a:
        raise ValueError("Integration limits must satisfy a <= b.")
    n = n0 if n0 % 2 == 0 else n0 + 1
    prev = composite_simpson(f, a, b, n)
    while n <= max_panels:
        n *= 2
        cur = composite_simpson(f, a, b, n)
        err = abs(cur - prev) / 15.0
        if err <= rel_tol * abs(cur) + abs_tol:
            return cur + (cur - prev) / 15.0
        prev = cur
    raise AccuracyError(
        f"Simpson refinement did not reach rel_tol={rel_tol:g} within "
        f"{max_panels} panels on [{a:g}, {b:g}]."
    )
