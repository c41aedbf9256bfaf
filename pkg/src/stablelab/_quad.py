"""Shared quadrature helpers: cached Gauss rules and panel layouts.

Everything here works on plain floats/ndarrays; the singular-integral logic
that decides *where* to put panels and which endpoint weights to use lives in
the calling modules.
"""

from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre


@lru_cache(maxsize=256)
def legendre_rule(n):
    x, w = roots_legendre(n)
    return x, w


@lru_cache(maxsize=256)
def jacobi_rule(n, beta):
    """Nodes/weights for integral over (-1,1) with weight (1+x)^beta, beta > -1."""
    x, w = roots_jacobi(n, 0.0, beta)
    return x, w


def gl_panel(f, lo, hi, n=20):
    """Gauss-Legendre approximation of int_lo^hi f."""
    x, w = legendre_rule(n)
    y = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
    return 0.5 * (hi - lo) * float(np.sum(w * f(y)))


def gl_panels(f, edges, n=20):
    """Sum of Gauss-Legendre panels over consecutive entries of `edges`."""
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi > lo:
            total += gl_panel(f, lo, hi, n)
    return total


def power_panel(f, lo, hi, exponent, n=24, at="lower"):
    """int_lo^hi (y - lo)^exponent f(y) dy  (at="lower"), or with (hi - y)^exponent
    when at="upper".  Requires exponent > -1; f smooth on [lo, hi]."""
    x, w = jacobi_rule(n, exponent)
    half = 0.5 * (hi - lo)
    if at == "lower":
        y = lo + half * (x + 1.0)
    else:
        y = hi - half * (x + 1.0)
    return half ** (1.0 + exponent) * float(np.sum(w * f(y)))


def geometric_edges(lo, hi, ratio=1.5, first=None, max_width=None):
    """Panel edges from lo to hi with geometrically growing widths.

    `first` is the width of the first panel (default: (hi-lo)/50).
    `max_width`, if given, caps every panel width (used when the integrand
    oscillates on a known scale).
    """
    if hi <= lo:
        return [lo, hi] if hi == lo else [lo]
    if first is None:
        first = (hi - lo) / 50.0
    edges = [lo]
    width = first
    while edges[-1] + width < hi:
        edges.append(edges[-1] + width)
        width *= ratio
        if max_width is not None:
            width = min(width, max_width)
    edges.append(hi)
    return edges
