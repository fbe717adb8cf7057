"""Truncated power-series arithmetic for the endpoint jet builders.

A series is a 1-D float array c with c[k] the coefficient of t**k, t the
local variable at the endpoint.  All operations truncate to a fixed length.
"""

import numpy as np


def trim(c, n):
    """Pad or truncate coefficient array to length n."""
    c = np.asarray(c, dtype=float)
    if len(c) >= n:
        return c[:n].copy()
    out = np.zeros(n)
    out[: len(c)] = c
    return out


def smul(a, b, n):
    """Product of two series, truncated to length n."""
    return trim(np.convolve(trim(a, n), trim(b, n)), n)


def sexp(a, n):
    """exp of a series (constant term allowed), truncated to length n.

    Standard recurrence: with a = sum a_k t^k, e = exp(a) satisfies
    k e_k = sum_{j=1..k} j a_j e_{k-j}.
    """
    a = trim(a, n)
    e = np.zeros(n)
    e[0] = np.exp(a[0])
    for k in range(1, n):
        acc = 0.0
        for j in range(1, k + 1):
            acc += j * a[j] * e[k - j]
        e[k] = acc / k
    return e


def sderiv(a, n):
    """Derivative with respect to the series variable, truncated to length n."""
    a = trim(a, n + 1)
    return trim(a[1:] * np.arange(1, n + 1), n)


def seval(a, t):
    """Horner evaluation of the series at t."""
    acc = 0.0
    for c in np.asarray(a, dtype=float)[::-1]:
        acc = acc * t + c
    return acc
