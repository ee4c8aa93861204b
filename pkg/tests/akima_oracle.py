"""Textbook Akima spline and BD integration, written independently of the package.

Used only as a test oracle: scalar loops, Hermite basis functions, and a
dense trapezoid rule instead of Simpson.
"""

import math


def akima_slopes(xs, ys):
    n = len(xs)
    m = {}
    for i in range(n - 1):
        m[i] = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])
    # Akima's end rule: continue the secant sequence linearly
    m[-1] = 2 * m[0] - m[1]
    m[-2] = 2 * m[-1] - m[0]
    m[n - 1] = 2 * m[n - 2] - m[n - 3]
    m[n] = 2 * m[n - 1] - m[n - 2]
    slopes = []
    for i in range(n):
        a = abs(m[i + 1] - m[i])
        b = abs(m[i - 1] - m[i - 2])
        if a + b == 0:
            slopes.append((m[i - 1] + m[i]) / 2)
        else:
            slopes.append((a * m[i - 1] + b * m[i]) / (a + b))
    return slopes


def akima_eval(xs, ys, x):
    t = akima_slopes(xs, ys)
    n = len(xs)
    i = 0
    while i < n - 2 and x >= xs[i + 1]:
        i += 1
    h = xs[i + 1] - xs[i]
    s = (x - xs[i]) / h
    h00 = 2 * s**3 - 3 * s**2 + 1
    h10 = s**3 - 2 * s**2 + s
    h01 = -2 * s**3 + 3 * s**2
    h11 = s**3 - s**2
    return h00 * ys[i] + h10 * h * t[i] + h01 * ys[i + 1] + h11 * h * t[i + 1]


def bd_percent(test_q, test_cost, ref_q, ref_cost, lower_better=True, samples=20001):
    """BD in percent via trapezoid integration of the log10-cost gap."""
    sign = -1.0 if lower_better else 1.0

    def prep(q, c):
        pts = sorted((sign * qi, math.log10(ci)) for qi, ci in zip(q, c))
        return [p[0] for p in pts], [p[1] for p in pts]

    tx, ty = prep(test_q, test_cost)
    rx, ry = prep(ref_q, ref_cost)
    lo, hi = max(tx[0], rx[0]), min(tx[-1], rx[-1])
    step = (hi - lo) / (samples - 1)
    total = 0.0
    prev = None
    for k in range(samples):
        x = lo + k * step
        d = akima_eval(tx, ty, x) - akima_eval(rx, ry, x)
        if prev is not None:
            total += (prev + d) / 2 * step
        prev = d
    return (10 ** (total / (hi - lo)) - 1) * 100
