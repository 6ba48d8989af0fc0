"""Minimal double-double arithmetic on Python floats.

A double-double is a pair ``(hi, lo)`` with ``|lo| <= ulp(hi)/2``; complex
values are pairs of double-doubles ``(re, im)``.  Only the operations the
compensated recurrences need are provided.
"""
from __future__ import annotations

_SPLIT = 134217729.0  # 2**27 + 1


def two_sum(a: float, b: float):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _split(a: float):
    t = _SPLIT * a
    hi = t - (t - a)
    return hi, a - hi


def two_prod(a: float, b: float):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def dd_add(x, y):
    s, e = two_sum(x[0], y[0])
    e += x[1] + y[1]
    return two_sum(s, e)


def dd_neg(x):
    return (-x[0], -x[1])


def dd_sub(x, y):
    return dd_add(x, (-y[0], -y[1]))


def dd_mul(x, y):
    p, e = two_prod(x[0], y[0])
    e += x[0] * y[1] + x[1] * y[0]
    return two_sum(p, e)


def dd(a: float):
    return (float(a), 0.0)


def to_float(x) -> float:
    return x[0] + x[1]


# complex double-doubles: ((re_hi, re_lo), (im_hi, im_lo))

def cdd(z):
    z = complex(z)
    return (dd(z.real), dd(z.imag))


def cdd_add(x, y):
    return (dd_add(x[0], y[0]), dd_add(x[1], y[1]))


def cdd_sub(x, y):
    return (dd_sub(x[0], y[0]), dd_sub(x[1], y[1]))


def cdd_mul(x, y):
    re = dd_sub(dd_mul(x[0], y[0]), dd_mul(x[1], y[1]))
    im = dd_add(dd_mul(x[0], y[1]), dd_mul(x[1], y[0]))
    return (re, im)


def cdd_to_complex(x) -> complex:
    return complex(to_float(x[0]), to_float(x[1]))

