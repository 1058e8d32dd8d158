"""Closed-form roots of a real monic cubic with Newton refinement.

The characteristic polynomials handled here have coefficients spanning ten
orders of magnitude (the EMF slope diverges near depletion), so the
closed-form result of each branch is polished with a couple of Newton steps
on the original polynomial and conjugate pairs are rebuilt from a stable
deflation instead of the raw Cardano expressions.
"""

from __future__ import annotations

import math


def _polish_real(r: float, a: float, b: float, c: float, iters: int = 2) -> float:
    for _ in range(iters):
        f = ((r + a) * r + b) * r + c
        df = (3.0 * r + 2.0 * a) * r + b
        if df == 0.0 or not math.isfinite(df):
            break
        step = f / df
        if not math.isfinite(step):
            break
        r -= step
    return r


def _polish_complex(z: complex, a: float, b: float, c: float, iters: int = 2) -> complex:
    for _ in range(iters):
        f = ((z + a) * z + b) * z + c
        df = (3.0 * z + 2.0 * a) * z + b
        if df == 0:
            break
        z -= f / df
    return z


def _cbrt(x: float) -> float:
    return math.copysign(abs(x) ** (1.0 / 3.0), x)


def solve_cubic(a: float, b: float, c: float) -> tuple[complex, complex, complex]:
    """Roots of lambda^3 + a lambda^2 + b lambda + c, as three complex numbers.

    Complex roots come in exactly conjugate pairs; repeated roots are
    returned with multiplicity.
    """
    # depressed form u^3 + p u + q with lambda = u - a/3
    a3 = a / 3.0
    p = b - a * a3
    q = a3 * (2.0 * a3 * a3 - b) + c
    disc = -4.0 * p * p * p - 27.0 * q * q

    if p == 0.0 and q == 0.0:
        r = -a3
        return (complex(r), complex(r), complex(r))

    if disc > 0.0:
        # three distinct real roots (requires p < 0): trigonometric form
        m = 2.0 * math.sqrt(-p / 3.0)
        arg = 3.0 * q / (p * m)
        arg = min(1.0, max(-1.0, arg))
        theta = math.acos(arg)
        roots = []
        for k in range(3):
            u = m * math.cos((theta - 2.0 * math.pi * k) / 3.0)
            roots.append(_polish_real(u - a3, a, b, c))
        return tuple(complex(r) for r in roots)  # type: ignore[return-value]

    # one real root: Cardano, taking the larger-magnitude cube root first to
    # dodge cancellation between the two radicals
    s = math.sqrt(max(q * q / 4.0 + p * p * p / 27.0, 0.0))
    big = -q / 2.0 - math.copysign(s, q)
    u = _cbrt(big)
    v = 0.0 if u == 0.0 else -p / (3.0 * u)
    r = _polish_real(u + v - a3, a, b, c)

    # deflate by the polished real root: lambda^2 + B2 lambda + B1
    b2 = a + r
    b1 = b + r * b2
    disc_q = b2 * b2 - 4.0 * b1
    if disc_q < 0.0:
        z = complex(-b2 / 2.0, math.sqrt(-disc_q) / 2.0)
        z = _polish_complex(z, a, b, c)
        if z.imag < 0.0:
            z = z.conjugate()
        return (complex(r), z, z.conjugate())
    # borderline repeated/real pair
    sq = math.sqrt(disc_q)
    r2 = _polish_real((-b2 + sq) / 2.0, a, b, c)
    r3 = _polish_real((-b2 - sq) / 2.0, a, b, c)
    return (complex(r), complex(r2), complex(r3))


def cubic_discriminant(a: float, b: float, c: float) -> float:
    """Discriminant of lambda^3 + a lambda^2 + b lambda + c.

    Positive for three distinct real roots, negative when a conjugate pair
    exists, zero at a root collision.
    """
    return (18.0 * a * b * c - 4.0 * a ** 3 * c + a * a * b * b
            - 4.0 * b ** 3 - 27.0 * c * c)


def eval_cubic(lam: complex, a: float, b: float, c: float) -> complex:
    return ((lam + a) * lam + b) * lam + c
