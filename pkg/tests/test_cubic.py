"""Cubic solver: closed form + polish against independent oracles."""

import numpy as np
import pytest

from rfbdyn.cubic import cubic_discriminant, eval_cubic, solve_cubic
from rfbdyn.model import char_poly_coeffs, nondimensionalize
from rfbdyn.params import BatteryParams, CircuitParams, DimensionlessParams


def sorted_roots(roots):
    return sorted(roots, key=lambda z: (round(z.real, 9), round(z.imag, 9)))


def test_distinct_real_roots():
    # (x+1)(x+2)(x+3) = x^3 + 6x^2 + 11x + 6
    roots = sorted_roots(solve_cubic(6.0, 11.0, 6.0))
    assert roots[0] == pytest.approx(-3, abs=1e-12)
    assert roots[1] == pytest.approx(-2, abs=1e-12)
    assert roots[2] == pytest.approx(-1, abs=1e-12)


def test_triple_root():
    # (x+2)^3
    roots = solve_cubic(6.0, 12.0, 8.0)
    for r in roots:
        assert r == pytest.approx(-2, abs=1e-6)


def test_double_root():
    # (x+1)^2 (x+2) = x^3 + 4x^2 + 5x + 2
    roots = sorted_roots(solve_cubic(4.0, 5.0, 2.0))
    assert roots[0] == pytest.approx(-2, abs=1e-6)
    assert roots[1] == pytest.approx(-1, abs=1e-6)
    assert roots[2] == pytest.approx(-1, abs=1e-6)


def test_complex_pair_is_exact_conjugate():
    # x^3 - 1 has roots 1, exp(+-2 pi i/3)
    roots = solve_cubic(0.0, 0.0, -1.0)
    complexes = [z for z in roots if z.imag != 0]
    assert len(complexes) == 2
    assert complexes[0] == complexes[1].conjugate()
    real = [z for z in roots if z.imag == 0][0]
    assert real == pytest.approx(1.0, abs=1e-14)


def test_against_numpy_roots_oracle():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        a, b, c = rng.uniform(-10, 10, 3)
        mine = sorted_roots(solve_cubic(a, b, c))
        ref = sorted_roots(np.roots([1.0, a, b, c]).astype(complex))
        for z, w in zip(mine, ref):
            assert abs(z - w) < 1e-7 * max(1.0, abs(w))


def test_residuals_small_on_random_cubics():
    rng = np.random.default_rng(7)
    for _ in range(500):
        a, b, c = rng.uniform(-100, 100, 3)
        for z in solve_cubic(a, b, c):
            # scale-aware residual bound
            scale = max(abs(z) ** 3, abs(a) * abs(z) ** 2, abs(b) * abs(z), abs(c), 1.0)
            assert abs(eval_cubic(z, a, b, c)) < 1e-10 * scale


def vieta_errors(roots, a, b, c):
    s1 = sum(roots)
    s2 = roots[0] * roots[1] + roots[0] * roots[2] + roots[1] * roots[2]
    s3 = roots[0] * roots[1] * roots[2]
    return (abs(s1 + a) / max(abs(a), 1e-30),
            abs(s2 - b) / max(abs(b), 1e-30),
            abs(s3 + c) / max(abs(c), 1e-30))


def test_vieta_on_random_linearizations():
    # spectrum reconstruction must match the characteristic coefficients
    rng = np.random.default_rng(99)
    for _ in range(1000):
        d = DimensionlessParams(
            beta=rng.uniform(0.01, 10), gamma=rng.uniform(1e-4, 2),
            delta=rng.uniform(1e-3, 1), epsilon=rng.uniform(0.01, 1),
            c_hat=1.7, t_hat=30.0, i_hat=28.0, t_hat_prime=2.0)
        x1 = 10 ** rng.uniform(-8, -0.31)
        a, b, c = char_poly_coeffs(x1, d)
        errs = vieta_errors(solve_cubic(a, b, c), a, b, c)
        assert max(errs) < 1e-9


def test_vieta_extreme_stiffness():
    # coefficients spanning ten decades (rest state of the calibrated model)
    d = nondimensionalize(BatteryParams(), CircuitParams(), 0.100 / 60.0)
    a, b, c = char_poly_coeffs(3.51e-12, d)
    assert b > 1e9
    errs = vieta_errors(solve_cubic(a, b, c), a, b, c)
    assert max(errs) < 1e-12


def test_discriminant_sign_matches_root_structure():
    rng = np.random.default_rng(5)
    for _ in range(300):
        a, b, c = rng.uniform(-5, 5, 3)
        disc = cubic_discriminant(a, b, c)
        if abs(disc) < 1e-8:
            continue
        roots = solve_cubic(a, b, c)
        n_complex = sum(1 for z in roots if z.imag != 0)
        assert (disc > 0) == (n_complex == 0)
