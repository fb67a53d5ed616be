"""Numeric kernel: truncated Laurent arithmetic and circle quadrature."""

import numpy as np
import pytest

from knkz.laurent import (ContourSpec, LaurentExpansion, contour_integral,
                          contour_integral_adaptive, expand_at)


def brute_force_product(a: LaurentExpansion, b: LaurentExpansion) -> dict:
    """Independent convolution oracle over exponent dictionaries."""
    out = {}
    for i, ca in enumerate(a.coefficients):
        for j, cb in enumerate(b.coefficients):
            k = (a.min_exponent + i) + (b.min_exponent + j)
            out[k] = out.get(k, 0j) + ca * cb
    return out


class TestArithmetic:
    def test_inverse_pair(self):
        inv = LaurentExpansion(0, -1, [1.0])
        lin = LaurentExpansion(0, 1, [1.0])
        prod = inv * lin
        assert prod.min_exponent == 0
        assert prod.coefficient(0) == 1.0

    def test_add_cancels(self):
        a = LaurentExpansion(0, 0, [1.0, 1.0])   # 1 + z
        b = LaurentExpansion(0, 0, [-1.0])       # -1
        total = a + b
        assert total.min_exponent == 1
        assert total.coefficient(1) == 1.0

    def test_product_against_convolution(self):
        a = LaurentExpansion(0, -1, [1.0, 1.0])    # z^-1 + 1
        b = LaurentExpansion(0, -1, [1.0, -1.0])   # z^-1 - 1
        prod = a * b
        oracle = brute_force_product(a, b)
        # hand expansion: z^-2 - 1
        assert oracle == {-2: 1.0, -1: 0.0, 0: -1.0}
        for k in range(prod.min_exponent, prod.truncation_order + 1):
            assert prod.coefficient(k) == pytest.approx(oracle.get(k, 0j))

    def test_product_truncation_window(self):
        a = LaurentExpansion(0, -2, np.arange(1, 6))   # exponents -2..2
        b = LaurentExpansion(0, 1, np.arange(1, 4))    # exponents 1..3
        prod = a * b
        assert prod.min_exponent == -1
        assert prod.truncation_order == min(a.truncation_order + b.min_exponent,
                                            b.truncation_order + a.min_exponent)
        oracle = brute_force_product(a, b)
        for k in range(prod.min_exponent, prod.truncation_order + 1):
            assert prod.coefficient(k) == pytest.approx(oracle[k])

    def test_center_mismatch(self):
        a = LaurentExpansion(0, 0, [1.0])
        b = LaurentExpansion(1, 0, [1.0])
        with pytest.raises(ValueError, match="center mismatch"):
            a * b
        with pytest.raises(ValueError, match="center mismatch"):
            a + b

    def test_mul_associative_commutative_on_overlap(self):
        rng = np.random.default_rng(0)
        series = [LaurentExpansion(0, int(rng.integers(-3, 1)),
                                   rng.normal(size=6) + 1j * rng.normal(size=6))
                  for _ in range(3)]
        a, b, c = series
        ab_c = (a * b) * c
        a_bc = a * (b * c)
        lo = max(ab_c.min_exponent, a_bc.min_exponent)
        hi = min(ab_c.truncation_order, a_bc.truncation_order)
        for k in range(lo, hi + 1):
            assert abs(ab_c.coefficient(k) - a_bc.coefficient(k)) < 1e-14
        ba = b * a
        for k in range(ba.min_exponent, ba.truncation_order + 1):
            assert abs((a * b).coefficient(k) - ba.coefficient(k)) < 1e-14

    def test_zero_canonical(self):
        z = LaurentExpansion(0, -5, [0.0, 0.0])
        assert z.is_zero
        assert z.min_exponent == z.truncation_order + 1
        assert z == LaurentExpansion.zero(0, z.truncation_order)
        a = LaurentExpansion(0, 0, [2.0])
        assert (a + (-a)).is_zero


class TestResidue:
    def test_simple_pole(self):
        assert LaurentExpansion(0, -1, [1.0]).residue() == 1.0

    def test_double_pole_no_residue(self):
        assert LaurentExpansion(0, -2, [1.0]).residue() == 0.0

    def test_shifted_pole(self):
        c = 0.7 + 0.2j
        series = expand_at(lambda z: 3.0 / (z - c), ContourSpec(c, 0.3), -2, 2)
        assert series.residue() == pytest.approx(3.0, abs=1e-12)


class TestExpandAt:
    def test_geometric_series(self):
        contour = ContourSpec(0j, 0.5)
        series = expand_at(lambda z: 1.0 / (z - 1.0), contour, -2, 3)
        for k in (-2, -1):
            assert abs(series.coefficient(k)) < 1e-13
        for k in range(4):
            assert series.coefficient(k) == pytest.approx(-1.0, abs=1e-12)

    def test_exponential_taylor(self):
        contour = ContourSpec(0j, 0.5, 256)
        series = expand_at(np.exp, contour, 0, 10)
        fact = 1.0
        for k in range(11):
            assert abs(series.coefficient(k) - 1.0 / fact) < 1e-12
            fact *= k + 1

    def test_residue_of_inverse(self):
        contour = ContourSpec(0j, 0.5)
        series = expand_at(lambda z: 1.0 / z, contour, -3, 3)
        assert abs(series.residue() - 1.0) < 1e-13

    def test_singular_sample_rejected(self):
        contour = ContourSpec(0j, 0.5, 64)
        with pytest.raises(ValueError, match="sample on singularity"):
            expand_at(lambda z: 1.0 / (z - 0.5), contour, -1, 1)


class TestContourIntegral:
    @pytest.mark.parametrize("n", [-3, -2, 0, 1, 4])
    def test_powers_without_residue(self, n):
        contour = ContourSpec(0j, 0.8)
        assert abs(contour_integral(lambda z: z ** n, contour)) < 1e-12

    def test_inverse(self):
        assert abs(contour_integral(lambda z: 1.0 / z, ContourSpec(0j, 0.8))
                   - 1.0) < 1e-13

    def test_hand_residue(self):
        val = contour_integral(lambda z: (2 * z + 3) / z ** 2,
                               ContourSpec(0j, 0.4))
        assert val == pytest.approx(2.0, abs=1e-12)

    def test_convergence_doubles(self):
        # singularity at distance 1.2 x radius: each doubling of the sample
        # count must gain at least a factor ten until the 1e-12 floor
        contour_errors = []
        for samples in (64, 128, 256, 512):
            spec = ContourSpec(0j, 0.5, samples)
            val = contour_integral(lambda z: 1.0 / (z - 0.6) / z, spec)
            contour_errors.append(abs(val - (-1.0 / 0.6)))
        for worse, better in zip(contour_errors, contour_errors[1:]):
            assert better < worse / 10.0 or better < 1e-12

    def test_adaptive_agrees(self):
        spec = ContourSpec(0j, 0.5)
        val = contour_integral_adaptive(lambda z: 1.0 / (z - 0.55) / z, spec)
        assert val == pytest.approx(-1.0 / 0.55, abs=1e-10)

    def test_residue_expand_matches_integral(self):
        rng = np.random.default_rng(1)
        for _ in range(8):
            poles = rng.uniform(-2, 2, 3) + 1j * rng.uniform(-2, 2, 3)
            res = rng.normal(size=3)

            def f(z):
                return sum(r / (z - p) for r, p in zip(res, poles))

            spec = ContourSpec(0j, 0.5, 512)
            inside = sum(r for r, p in zip(res, poles) if abs(p) < 0.5)
            if any(abs(abs(p) - 0.5) < 0.05 for p in poles):
                continue  # keep poles away from the circle itself
            direct = contour_integral(f, spec)
            via_series = expand_at(f, spec, -4, 4).residue()
            assert abs(direct - inside) < 1e-10
            assert abs(via_series - direct) < 1e-10
