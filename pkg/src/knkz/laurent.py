"""Truncated Laurent series and circle quadrature.

Every residue in the package flows through this kernel: local expansions of
meromorphic sections are held as :class:`LaurentExpansion`, and numerical
coefficients are extracted by equispaced trapezoidal quadrature on small
circles, which for analytic integrands is a plain DFT and converges
exponentially in the sample count.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

DEFAULT_SAMPLES = 512
ESCALATED_SAMPLES = 4096
AGREEMENT_TOL = 1e-10


@dataclass(frozen=True)
class ContourSpec:
    """A circle |z - center| = radius sampled at `samples` equispaced points.

    Caller contract: the disc contains no singularity of the integrand other
    than possibly the center itself.
    """

    center: complex
    radius: float
    samples: int = DEFAULT_SAMPLES

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("contour radius must be positive")
        if self.samples < 64 or self.samples & (self.samples - 1):
            raise ValueError("sample count must be a power of two >= 64")

    def points(self, samples: int | None = None) -> np.ndarray:
        m = self.samples if samples is None else samples
        angles = 2.0 * np.pi * np.arange(m) / m
        return self.center + self.radius * np.exp(1j * angles)


class LaurentExpansion:
    """A truncated Laurent series sum_k c_k (z - center)^k.

    Coefficients run from `min_exponent` to `truncation_order` inclusive.
    The zero series is canonical: no coefficients and
    min_exponent == truncation_order + 1, so equality is testable.
    """

    __slots__ = ("center", "min_exponent", "coefficients")

    def __init__(self, center: complex, min_exponent: int,
                 coefficients: Sequence[complex]):
        coeffs = np.asarray(coefficients, dtype=complex)
        # canonicalize: strip exactly-zero leading coefficients
        nz = np.flatnonzero(coeffs)
        if nz.size == 0:
            trunc = min_exponent + len(coeffs) - 1
            min_exponent, coeffs = trunc + 1, coeffs[:0]
        else:
            lead = nz[0]
            min_exponent += lead
            coeffs = coeffs[lead:]
        self.center = complex(center)
        self.min_exponent = int(min_exponent)
        self.coefficients = coeffs
        self.coefficients.setflags(write=False)

    @classmethod
    def zero(cls, center: complex, truncation_order: int = -1) -> "LaurentExpansion":
        series = cls.__new__(cls)
        series.center = complex(center)
        series.min_exponent = truncation_order + 1
        series.coefficients = np.zeros(0, dtype=complex)
        return series

    @property
    def truncation_order(self) -> int:
        return self.min_exponent + len(self.coefficients) - 1

    @property
    def is_zero(self) -> bool:
        return len(self.coefficients) == 0

    def coefficient(self, exponent: int) -> complex:
        if self.min_exponent <= exponent <= self.truncation_order:
            return complex(self.coefficients[exponent - self.min_exponent])
        return 0j

    def residue(self) -> complex:
        """Coefficient at exponent -1 (zero if outside the retained window)."""
        return self.coefficient(-1)

    def prune(self, tol: float) -> "LaurentExpansion":
        """Drop coefficients below tol * max|c| (cleans quadrature noise)."""
        if self.is_zero:
            return self
        floor = tol * np.abs(self.coefficients).max()
        kept = np.where(np.abs(self.coefficients) > floor, self.coefficients, 0)
        return LaurentExpansion(self.center, self.min_exponent, kept)

    def __eq__(self, other) -> bool:
        if not isinstance(other, LaurentExpansion):
            return NotImplemented
        return (self.center == other.center
                and self.min_exponent == other.min_exponent
                and len(self.coefficients) == len(other.coefficients)
                and bool(np.all(self.coefficients == other.coefficients)))

    def __repr__(self):
        return (f"LaurentExpansion(center={self.center}, "
                f"min_exponent={self.min_exponent}, "
                f"coefficients={list(self.coefficients)})")

    def _check_center(self, other: "LaurentExpansion"):
        if self.center != other.center:
            raise ValueError("center mismatch")

    def __add__(self, other: "LaurentExpansion") -> "LaurentExpansion":
        self._check_center(other)
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        lo = min(self.min_exponent, other.min_exponent)
        hi = min(self.truncation_order, other.truncation_order)
        if hi < lo:
            return LaurentExpansion.zero(self.center, hi)
        out = np.zeros(hi - lo + 1, dtype=complex)
        for series in (self, other):
            a = max(series.min_exponent, lo)
            b = min(series.truncation_order, hi)
            if b >= a:
                out[a - lo:b - lo + 1] += series.coefficients[
                    a - series.min_exponent:b - series.min_exponent + 1]
        return LaurentExpansion(self.center, lo, out)

    def __neg__(self) -> "LaurentExpansion":
        return LaurentExpansion(self.center, self.min_exponent, -self.coefficients)

    def __sub__(self, other: "LaurentExpansion") -> "LaurentExpansion":
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (int, float, complex)):
            if other == 0:
                return LaurentExpansion.zero(self.center, self.truncation_order)
            return LaurentExpansion(self.center, self.min_exponent,
                                    self.coefficients * other)
        self._check_center(other)
        if self.is_zero or other.is_zero:
            return LaurentExpansion.zero(self.center)
        # truncation of a product: only the window both factors can fill
        trunc = min(self.truncation_order + other.min_exponent,
                    other.truncation_order + self.min_exponent)
        lo = self.min_exponent + other.min_exponent
        if trunc < lo:
            return LaurentExpansion.zero(self.center, trunc)
        conv = np.convolve(self.coefficients, other.coefficients)
        return LaurentExpansion(self.center, lo, conv[:trunc - lo + 1])

    __rmul__ = __mul__


def _sample(f: Callable, zs: np.ndarray) -> np.ndarray:
    """Evaluate f on an array of points, accepting scalar-only callables."""
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        try:
            vals = np.asarray(f(zs), dtype=complex)
            if vals.shape != zs.shape:
                raise TypeError
        except TypeError:
            vals = np.array([complex(f(z)) for z in zs])
    if not np.all(np.isfinite(vals)):
        raise ValueError("sample on singularity")
    return vals


def _mean_extended(terms: np.ndarray) -> complex:
    """Mean accumulated in extended precision; the quadrature terms can be
    many orders larger than the residue they cancel down to, and plain double
    summation would put its roundoff directly on the result."""
    return complex(np.mean(terms.astype(np.clongdouble)))


def contour_integral(f: Callable, contour: ContourSpec,
                     samples: int | None = None) -> complex:
    """(1/2 pi i) * closed integral of f dz over the circle (trapezoid rule)."""
    zs = contour.points(samples)
    vals = _sample(f, zs)
    return _mean_extended(vals * (zs - contour.center))


def contour_integral_adaptive(f: Callable, contour: ContourSpec) -> complex:
    """Contour integral with the doubling check: if runs at n and 2n samples
    disagree beyond 1e-10 (relative to scale), redo at 4096 samples."""
    v1 = contour_integral(f, contour)
    v2 = contour_integral(f, contour, samples=contour.samples * 2)
    scale = max(1.0, abs(v1), abs(v2))
    if abs(v1 - v2) <= AGREEMENT_TOL * scale:
        return v2
    return contour_integral(f, contour, samples=ESCALATED_SAMPLES)


def expand_at(f: Callable, contour: ContourSpec, min_exp: int,
              max_exp: int) -> LaurentExpansion:
    """Laurent coefficients c_k = (1/2 pi i) * integral of f(z)(z-c)^(-k-1) dz
    for k in [min_exp, max_exp], via one FFT over the circle samples.

    Requires f analytic on an annulus containing the circle with true Laurent
    coefficients below min_exp all zero (otherwise they alias into the window).
    """
    if max_exp < min_exp:
        raise ValueError("empty exponent window")
    m = contour.samples
    if max_exp - min_exp + 1 > m:
        raise ValueError("exponent window exceeds sample count")
    zs = contour.points()
    vals = _sample(f, zs)
    dft = np.fft.fft(vals) / m
    ks = np.arange(min_exp, max_exp + 1)
    coeffs = dft[np.mod(ks, m)] * contour.radius ** (-ks.astype(float))
    return LaurentExpansion(contour.center, min_exp, coeffs)
