"""Weierstrass sigma, zeta and wp for the normalized lattice <1, tau>.

All values are computed through the theta-quotient product representation
with the exponential quadratic prefactor,

    sigma(z) = exp(eta1 z^2) sin(pi z)/pi
               * prod_{n>=1} (1 - 2 q^{2n} cos(2 pi z) + q^{4n}) / (1 - q^{2n})^2,

with q = exp(i pi tau), after reducing the argument to the centered
fundamental cell through the quasi-periodicity

    sigma(z + m + n tau) = (-1)^{m+n+mn} exp(eta(w)(z + w/2)) sigma(z),
    eta(w) = 2 m eta1 + 2 n eta2,  w = m + n tau.

The basis elements multiply sigma factors to large integer powers, so
`log_sigma` is the workhorse: products are assembled in log space, where the
quasi-periodic exponentials are added analytically instead of overflowing.
Those exponents reach magnitudes of several hundred before cancelling down
to O(10), which would leave only ~1e-14 relative accuracy in double
precision; `log_sigma` therefore runs in 80-bit extended precision
(numpy clongdouble), keeping the cancellation error near 1e-17.

zeta = sigma'/sigma and wp = -zeta' come from the term-wise logarithmic
derivatives of the same product (ordinary double precision: they feed
derivative formulas whose conditioning is harmless); wp' = -zeta''.

eta1 = zeta(1/2) comes from the weight-two Eisenstein series and
eta2 = zeta(tau/2) from the raw zeta series, so the Legendre relation
eta1*tau - eta2 = pi*i is a genuine cross-check of the implementation.
"""

from __future__ import annotations

import numpy as np

PI_LD = np.longdouble("3.14159265358979323846264338327950288420")
_SERIES_CUTOFF = 1e-19
_MAX_TERMS = 2000


def _adaptive_sum(term_fn):
    """Sum term_fn(1), term_fn(2), ... until the term is negligible."""
    total = np.clongdouble(0)
    for n in range(1, _MAX_TERMS):
        t = term_fn(n)
        total += t
        if abs(complex(t)) < _SERIES_CUTOFF * max(1.0, abs(complex(total))):
            return total
    raise RuntimeError("theta series did not converge")


class Lattice:
    """The lattice <1, tau> with its quasi-period constants."""

    def __init__(self, tau: complex):
        tau = complex(tau)
        if tau.imag <= 0:
            raise ValueError("Im(tau) must be positive")
        if abs(np.exp(1j * np.pi * tau)) >= 0.9:
            raise ValueError("tau too close to the real axis (|q| >= 0.9)")
        self.tau = tau
        tau_ld = np.clongdouble(tau)
        self._tau_ld = tau_ld
        q_ld = np.exp(1j * PI_LD * tau_ld)
        self.q = complex(q_ld)
        # number of product terms giving |q|^(2n-1) below the cutoff
        self._terms = max(6, int(np.ceil(
            (20.0 / (-np.log10(abs(self.q))) + 1.0) / 2.0)) + 2)
        ns = np.arange(1, self._terms + 1)
        self._u_ld = q_ld ** (2 * ns)
        self._one_minus_u_sq_ld = (1.0 - self._u_ld) ** 2
        self._u = self._u_ld.astype(complex)
        self._u2 = self._u * self._u
        self._one_minus_u_sq = self._one_minus_u_sq_ld.astype(complex)
        e2 = 1.0 - 24.0 * _adaptive_sum(
            lambda n: n * q_ld ** (2 * n) / (1.0 - q_ld ** (2 * n)))
        self._eta1_ld = PI_LD ** 2 / 6.0 * e2
        self._eta2_ld = self._zeta_raw_ld(tau_ld / 2.0)
        self.eta1 = complex(self._eta1_ld)
        self.eta2 = complex(self._eta2_ld)

    # -- argument reduction ----------------------------------------------------

    def reduce(self, z):
        """Split z = z0 + m + n*tau with z0 in the centered cell
        [-1/2,1/2) + [-1/2,1/2)*tau. Vectorized; returns (z0, m, n)."""
        z = np.asarray(z, dtype=complex)
        y = z.imag / self.tau.imag
        n = np.floor(y + 0.5)
        x = z.real - y * self.tau.real
        m = np.floor(x + 0.5)
        z0 = z - m - n * self.tau
        return z0, m, n

    def _reduce_ld(self, z):
        z = np.asarray(z, dtype=complex)
        y = z.imag / self.tau.imag
        n = np.floor(y + 0.5)
        x = z.real - y * self.tau.real
        m = np.floor(x + 0.5)
        z0 = z.astype(np.clongdouble) - m - n * self._tau_ld
        return z0, m, n

    def lattice_distance(self, z) -> np.ndarray:
        """Distance from z to the nearest lattice point."""
        z0, _, _ = self.reduce(z)
        # the centered cell may be skew; check the neighbouring translates
        z0 = np.atleast_1d(z0)
        if not hasattr(self, "_near_shifts"):
            self._near_shifts = np.array(
                [m + n * self.tau for m in (-1, 0, 1) for n in (-1, 0, 1)])
        d = np.abs(z0[..., None] - self._near_shifts).min(axis=-1)
        return d if d.size > 1 else d.reshape(())

    def min_period(self) -> float:
        shifts = [m + n * self.tau for m in (-2, -1, 0, 1, 2)
                  for n in (-2, -1, 0, 1, 2) if (m, n) != (0, 0)]
        return min(abs(s) for s in shifts)

    # -- extended-precision log sigma -------------------------------------------

    def quasi_exponent_ld(self, z0, m, n):
        """log of the multiplier picked up by sigma under z -> z + m + n*tau,
        with the sign as i*pi*(m + n + m*n); extended precision."""
        w = m + n * self._tau_ld
        eta = 2.0 * m * self._eta1_ld + 2.0 * n * self._eta2_ld
        return eta * (z0 + w / 2.0) + 1j * PI_LD * (m + n + m * n)

    def eta_of_period_ld(self, m, n):
        """eta(m + n tau) = 2 m eta1 + 2 n eta2, extended precision."""
        return 2.0 * m * self._eta1_ld + 2.0 * n * self._eta2_ld

    def log_sigma(self, z):
        """A branch of log sigma(z), exact up to 2 pi i Z (which cancels in
        integer-exponent products).

        Mixed precision: the theta-product core is O(1)-conditioned and runs
        through double transcendentals, while the quadratic prefactor and the
        quasi-periodic exponent (the pieces that reach magnitudes of hundreds
        before cancelling across a product) are accumulated in extended
        precision.
        """
        z0, m, n = self._reduce_ld(z)
        z0d = z0.astype(complex)
        u, c2, d = self._prefactors(z0d)
        # one log per point: any branch works for integer-exponent products
        core = np.log(np.sin(np.pi * z0d) / np.pi
                      * (d / self._one_minus_u_sq).prod(axis=-1))
        return (self._eta1_ld * z0 * z0 + core
                + self.quasi_exponent_ld(z0, m, n))

    # -- double-precision evaluations --------------------------------------------

    def _prefactors(self, z0):
        u = self._u
        c2 = np.cos(2 * np.pi * np.asarray(z0, dtype=complex))[..., None]
        d = 1.0 - 2.0 * u * c2 + self._u2
        return u, c2, d

    def sigma(self, z):
        return np.exp(self.log_sigma(z)).astype(complex)

    def _zeta_core(self, z0):
        u, c2, d = self._prefactors(z0)
        s2 = np.sin(2 * np.pi * np.asarray(z0, dtype=complex))[..., None]
        series = (4.0 * np.pi * u * s2 / d).sum(axis=-1)
        return 2.0 * self.eta1 * z0 + np.pi / np.tan(np.pi * z0) + series

    def _zeta_raw_ld(self, z):
        """Extended zeta via the series without argument reduction."""
        u = self._u_ld
        c2 = np.cos(2 * PI_LD * z)[..., None]
        s2 = np.sin(2 * PI_LD * z)[..., None]
        d = 1.0 - 2.0 * u * c2 + u * u
        series = (4.0 * PI_LD * u * s2 / d).sum(axis=-1)
        return (2.0 * self._eta1_ld * z + PI_LD / np.tan(PI_LD * z) + series)

    def _check_not_pole(self, z):
        if np.any(np.atleast_1d(self.lattice_distance(z)) < 1e-12):
            raise ValueError("pole of zeta")

    def zeta(self, z):
        """Weierstrass zeta; quasi-periodic with increments 2*eta1, 2*eta2."""
        self._check_not_pole(z)
        z0, m, n = self.reduce(z)
        return self._zeta_core(z0) + 2.0 * m * self.eta1 + 2.0 * n * self.eta2

    def wp(self, z):
        """Weierstrass elliptic function wp = -zeta'."""
        self._check_not_pole(z)
        z0, _, _ = self.reduce(z)
        u, c2, d = self._prefactors(z0)
        # d/dz of each product term 4 pi u sin(2 pi z)/d
        tp = (8.0 * np.pi ** 2 * u * (c2 * (1.0 + self._u2) - 2.0 * u)
              / d ** 2).sum(axis=-1)
        zp = 2.0 * self.eta1 - np.pi ** 2 / np.sin(np.pi * z0) ** 2 + tp
        return -zp

    def wp_prime(self, z):
        """Derivative of wp (= -zeta'')."""
        self._check_not_pole(z)
        z0, _, _ = self.reduce(z)
        u, c2, d = self._prefactors(z0)
        s2 = np.sin(2 * np.pi * np.asarray(z0, dtype=complex))[..., None]
        tpp = (-16.0 * np.pi ** 3 * u * s2
               * ((1.0 + self._u2) ** 2 + 2.0 * u * c2 * (1.0 + self._u2)
                  - 8.0 * self._u2)
               / d ** 3).sum(axis=-1)
        s = np.sin(np.pi * z0)
        zpp = 2.0 * np.pi ** 3 * np.cos(np.pi * z0) / s ** 3 + tpp
        return -zpp

    def log_derivative_bundle(self, z):
        """(sigma, zeta, zeta') at z, with zeta' = -wp."""
        return self.sigma(z), self.zeta(z), -self.wp(z)

    def derivative_bundle_fast(self, z, order: int):
        """(zeta, wp, wp') sharing one reduction and one set of theta-product
        prefactors; no pole check (hot path for form derivatives, where the
        caller controls the evaluation points)."""
        z0, m, n = self.reduce(z)
        u, c2, d = self._prefactors(z0)
        s2 = np.sin(2 * np.pi * np.asarray(z0, dtype=complex))[..., None]
        series = (4.0 * np.pi * u * s2 / d).sum(axis=-1)
        zeta = (2.0 * self.eta1 * z0 + np.pi / np.tan(np.pi * z0) + series
                + 2.0 * m * self.eta1 + 2.0 * n * self.eta2)
        wp = wpp = None
        if order >= 2:
            tp = (8.0 * np.pi ** 2 * u * (c2 * (1.0 + self._u2) - 2.0 * u)
                  / d ** 2).sum(axis=-1)
            sin_z = np.sin(np.pi * z0)
            wp = -(2.0 * self.eta1 - np.pi ** 2 / sin_z ** 2 + tp)
            if order >= 3:
                tpp = (-16.0 * np.pi ** 3 * u * s2
                       * ((1.0 + self._u2) ** 2
                          + 2.0 * u * c2 * (1.0 + self._u2)
                          - 8.0 * self._u2) / d ** 3).sum(axis=-1)
                wpp = -(2.0 * np.pi ** 3 * np.cos(np.pi * z0) / sin_z ** 3
                        + tpp)
        return zeta, wp, wpp

    def __repr__(self):
        return f"Lattice(tau={self.tau})"
