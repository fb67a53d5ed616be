"""Krichever-Novikov basis forms on marked curves of genus 0 and 1.

A basis element of weight lam and degree n at in-point p is the unique
meromorphic lam-form, holomorphic outside the marked points, with

    ord at z_i   = (n + 1 - lam) - delta_i^p          (i = 1..N)
    ord at out   = -N(n + 1 - lam) + (2 lam - 1)(g - 1)   (generic degrees)

normalized so the local expansion at z_p starts (z - z_p)^(n-lam) (1 + O(.)).

Genus 0 elements are rational products in the quasi-global coordinate; genus 1
elements are sigma-function products over the normalized lattice, where the
degree -1 functions need the duality correction by degree-0 elements (the
gamma matrix below).  On the torus the canonical bundle is trivial, so every
weight is the lift f^lam_{n,p} = A_{n-lam,p} dz^lam of a function.

Evaluation is vectorized; first, second and third derivatives come from
logarithmic derivatives of the factor products (zeta, wp, wp' on the torus).
"""

from __future__ import annotations

import numpy as np

from .curves import INFINITY, MarkedCurve
from .errors import NongenericConfigurationError
from .laurent import (DEFAULT_SAMPLES, ContourSpec, LaurentExpansion,
                      contour_integral_adaptive, expand_at)
from .weierstrass import Lattice

ORDER_DETECTION_TOL = 1e-9
_W1_OFFSET = 0.37 + 0.21j
# pairing circles use a larger fraction of the gap than the kernel default:
# still a single-singularity disc, but the smaller dynamic range of the
# integrand on the circle buys two orders of magnitude of roundoff headroom
# on products with deep poles
PAIRING_RADIUS_FACTOR = 0.45


def _merge_factors(factors):
    """Combine repeated base points (exact complex equality) and drop
    exponent-zero factors; exact cancellation keeps products evaluable at
    points where a pole and a zero coincide."""
    merged: dict[complex, int] = {}
    for a, e in factors:
        if e:
            merged[a] = merged.get(a, 0) + e
    return tuple((a, e) for a, e in merged.items() if e)


class RationalTerm:
    """coeff * prod (z - a_i)^(e_i) on the sphere."""

    __slots__ = ("coeff", "factors")

    def __init__(self, coeff: complex, factors):
        self.coeff = complex(coeff)
        self.factors = _merge_factors(factors)

    def value(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.full(z.shape, self.coeff, dtype=complex)
        for a, e in self.factors:
            out = out * (z - a) ** e
        return out

    def _log_parts(self, z, order):
        z = np.asarray(z, dtype=complex)
        l1 = np.zeros(z.shape, dtype=complex)
        l2 = np.zeros(z.shape, dtype=complex) if order >= 2 else None
        l3 = np.zeros(z.shape, dtype=complex) if order >= 3 else None
        for a, e in self.factors:
            w = z - a
            l1 += e / w
            if order >= 2:
                l2 -= e / w ** 2
            if order >= 3:
                l3 += 2.0 * e / w ** 3
        return l1, l2, l3

    def scaled(self, c: complex) -> "RationalTerm":
        return RationalTerm(self.coeff * c, self.factors)

    def times(self, other: "RationalTerm") -> "RationalTerm":
        return RationalTerm(self.coeff * other.coeff,
                            self.factors + other.factors)

    def describe(self):
        return {"kind": "rational", "coeff": self.coeff,
                "factors": [[a, e] for a, e in self.factors]}


class SigmaTerm:
    """exp(log_coeff + linear*z) * prod sigma(z - a_i)^(e_i) on the torus.

    The scalar is held as a log so that normalization constants with huge
    modulus (they contain exp(eta * |shift|^2) growth) never overflow.  The
    explicit linear exponent absorbs the quasi-periodic multiplier that
    appears when a base point far outside the fundamental cell is replaced by
    its reduction; keeping arguments small keeps the log-space cancellation
    well conditioned.
    """

    __slots__ = ("log_coeff", "factors", "lattice", "linear")

    def __init__(self, log_coeff, factors, lattice: Lattice,
                 linear=0j, reduce_points: bool = True):
        # exponent bookkeeping stays in extended precision end to end
        lin = np.clongdouble(linear)
        const = np.clongdouble(log_coeff)
        if reduce_points:
            reduced = []
            for a, e in factors:
                a_red, dlin, dconst = _reduce_base_point(lattice, a)
                reduced.append((a_red, e))
                lin += e * dlin
                const += e * dconst
            factors = reduced
        self.log_coeff = const
        self.factors = _merge_factors(factors)
        self.lattice = lattice
        self.linear = lin

    def _stacked(self, z):
        """(shifted points of shape z-shape x factors, exponent vector)."""
        bases = np.array([a for a, _ in self.factors])
        exps = np.array([e for _, e in self.factors])
        return np.asarray(z, dtype=complex)[..., None] - bases, exps

    def log_value(self, z):
        z = np.asarray(z, dtype=complex)
        acc = self.log_coeff + self.linear * z.astype(np.clongdouble)
        if self.factors:
            shifted, exps = self._stacked(z)
            acc = acc + (self.lattice.log_sigma(shifted) * exps).sum(axis=-1)
        return acc

    def value(self, z):
        return np.exp(self.log_value(z)).astype(complex)

    def _log_parts(self, z, order):
        z = np.asarray(z, dtype=complex)
        l1 = np.full(z.shape, complex(self.linear), dtype=complex)
        l2 = np.zeros(z.shape, dtype=complex) if order >= 2 else None
        l3 = np.zeros(z.shape, dtype=complex) if order >= 3 else None
        if self.factors:
            shifted, exps = self._stacked(z)
            zeta, wp, wpp = self.lattice.derivative_bundle_fast(shifted, order)
            l1 = l1 + (zeta * exps).sum(axis=-1)
            if order >= 2:
                l2 = l2 - (wp * exps).sum(axis=-1)
            if order >= 3:
                l3 = l3 - (wpp * exps).sum(axis=-1)
        return l1, l2, l3

    def scaled(self, c: complex) -> "SigmaTerm":
        return SigmaTerm(self.log_coeff + np.log(complex(c)), self.factors,
                         self.lattice, self.linear, reduce_points=False)

    def times(self, other: "SigmaTerm") -> "SigmaTerm":
        return SigmaTerm(self.log_coeff + other.log_coeff,
                         self.factors + other.factors, self.lattice,
                         self.linear + other.linear, reduce_points=False)

    def describe(self):
        return {"kind": "sigma", "log_coeff": complex(self.log_coeff),
                "linear": complex(self.linear),
                "factors": [[a, e] for a, e in self.factors]}


def _reduce_base_point(lattice: Lattice, a: complex):
    """Rewrite sigma(z - a) = exp(dconst + dlin*z) sigma(z - a_red) with a_red
    in the centered cell, via the quasi-periodicity of sigma."""
    a = complex(a)
    a_red, m, n = lattice.reduce(a)
    a_red, m, n = complex(a_red), float(m), float(n)
    if m == 0.0 and n == 0.0:
        return a, np.clongdouble(0), np.clongdouble(0)
    from .weierstrass import PI_LD
    w = m + n * lattice._tau_ld
    eta = lattice.eta_of_period_ld(m, n)
    dlin = -eta
    dconst = eta * (np.clongdouble(a_red) + w / 2.0) + 1j * PI_LD * (m + n + m * n)
    return a_red, dlin, dconst


def _term_derivative(term, z, order):
    v = term.value(z)
    if order == 0:
        return v
    l1, l2, l3 = term._log_parts(z, order)
    if order == 1:
        return v * l1
    if order == 2:
        return v * (l1 ** 2 + l2)
    if order == 3:
        return v * (l1 ** 3 + 3.0 * l1 * l2 + l3)
    raise ValueError("derivatives beyond third order not supported")


class KNForm:
    """A lam-form represented as a sum of factor-product terms.

    `value` returns the scalar coefficient of dz^lam in the global
    coordinate; the form itself is value(z) dz^lam.

    `orders_in` / `order_out` record the construction's order prescription
    (lower bounds for linear combinations); the pairing engine uses them to
    integrate on the better-conditioned side of the residue theorem.  They
    are bookkeeping, not results: the numerical order detection in
    `KNBasis.leading_exponent` stays independent of them.
    """

    def __init__(self, curve: MarkedCurve, weight: int, degree: int,
                 point_index: int | None, terms,
                 orders_in=None, order_out=None):
        self.curve = curve
        self.weight = int(weight)
        self.degree = int(degree)
        self.point_index = point_index
        self.terms = tuple(terms)
        self.orders_in = None if orders_in is None else tuple(orders_in)
        self.order_out = order_out

    def value(self, z):
        out = None
        for t in self.terms:
            v = t.value(z)
            out = v if out is None else out + v
        return out

    __call__ = value

    def derivative(self, z, order: int = 1):
        out = None
        for t in self.terms:
            v = _term_derivative(t, z, order)
            out = v if out is None else out + v
        return out

    def scaled(self, c: complex) -> "KNForm":
        return KNForm(self.curve, self.weight, self.degree, self.point_index,
                      [t.scaled(c) for t in self.terms],
                      self.orders_in, self.order_out)

    @staticmethod
    def linear_combination(pairs) -> "KNForm":
        """sum of c * form over (c, form) pairs (all of one weight);
        order prescriptions combine as elementwise minima."""
        pairs = [(c, f) for c, f in pairs if c != 0]
        if not pairs:
            raise ValueError("empty linear combination")
        weight = pairs[0][1].weight
        curve = pairs[0][1].curve
        terms = []
        for c, f in pairs:
            if f.weight != weight:
                raise ValueError("weights differ in linear combination")
            terms.extend(t if c == 1 else t.scaled(c) for t in f.terms)
        orders_in = order_out = None
        if all(f.orders_in is not None for _, f in pairs):
            orders_in = tuple(min(f.orders_in[i] for _, f in pairs)
                              for i in range(curve.n_points))
        if all(f.order_out is not None for _, f in pairs):
            order_out = min(f.order_out for _, f in pairs)
        return KNForm(curve, weight, pairs[0][1].degree, None, terms,
                      orders_in, order_out)

    def __repr__(self):
        return (f"KNForm(weight={self.weight}, degree={self.degree}, "
                f"p={self.point_index}, {len(self.terms)} term(s))")


class FormProduct:
    """Pointwise product of forms; weight adds. Evaluation only."""

    def __init__(self, *parts):
        self.parts = parts
        self.weight = sum(p.weight for p in parts)

    def value(self, z):
        out = self.parts[0].value(z)
        for p in self.parts[1:]:
            out = out * p.value(z)
        return out

    __call__ = value


class KNBasis:
    """Constructs and caches the KN basis elements of a marked curve."""

    def __init__(self, curve: MarkedCurve, samples: int | None = None):
        self.curve = curve
        self.samples = samples
        self._functions: dict[tuple[int, int], KNForm] = {}
        self._forms: dict[tuple[int, int, int], KNForm] = {}
        self._primed: list[KNForm] | None = None
        self._gamma: np.ndarray | None = None
        self._w1: list[complex] | None = None
        self._contours: dict[complex, ContourSpec] = {}
        self._points: dict[tuple[complex, int], np.ndarray] = {}
        # id -> (form kept alive, {samples: values}); holding the form pins
        # its id so cache keys can never be recycled
        self._values: dict[int, tuple] = {}

    # -- public surface -------------------------------------------------------

    def form(self, weight: int, degree: int, p: int) -> KNForm:
        """The basis element f^weight_{degree, p} (p is 0-based)."""
        n = self.curve.n_points
        if not 0 <= p < n:
            raise ValueError("point index out of range")
        key = (weight, degree, p)
        if key not in self._forms:
            if self.curve.genus == 0:
                self._forms[key] = self._form_g0(weight, degree, p)
            else:
                # the canonical bundle is trivial on the torus: every weight
                # is the lift of a function, orders included
                fn = self.function(degree - weight, p)
                self._forms[key] = KNForm(self.curve, weight, degree, p,
                                          fn.terms, fn.orders_in, fn.order_out)
        return self._forms[key]

    def function(self, m: int, p: int) -> KNForm:
        """A_{m,p} = f^0_{m,p}."""
        key = (m, p)
        if key not in self._functions:
            if self.curve.genus == 0:
                self._functions[key] = self._form_g0(0, m, p)
            else:
                self._functions[key] = self._function_g1(m, p)
        return self._functions[key]

    def vector_field(self, n: int, p: int) -> KNForm:
        """e_{n,p} = f^{-1}_{n,p}."""
        return self.form(-1, n, p)

    def omega(self, n: int, p: int) -> KNForm:
        """omega^{n,p} = f^1_{-n,p} (KN dual of A_{n,p})."""
        return self.form(1, -n, p)

    def quadratic(self, n: int, p: int) -> KNForm:
        """Omega^{n,p} = f^2_{-n,p} (KN dual of e_{n,p})."""
        return self.form(2, -n, p)

    # -- genus 0 ---------------------------------------------------------------

    def _form_g0(self, lam: int, n: int, p: int) -> KNForm:
        zs = self.curve.in_points
        zp = zs[p]
        norm = 1.0 + 0j
        factors = [(zp, n - lam)]
        for i, zi in enumerate(zs):
            if i == p:
                continue
            factors.append((zi, n - lam + 1))
            norm *= (zp - zi) ** (-n + lam - 1)
        n_pts = self.curve.n_points
        orders_in = [(n + 1 - lam) - (1 if i == p else 0)
                     for i in range(n_pts)]
        order_out = -n_pts * (n + 1 - lam) - 2 * lam + 1
        return KNForm(self.curve, lam, n, p, [RationalTerm(norm, factors)],
                      orders_in, order_out)

    # -- genus 1 ---------------------------------------------------------------

    def _collision(self, w: complex, tol: float) -> bool:
        return any(self.curve.distance(w, q) < tol
                   for q in self.curve.marked_points())

    def _function_g1(self, m: int, p: int) -> KNForm:
        n_pts = self.curve.n_points
        if m == 0 and n_pts == 1:
            term = SigmaTerm(0.0, [], self.curve.lattice)
            return KNForm(self.curve, 0, 0, p, [term], [0], 0)
        if m == -1:
            self._build_degree_minus_one()
            return self._minus_one[p]
        return self._generic_function_g1(m, p)

    def _normalized_sigma_form(self, degree: int, p: int, factors,
                               orders_in=None, order_out=None) -> KNForm:
        """Scale a sigma product so its expansion at z_p starts
        (z - z_p)^degree (1 + O(.)); sigma(w) = w(1 + O(w^4)) makes the
        normalizer just the regularized value at z_p."""
        lat = self.curve.lattice
        zp = self.curve.in_points[p]
        raw = SigmaTerm(0.0, factors, lat)
        regular = raw.times(SigmaTerm(0.0, [(zp, -degree)], lat))
        log_norm = regular.log_value(zp)
        term = SigmaTerm(raw.log_coeff - log_norm, raw.factors, lat,
                         raw.linear, reduce_points=False)
        return KNForm(self.curve, 0, degree, p, [term], orders_in, order_out)

    def _generic_function_g1(self, m: int, p: int) -> KNForm:
        curve = self.curve
        zs, z0, n_pts = curve.in_points, curve.out_point, curve.n_points
        zp = zs[p]
        b = -(m + 1) * sum(zs) + zp + n_pts * (m + 1) * z0
        if self._collision(b, 1e-9 * curve.min_gap()):
            raise NongenericConfigurationError(
                f"nongeneric configuration: zero point of A_({m},{p}) hits a "
                f"marked point mod L")
        factors = [(zi, m + 1) for zi in zs]
        factors += [(zp, -1), (z0, -n_pts * (m + 1)), (b, 1)]
        orders_in = [m + 1 - (1 if i == p else 0) for i in range(n_pts)]
        return self._normalized_sigma_form(m, p, factors, orders_in,
                                           -n_pts * (m + 1))

    def _primed_minus_one(self, p: int, w1: complex) -> KNForm:
        """A'_{-1,p}: simple pole at z_p and at the out-point, order zero at
        the other in-points; fixed only up to adding constants."""
        curve = self.curve
        zp, z0 = curve.in_points[p], curve.out_point
        w2 = zp + z0 - w1
        factors = [(zp, -1), (z0, -1), (w1, 1), (w2, 1)]
        orders_in = [-1 if i == p else 0 for i in range(curve.n_points)]
        return self._normalized_sigma_form(-1, p, factors, orders_in, -1)

    def _choose_w1(self, p: int) -> complex:
        curve = self.curve
        zp, z0 = curve.in_points[p], curve.out_point
        gap = curve.min_gap()
        tol = 1e-6 * gap
        offset = _W1_OFFSET * gap
        for attempt in range(12):
            w1 = zp + offset * np.exp(2j * np.pi * attempt / 9.0)
            w2 = zp + z0 - w1
            if not (self._collision(w1, tol) or self._collision(w2, tol)
                    or curve.distance(w1, w2) < tol):
                return complex(w1)
        raise NongenericConfigurationError(
            "nongeneric configuration: no admissible auxiliary point w1")

    def _build_degree_minus_one(self):
        if self._primed is not None:
            return
        curve = self.curve
        n_pts = curve.n_points
        self._w1 = [self._choose_w1(p) for p in range(n_pts)]
        primed = [self._primed_minus_one(p, self._w1[p]) for p in range(n_pts)]
        # gamma_{r,s} = (1/2) sum of in-point residues of A'_r A'_s dz
        gamma = np.zeros((n_pts, n_pts), dtype=complex)
        for r in range(n_pts):
            for s in range(r, n_pts):
                prod = FormProduct(primed[r], primed[s])
                val = 0.5 * self._residue_sum(prod.value)
                gamma[r, s] = gamma[s, r] = val
        corrected = []
        for r in range(n_pts):
            pairs = [(1.0, primed[r])]
            pairs += [(-gamma[r, s], self.function(0, s))
                      for s in range(n_pts)]
            f = KNForm.linear_combination(pairs)
            corrected.append(KNForm(curve, 0, -1, r, f.terms,
                                    f.orders_in, f.order_out))
        self._primed = primed
        self._gamma = gamma
        self._minus_one = corrected

    @property
    def gamma_matrix(self) -> np.ndarray:
        """Duality-correction matrix for the degree -1 functions (genus 1)."""
        self._build_degree_minus_one()
        return self._gamma

    @property
    def primed_minus_one(self) -> list[KNForm]:
        """The uncorrected A'_{-1,p} elements (genus 1)."""
        self._build_degree_minus_one()
        return list(self._primed)

    @property
    def w1_points(self) -> list[complex]:
        self._build_degree_minus_one()
        return list(self._w1)

    # -- residue machinery ------------------------------------------------------

    def _contour(self, center: complex) -> ContourSpec:
        if center not in self._contours:
            radius = self.curve.contour_radius(center, PAIRING_RADIUS_FACTOR)
            self._contours[center] = self.curve.contour(
                center, samples=self.samples or DEFAULT_SAMPLES, radius=radius)
        return self._contours[center]

    def out_contour(self) -> ContourSpec:
        """Contour capturing the out-point residue: a circle around the out
        lift (genus 1) or a circle enclosing every in-point (genus 0, where
        the enclosed residue sum is minus the residue at infinity)."""
        if self.curve.genus == 1:
            return self._contour(self.curve.out_point)
        if "out" not in self._contours:
            radius = 3.0 * max(1.0, max(abs(z) for z in self.curve.in_points))
            self._contours["out"] = ContourSpec(
                0j, radius, self.samples or DEFAULT_SAMPLES)
        return self._contours["out"]

    def contour_points(self, spec: ContourSpec, samples: int) -> np.ndarray:
        key = (spec, samples)
        if key not in self._points:
            self._points[key] = spec.points(samples)
        return self._points[key]

    def contour_values(self, form, spec: ContourSpec,
                       samples: int) -> np.ndarray:
        """Values of a form on a cached circle, memoized per form object."""
        entry = self._values.get(id(form))
        if entry is None or entry[0] is not form:
            entry = (form, {})
            self._values[id(form)] = entry
        key = (spec, samples)
        vals = entry[1].get(key)
        if vals is None:
            vals = np.asarray(form.value(self.contour_points(spec, samples)))
            entry[1][key] = vals
        return vals

    def _residue_sum(self, func) -> complex:
        """Sum of residues of func(z) dz over the in-points."""
        total = 0j
        for zp in self.curve.in_points:
            total += contour_integral_adaptive(func, self._contour(zp))
        return total

    def product_residue(self, forms, spec: ContourSpec) -> complex:
        """Circle integral of a product of forms, reusing cached per-form
        values; doubling agreement check with escalation to 4096 samples.

        Products are flattened to their elementary factors so that, say, a
        structure-constant table caches each basis function once per circle
        instead of once per product."""
        from .laurent import (AGREEMENT_TOL, ESCALATED_SAMPLES, _mean_extended)
        flat = []
        for f in forms:
            flat.extend(f.parts if isinstance(f, FormProduct) else (f,))
        center = spec.center
        results = []
        for samples in (spec.samples, 2 * spec.samples):
            prod = self.contour_points(spec, samples) - center
            for f in flat:
                prod = prod * self.contour_values(f, spec, samples)
            results.append(_mean_extended(prod))
        v1, v2 = results
        if abs(v1 - v2) <= AGREEMENT_TOL * max(1.0, abs(v1), abs(v2)):
            return v2
        zs = spec.points(ESCALATED_SAMPLES)
        prod = zs - center
        for f in flat:
            prod = prod * np.asarray(f.value(zs))
        return _mean_extended(prod)

    def product_residue_sum_in(self, forms) -> complex:
        """Residue sum of a product of forms over the in-points."""
        return sum((self.product_residue(forms, self._contour(zp))
                    for zp in self.curve.in_points), start=0j)

    # -- local analysis -----------------------------------------------------------

    def local_expansion(self, form, point: complex, lo: int, hi: int,
                        samples: int | None = None) -> LaurentExpansion:
        c = self.curve.contour(point) if samples is None else \
            self.curve.contour(point, samples=samples)
        return expand_at(form.value, c, lo, hi)

    def leading_exponent(self, form, point: complex, lo: int | None = None,
                         hi: int | None = None) -> int:
        """Numerically detected order of `form` at `point`: the first exponent
        whose coefficient exceeds 1e-9 times the largest in the window."""
        if lo is None:
            lo = form.degree - abs(form.weight) - self.curve.n_points - 4
        if hi is None:
            hi = abs(form.degree) + abs(form.weight) + self.curve.n_points + 4
        series = self.local_expansion(form, point, lo, hi)
        mags = np.abs(series.coefficients)
        if mags.size == 0 or mags.max() == 0.0:
            raise ValueError("form vanishes identically in the window")
        idx = np.flatnonzero(mags > ORDER_DETECTION_TOL * mags.max())[0]
        return series.min_exponent + int(idx)

    def order_at_infinity(self, form) -> int:
        """Genus 0 only: order of the lam-form at z = infinity, detected from
        the expansion of f(1/w) w^(-2 lam) at w = 0."""
        if self.curve.genus != 0:
            raise ValueError("out-point order at infinity is a genus-0 notion")
        lam = form.weight
        scale = max(abs(z) for z in self.curve.in_points)
        radius = 1.0 / (3.0 * (scale + 1.0))
        contour = ContourSpec(0j, radius)

        def coeff(w):
            return form.value(1.0 / w) * w ** (-2 * lam)

        n_pts = self.curve.n_points
        span = n_pts * (abs(form.degree) + abs(lam) + 2) + 2 * abs(lam) + 4
        series = expand_at(coeff, contour, -span, span)
        mags = np.abs(series.coefficients)
        idx = np.flatnonzero(mags > ORDER_DETECTION_TOL * mags.max())[0]
        return series.min_exponent + int(idx)
