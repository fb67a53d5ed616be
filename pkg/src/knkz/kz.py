"""Sugawara coefficient tables and the assembled KZ systems.

For each moduli direction (one per moving point, plus the complex-structure
direction on the torus) the connection term is

    nabla_k = d_k - 1/(c + kappa) * sum l^{(n,p)(m,s)}_k :u(n,p)u(m,s):,

with l^{(n,p)(m,s)}_k the residue sum of omega^{n,p} omega^{m,s} e_k over
the in-points.  The case analysis that eliminates almost every term is kept
explicit: every table entry carries a classification

    survives                  enters the final equation
    holomorphic_zero          the coefficient itself vanishes (checkable)
    killed_by_annihilation    a positive mode hits the annihilated vector
    killed_by_normal_ordering the ordering moves a positive mode right
    killed_by_factorization   removed by the quotient over currents
                              vanishing at the out-point

Point-motion fields are the degree -1 basis fields adjusted by vertical
degree-0 fields so the diagonal (0,i)(0,i) coefficients vanish; the
adjustment changes no other surviving coefficient.  Every surviving
coefficient has a closed form (rational on the sphere, sigma-quotients on
the torus) which is cross-checked against the quadrature engine, and the
genus-0 system reduces on the tensor floor to

    d_i - 2/(c + kappa) * sum_{j != i} Omega_ij / (z_i - z_j).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import kn_pairing, residue_sum_in
from .basis import FormProduct, KNBasis, KNForm, SigmaTerm, _term_derivative
from .curves import MarkedCurve
from .errors import CriticalLevelError, NongenericConfigurationError
from .laurent import contour_integral_adaptive
from .liealg import WeightedTensorSpace, casimir_two_site

SURVIVES = "survives"
HOLOMORPHIC_ZERO = "holomorphic_zero"
KILLED_BY_ANNIHILATION = "killed_by_annihilation"
KILLED_BY_NORMAL_ORDERING = "killed_by_normal_ordering"
KILLED_BY_FACTORIZATION = "killed_by_factorization"

ZERO_CHECK_TOL = 1e-9


# -- the case analysis ----------------------------------------------------------


def classify_point_direction(genus: int, n: int, i: int, m: int, j: int,
                             k: int) -> str:
    """Fate of the l^{(n,i)(m,j)}_k term in the point-motion equation k,
    assuming the state is annihilated by the positive-degree currents and
    the fields were adjusted to kill the diagonal (0,i)(0,i) terms.

    The vanishing claims are only made for n+m <= -1, where order counting
    at the in-points kills the residues for the adjusted field as well; at
    n+m >= 0 the degree-0 correctors can produce nonzero coefficients, all
    of which carry a positive mode and die on the annihilated state.
    """
    s = n + m
    if n > 0 and m > 0:
        return KILLED_BY_ANNIHILATION
    if n > 0 or m > 0:
        if s <= -2 or (s == -1 and not i == j == k):
            return HOLOMORPHIC_ZERO
        return KILLED_BY_NORMAL_ORDERING
    # both degrees <= 0
    if s <= -2:
        return HOLOMORPHIC_ZERO
    if s == -1:
        return SURVIVES if i == j == k else HOLOMORPHIC_ZERO
    # n = m = 0
    if i == j:
        return HOLOMORPHIC_ZERO  # vanishes after the vertical adjustment
    return SURVIVES if k in (i, j) else HOLOMORPHIC_ZERO


def classify_modulus_direction(n: int, i: int, m: int, j: int) -> str:
    """Fate of the l^{(n,i)(m,j)}_0 term in the genus-1 complex-structure
    equation (field e_0 with simple poles at every marked point)."""
    if n > 0 and m > 0:
        return KILLED_BY_ANNIHILATION
    if n > 0 or m > 0:
        return KILLED_BY_NORMAL_ORDERING
    lo, hi = min(n, m), max(n, m)
    if (n, m) == (0, 0):
        return SURVIVES
    if (lo, hi) == (-1, 0):
        return SURVIVES
    if (lo, hi) == (-2, 0):
        return SURVIVES if i == j else HOLOMORPHIC_ZERO
    if (lo, hi) == (-1, -1):
        return SURVIVES if i == j else HOLOMORPHIC_ZERO
    if hi == 0:                      # (0, n <= -3)
        return HOLOMORPHIC_ZERO
    return HOLOMORPHIC_ZERO         # both < 0 with n + m <= -3


def classify_contribution(genus: int, n: int, i: int, m: int, j: int,
                          direction) -> str:
    """Dispatch on the direction: ('point', k) or ('modulus', 0)."""
    kind, k = direction
    if kind == "point":
        return classify_point_direction(genus, n, i, m, j, k)
    if genus != 1:
        raise ValueError("the modulus direction exists only for genus 1")
    return classify_modulus_direction(n, i, m, j)


# -- coefficients by quadrature ----------------------------------------------------


def l_coefficient(basis: KNBasis, n: int, p: int, m: int, s: int,
                  e_field) -> complex:
    """l^{(n,p)(m,s)} against the field e: residue sum over the in-points of
    omega^{n,p} omega^{m,s} e."""
    return basis.product_residue_sum_in(
        (basis.omega(n, p), basis.omega(m, s), e_field))


def omega_tilde(basis: KNBasis, i: int) -> FormProduct:
    """The weight-2 square omega^{0,i} omega^{0,i} used for the adjustment."""
    w = basis.omega(0, i)
    return FormProduct(w, w)


def adjust_vector_field(basis: KNBasis, k: int):
    """e'_k = e_k + sum_i lambda_{ki} E_i with lambda_{ki} = -<e_k, Ot^i>,
    so that <e'_k, Ot^i> = 0 for every i: the diagonal (0,i)(0,i) terms drop
    out of equation k while everything else is untouched (the correctors are
    vertical and pair to zero with the surviving integrands)."""
    curve = basis.curve
    e_k = basis.vector_field(-1, k)
    lambdas = []
    pairs = [(1.0, e_k)]
    for i in range(curve.n_points):
        lam = -kn_pairing(basis, e_k, omega_tilde(basis, i))
        lambdas.append(lam)
        pairs.append((lam, basis.vector_field(0, i)))
    adjusted = KNForm.linear_combination(pairs)
    adjusted.point_index = k
    return adjusted, np.asarray(lambdas)


def adjusted_point_fields(basis: KNBasis):
    return [adjust_vector_field(basis, k)[0]
            for k in range(basis.curve.n_points)]


def moduli_field_g1(basis: KNBasis) -> KNForm:
    """The complex-structure deformation field on the torus: simple poles at
    every marked point including the out-point, zeros at the barycenter
    E = (z_0 + sum z_i)/(N+1)."""
    curve = basis.curve
    if curve.genus != 1:
        raise ValueError("the moduli field is a genus-1 construction")
    zs, z0, n_pts = curve.in_points, curve.out_point, curve.n_points
    center = (z0 + sum(zs)) / (n_pts + 1)
    if any(curve.distance(center, q) < 1e-9 * curve.min_gap()
           for q in curve.marked_points()):
        raise NongenericConfigurationError(
            "nongeneric configuration: the zero point of the moduli field "
            "collides with a marked point")
    factors = [(center, n_pts + 1), (z0, -1)] + [(z, -1) for z in zs]
    term = SigmaTerm(0.0, factors, curve.lattice)
    return KNForm(curve, -1, -3, None, [term],
                  orders_in=[-1] * n_pts, order_out=-1)


def field_residue_at(basis: KNBasis, vec_field, point: complex) -> complex:
    """Residue of a vector field's coefficient function at a point (the
    torus trivializes the tangent bundle, so this is well defined)."""
    spec = basis._contour(point)
    return contour_integral_adaptive(vec_field.value, spec)


# -- closed forms, genus 1 ----------------------------------------------------------


class ClosedFormsG1:
    """The sigma-function coefficient formulas for the torus, organized so
    each one is a finite product/derivative evaluation at marked points."""

    def __init__(self, basis: KNBasis):
        self.basis = basis
        self.curve = basis.curve
        self.lat = basis.curve.lattice
        self.gamma = basis.gamma_matrix
        self.e0 = moduli_field_g1(basis)
        self._e0_term = self.e0.terms[0]

    def _sigma(self, z) -> complex:
        return complex(self.lat.sigma(z))

    def _primed_term(self, i: int) -> SigmaTerm:
        return self.basis.primed_minus_one[i].terms[0]

    def point_00(self, k: int, j: int) -> complex:
        """l^{(0,k)(0,j)}_k for j != k: the primed degree -1 function of j
        evaluated at z_k, minus the duality correction gamma_{jk}."""
        if j == k:
            raise ValueError("diagonal handled by the field adjustment")
        zk = self.curve.in_points[k]
        return complex(self.basis.primed_minus_one[j].value(zk)) \
            - complex(self.gamma[j, k])

    def point_0m1(self) -> complex:
        """l^{(0,k)(-1,k)}_k: the triple residue collapses to the product of
        the three unit normalizations."""
        return 1.0 + 0j

    def modulus_new1(self, i: int) -> complex:
        """l^{(-1,i)(-1,i)}_0: the residue of the moduli field at z_i."""
        zi = self.curve.in_points[i]
        reg = self._e0_term.times(SigmaTerm(0.0, [(zi, 1)], self.lat))
        return complex(reg.value(zi))

    def modulus_new2(self, i: int) -> complex:
        """l^{(0,i)(-2,i)}_0: equal to the same residue by the unit
        normalizations of A_{-1,i} A_{1,i}."""
        return self.modulus_new1(i)

    def _co22_numerator(self, i: int, j: int) -> SigmaTerm:
        """F with the pole at z_i regularized: A'_{-1,i} A_{0,j} e0coeff
        sigma(z - z_i), of order zero at every moving point."""
        zi = self.curve.in_points[i]
        f = self._primed_term(i).times(self.basis.function(0, j).terms[0])
        f = f.times(self._e0_term)
        return f.times(SigmaTerm(0.0, [(zi, 1)], self.lat))

    def modulus_0m1(self, i: int, j: int) -> complex:
        """l^{(0,i)(-1,j)}_0, including the second-order-pole diagonal."""
        zi = self.curve.in_points[i]
        zj = self.curve.in_points[j]
        if i != j:
            # simple poles at z_i and z_j only; regularize the j pole too
            f = self._co22_numerator(i, j)
            f = f.times(SigmaTerm(0.0, [(zj, 1)], self.lat))
            # res_i = F(z_i)/sigma(z_i - z_j), res_j = F(z_j)/sigma(z_j - z_i)
            val = (complex(f.value(zi)) / self._sigma(zi - zj)
                   + complex(f.value(zj)) / self._sigma(zj - zi))
        else:
            # double pole: the residue is the derivative of the regularized
            # numerator, sigma(w)^2 agreeing with w^2 to fourth order
            f = self._co22_numerator(i, i).times(
                SigmaTerm(0.0, [(zi, 1)], self.lat))
            val = complex(_term_derivative(f, np.asarray(zi), 1))
        return val - complex(self.gamma[i, j]) * self.modulus_new1(j)

    def modulus_00_hat(self, i: int, j: int) -> complex:
        """<w-hat^{0,i} w-hat^{0,j}, e_0>: the complete residue sum of
        A'_{-1,i} A'_{-1,j} e0coeff over the in-points (double/triple poles
        at z_i, z_j plus the simple poles at every other moving point)."""
        curve, lat = self.curve, self.lat
        zs = curve.in_points
        g = self._primed_term(i).times(self._primed_term(j))
        g = g.times(self._e0_term)
        total = 0j
        if i != j:
            for a in (i, j):
                h = g.times(SigmaTerm(0.0, [(zs[a], 2)], lat))
                total += complex(_term_derivative(h, np.asarray(zs[a]), 1))
        else:
            h = g.times(SigmaTerm(0.0, [(zs[i], 3)], lat))
            total += 0.5 * complex(_term_derivative(h, np.asarray(zs[i]), 2))
        for s2 in range(curve.n_points):
            if s2 in (i, j):
                continue
            ai = complex(self.basis.primed_minus_one[i].value(zs[s2]))
            aj = complex(self.basis.primed_minus_one[j].value(zs[s2]))
            total += ai * aj * self.modulus_new1(s2)
        return total

    def modulus_00(self, i: int, j: int) -> complex:
        """l^{(0,i)(0,j)}_0 with all duality corrections folded in."""
        n_pts = self.curve.n_points
        total = self.modulus_00_hat(i, j)
        for s2 in range(n_pts):
            total -= (self.gamma[i, s2] * self.modulus_0m1(j, s2)
                      + self.gamma[j, s2] * self.modulus_0m1(i, s2)
                      + self.gamma[i, s2] * self.gamma[j, s2]
                      * self.modulus_new1(s2))
        return complex(total)


# -- tables and systems ----------------------------------------------------------


@dataclass
class TableEntry:
    direction: tuple
    n: int
    p: int
    m: int
    s: int
    classification: str
    quadrature: complex | None = None
    closed_form: complex | None = None

    @property
    def value(self) -> complex:
        return self.closed_form if self.closed_form is not None \
            else self.quadrature

    @property
    def residual(self) -> float | None:
        if self.closed_form is None or self.quadrature is None:
            return None
        scale = max(1.0, abs(self.closed_form))
        return abs(self.closed_form - self.quadrature) / scale

    @property
    def provenance(self) -> str:
        if self.closed_form is not None and self.quadrature is not None:
            return "both"
        if self.closed_form is not None:
            return "closed_form"
        return "quadrature"


@dataclass
class CoefficientTable:
    genus: int
    directions: list
    entries: dict = field(default_factory=dict)

    def add(self, entry: TableEntry):
        self.entries[(entry.direction, entry.n, entry.p,
                      entry.m, entry.s)] = entry

    def get(self, direction, n, p, m, s) -> TableEntry:
        return self.entries[(direction, n, p, m, s)]

    def symmetry_defect(self) -> float:
        worst = 0.0
        for (d, n, p, m, s), e in self.entries.items():
            mirror = self.entries.get((d, m, s, n, p))
            if mirror is not None and e.quadrature is not None \
                    and mirror.quadrature is not None:
                worst = max(worst, abs(e.quadrature - mirror.quadrature))
        return worst

    def classified_zero_defect(self) -> float:
        worst = 0.0
        for e in self.entries.values():
            if e.classification == HOLOMORPHIC_ZERO \
                    and e.quadrature is not None:
                worst = max(worst, abs(e.quadrature))
        return worst


@dataclass
class KZTerm:
    modes: tuple          # ((n, p), (m, s))
    coefficient: complex
    symmetrized: bool     # :u u: + :u u: with both orders
    closed_form: complex | None = None
    quadrature: complex | None = None
    in_reduced: bool = True

    @property
    def label(self) -> str:
        (n, p), (m, s) = self.modes
        a, b = f"u({n},{p})", f"u({m},{s})"
        if self.symmetrized and (n, p) != (m, s):
            return f":{a}{b}: + :{b}{a}:"
        return f":{a}{b}:"


@dataclass
class KZEquation:
    direction: tuple
    terms: list

    def surviving_terms(self):
        return [t for t in self.terms if t.in_reduced]


@dataclass
class KZSystem:
    genus: int
    curve: MarkedCurve
    level: complex
    kappa: complex
    equations: list
    table: CoefficientTable
    reduced_matrices: list | None = None   # genus 0 only
    metadata: dict = field(default_factory=dict)

    @property
    def prefactor(self) -> complex:
        return -1.0 / (self.level + self.kappa)


def _require_noncritical(space: WeightedTensorSpace):
    if abs(space.level + space.algebra.kappa) < 1e-12:
        raise CriticalLevelError("critical level")


def _fill_table(basis: KNBasis, table: CoefficientTable, direction,
                e_field, window, closed_lookup):
    """Quadrature plus classification for every ordered mode pair in the
    window; closed_lookup returns the closed form for survivors (or None)."""
    n_pts = basis.curve.n_points
    genus = basis.curve.genus
    lo, hi = window
    for n in range(lo, hi + 1):
        for p in range(n_pts):
            for m in range(lo, hi + 1):
                for s in range(n_pts):
                    cls = classify_contribution(genus, n, p, m, s, direction)
                    quad = l_coefficient(basis, n, p, m, s, e_field)
                    closed = closed_lookup(n, p, m, s, cls)
                    table.add(TableEntry(direction, n, p, m, s, cls,
                                         quadrature=quad, closed_form=closed))


def assemble_kz_g0(basis: KNBasis, space: WeightedTensorSpace,
                   table_window=(-2, 1)) -> KZSystem:
    """The genus-0 system: N point equations, their coefficient table, and
    the reduced matrices on the tensor floor."""
    curve = basis.curve
    if curve.genus != 0:
        raise ValueError("assemble_kz_g0 needs a genus-0 curve")
    _require_noncritical(space)
    zs = curve.in_points
    n_pts = curve.n_points
    fields = adjusted_point_fields(basis)
    table = CoefficientTable(0, [("point", k) for k in range(n_pts)])
    equations = []
    c_plus_k = space.level + space.algebra.kappa
    reduced = []
    for k in range(n_pts):
        direction = ("point", k)

        def closed(n, p, m, s, cls, k=k):
            if cls != SURVIVES:
                return None
            if (n, m) == (0, 0):
                return 1.0 / (zs[k] - zs[p if p != k else s])
            return 1.0 + 0j     # the (0,k)(-1,k) pair

        _fill_table(basis, table, direction, fields[k], table_window, closed)
        terms = []
        for i in range(n_pts):
            if i == k:
                continue
            entry = table.get(direction, 0, k, 0, i)
            terms.append(KZTerm(((0, k), (0, i)), entry.value,
                                symmetrized=True,
                                closed_form=entry.closed_form,
                                quadrature=entry.quadrature))
        entry = table.get(direction, 0, k, -1, k)
        terms.append(KZTerm(((0, k), (-1, k)), entry.value, symmetrized=True,
                            closed_form=entry.closed_form,
                            quadrature=entry.quadrature, in_reduced=False))
        equations.append(KZEquation(direction, terms))
        mat = np.zeros((space.dim, space.dim), dtype=complex)
        for i in range(n_pts):
            if i == k:
                continue
            mat += (2.0 / c_plus_k) * casimir_two_site(space, k, i) \
                / (zs[k] - zs[i])
        reduced.append(mat)
    return KZSystem(0, curve, space.level, space.algebra.kappa, equations,
                    table, reduced_matrices=reduced,
                    metadata={"fields": "adjusted degree -1 basis fields"})


def assemble_kz_g1(basis: KNBasis, space: WeightedTensorSpace,
                   table_window=(-2, 1)) -> KZSystem:
    """The genus-1 system: N point equations plus the complex-structure
    equation along the moduli field, with sigma-function closed forms."""
    curve = basis.curve
    if curve.genus != 1:
        raise ValueError("assemble_kz_g1 needs a genus-1 curve")
    _require_noncritical(space)
    n_pts = curve.n_points
    closed_forms = ClosedFormsG1(basis)
    fields = adjusted_point_fields(basis)
    directions = [("point", k) for k in range(n_pts)] + [("modulus", 0)]
    table = CoefficientTable(1, directions)
    equations = []
    for k in range(n_pts):
        direction = ("point", k)

        def closed(n, p, m, s, cls, k=k):
            if cls != SURVIVES:
                return None
            if (n, m) == (0, 0):
                return closed_forms.point_00(k, p if p != k else s)
            return closed_forms.point_0m1()

        _fill_table(basis, table, direction, fields[k], table_window, closed)
        terms = []
        for i in range(n_pts):
            if i == k:
                continue
            entry = table.get(direction, 0, k, 0, i)
            terms.append(KZTerm(((0, k), (0, i)), entry.value,
                                symmetrized=True,
                                closed_form=entry.closed_form,
                                quadrature=entry.quadrature))
        entry = table.get(direction, 0, k, -1, k)
        terms.append(KZTerm(((0, k), (-1, k)), entry.value, symmetrized=True,
                            closed_form=entry.closed_form,
                            quadrature=entry.quadrature))
        equations.append(KZEquation(direction, terms))

    direction = ("modulus", 0)

    def closed_mod(n, p, m, s, cls):
        if cls != SURVIVES:
            return None
        lo, hi = min(n, m), max(n, m)
        if (n, m) == (0, 0):
            return closed_forms.modulus_00(p, s)
        if (lo, hi) == (-1, 0):
            i, j = (p, s) if n == 0 else (s, p)   # (0,i)(-1,j) orientation
            return closed_forms.modulus_0m1(i, j)
        if (lo, hi) == (-1, -1):
            return closed_forms.modulus_new1(p)
        return closed_forms.modulus_new2(p if n == 0 else s)

    _fill_table(basis, table, direction, closed_forms.e0,
                (min(table_window[0], -2), table_window[1]), closed_mod)
    terms = []
    for i in range(n_pts):
        for j in range(n_pts):
            entry = table.get(direction, 0, i, 0, j)
            terms.append(KZTerm(((0, i), (0, j)), entry.value,
                                symmetrized=False,
                                closed_form=entry.closed_form,
                                quadrature=entry.quadrature))
    for i in range(n_pts):
        for j in range(n_pts):
            entry = table.get(direction, 0, i, -1, j)
            terms.append(KZTerm(((0, i), (-1, j)), entry.value,
                                symmetrized=True,
                                closed_form=entry.closed_form,
                                quadrature=entry.quadrature))
    for i in range(n_pts):
        entry = table.get(direction, -1, i, -1, i)
        terms.append(KZTerm(((-1, i), (-1, i)), entry.value,
                            symmetrized=False,
                            closed_form=entry.closed_form,
                            quadrature=entry.quadrature))
    for i in range(n_pts):
        entry = table.get(direction, 0, i, -2, i)
        terms.append(KZTerm(((0, i), (-2, i)), entry.value, symmetrized=True,
                            closed_form=entry.closed_form,
                            quadrature=entry.quadrature, in_reduced=False))
    equations.append(KZEquation(direction, terms))

    out_res = {
        "moduli_field": complex(field_residue_at(basis, closed_forms.e0,
                                                 curve.out_point)),
        "point_fields": [complex(field_residue_at(basis, f, curve.out_point))
                         for f in fields],
        "correctors": [complex(field_residue_at(
            basis, basis.vector_field(0, i), curve.out_point))
            for i in range(n_pts)],
    }
    return KZSystem(1, curve, space.level, space.algebra.kappa, equations,
                    table, metadata={
                        "out_point_residues": out_res,
                        "diagonal_gamma_reading":
                            "gamma_ii from the same half-residue integral "
                            "as the off-diagonal entries",
                    })


# -- coordinate rescaling (covariance checks) ----------------------------------------


def rescale_form(form: KNForm, p: int, alpha: complex) -> KNForm:
    """Basis element in the coordinate alpha*(z - z_p) at point p: elements
    at p pick up alpha**degree, others are unchanged."""
    if form.point_index != p:
        return form
    return form.scaled(alpha ** form.degree)
