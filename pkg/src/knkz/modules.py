"""Truncated admissible modules over the affine current algebra.

The module is induced from a weighted tensor space: monomials of negative
modes u_a(n,p) (PBW-ordered by (n, p, a)) applied to vectors of the tensor
floor, truncated at a total depth bound D.  Degree-zero modes act on the
floor through the twisted site representations; positive modes annihilate
it.  The commutation rule is the affine bracket

    [x(n,p), y(m,r)] = [x,y](A_{n,p} A_{m,r}) - (x|y) gamma(A_{n,p}, A_{m,r}) c,

where the function product is expanded over the almost-graded basis window
and gamma is the function-algebra cocycle; both are computed by the residue
engine and cached.  Any action that would leave the truncation raises
instead of returning a silently wrong answer.

On top sits the Sugawara action

    T[e] = -1/(2(c + kappa)) * sum_{(n,p),(m,s)} l^{(n,p)(m,s)}[e]
                                 :u(n,p) u(m,s):

with l^{(n,p)(m,s)}[e] the residue sum of omega^{n,p} omega^{m,s} e over the
in-points and the standard normal ordering (degree-increasing order, swap
when the left degree exceeds the right one).
"""

from __future__ import annotations

import numpy as np

from .algebra import cocycle_gamma, expand_in_basis, residue_sum_in
from .basis import FormProduct, KNBasis, KNForm
from .errors import CriticalLevelError, TruncationBreachError
from .liealg import WeightedTensorSpace

PRODUCT_PRUNE = 1e-10
L_COEFF_PRUNE = 1e-12

State = dict  # monomial tuple -> ndarray over the tensor floor


def _merge(state: State, mono, vec):
    if mono in state:
        state[mono] = state[mono] + vec
    else:
        state[mono] = vec.copy() if isinstance(vec, np.ndarray) else vec


def depth_of(mono) -> int:
    return sum(-n for n, _, _ in mono)


class TruncatedAdmissibleModule:
    """Desk-scale realization of an admissible highest-weight module."""

    def __init__(self, basis: KNBasis, space: WeightedTensorSpace,
                 depth: int, band_guess: int = 4):
        if space.n_sites != basis.curve.n_points:
            raise ValueError("one tensor site per in-point required")
        self.basis = basis
        self.space = space
        self.algebra = space.algebra
        self.level = space.level
        self.depth = int(depth)
        self.band_guess = band_guess
        self._products: dict = {}
        self._gammas: dict = {}
        self._monomials: list | None = None

    # -- structure data ---------------------------------------------------------

    def product_expansion(self, n: int, p: int, m: int, r: int):
        """A_{n,p} A_{m,r} = sum alpha^{(h,s)} A_{h,s} over the almost-graded
        window, residue-computed and cached."""
        key = (n, p, m, r)
        if key not in self._products:
            prod = FormProduct(self.basis.function(n, p),
                               self.basis.function(m, r))
            band = self.band_guess
            n_pts = self.basis.curve.n_points
            while True:
                coeffs = expand_in_basis(self.basis, prod, 0,
                                         range(n + m, n + m + band + 1))
                top = max(abs(coeffs[(n + m + band, s)]) for s in range(n_pts))
                if top <= PRODUCT_PRUNE:
                    break
                band += 2
            self._products[key] = [((h, s), c) for (h, s), c in coeffs.items()
                                   if abs(c) > PRODUCT_PRUNE]
        return self._products[key]

    def gamma_value(self, n: int, p: int, m: int, r: int) -> complex:
        key = (n, p, m, r)
        if key not in self._gammas:
            self._gammas[key] = cocycle_gamma(
                self.basis, self.basis.function(n, p),
                self.basis.function(m, r))
        return self._gammas[key]

    # -- module basis -------------------------------------------------------------

    def monomials(self, max_depth: int | None = None) -> list:
        """All PBW monomials of depth <= max_depth (default: the truncation)."""
        if self._monomials is None:
            modes = [(n, p, a)
                     for n in range(-self.depth, 0)
                     for p in range(self.space.n_sites)
                     for a in range(self.algebra.dim)]
            modes.sort()
            out = [()]
            frontier = [()]
            while frontier:
                new = []
                for mono in frontier:
                    for mode in modes:
                        if mono and mode > mono[0]:
                            continue  # keep monomials sorted, no duplicates
                        cand = (mode,) + mono
                        if depth_of(cand) <= self.depth:
                            new.append(cand)
                out.extend(new)
                frontier = new
            self._monomials = sorted(set(out), key=lambda m: (depth_of(m), m))
        if max_depth is None:
            return list(self._monomials)
        return [m for m in self._monomials if depth_of(m) <= max_depth]

    def zero_state(self) -> State:
        return {}

    def floor_state(self, vec) -> State:
        return {(): np.asarray(vec, dtype=complex)}

    def highest_weight_state(self) -> State:
        vec = np.zeros(self.space.dim, dtype=complex)
        vec[self.space.highest_weight_index()] = 1.0
        return self.floor_state(vec)

    # -- the action ---------------------------------------------------------------

    def apply_mode(self, n: int, p: int, a: int, state: State) -> State:
        """u_a(n, p) applied to a (normalized) state."""
        out: State = {}
        for mono, vec in state.items():
            self._apply_one(n, p, a, mono, vec, 1.0, out)
        return out

    def apply_dual_mode(self, n: int, p: int, a: int, state: State) -> State:
        """u^a(n, p) (dual basis) applied to a state."""
        out: State = {}
        coeffs = self.algebra.dual_coeffs[:, a]
        for b in range(self.algebra.dim):
            if coeffs[b] == 0:
                continue
            for mono, vec in state.items():
                self._apply_one(n, p, b, mono, vec, coeffs[b], out)
        return out

    def _apply_one(self, n, p, a, mono, vec, scale, out: State):
        if scale == 0:
            return
        if not mono:
            if n > 0:
                return
            if n == 0:
                _merge(out, (), scale * (self.space.basis_action(p, a) @ vec))
                return
            if -n > self.depth:
                raise TruncationBreachError(
                    f"truncation breach: depth {-n} exceeds bound {self.depth}")
            _merge(out, ((n, p, a),), scale * vec)
            return
        head, rest = mono[0], mono[1:]
        mode = (n, p, a)
        if n < 0 and mode <= head:
            if depth_of((mode,) + mono) > self.depth:
                raise TruncationBreachError(
                    f"truncation breach: depth {depth_of((mode,) + mono)} "
                    f"exceeds bound {self.depth}")
            _merge(out, (mode,) + mono, scale * vec)
            return
        # commute past the head: x y = y x + [x, y]
        m, r, b = head
        moved: State = {}
        self._apply_one(n, p, a, rest, vec, scale, moved)
        for mono2, vec2 in moved.items():
            self._apply_one(m, r, b, mono2, vec2, 1.0, out)
        # bracket part: [u_a (x) A_{n,p}, u_b (x) A_{m,r}]
        lie = self.algebra.structure[a, b]
        if np.abs(lie).max() > 0:
            for (h, s), alpha in self.product_expansion(n, p, m, r):
                for cdx in range(self.algebra.dim):
                    if lie[cdx] == 0:
                        continue
                    self._apply_one(h, s, cdx, rest, vec,
                                    scale * alpha * lie[cdx], out)
        pairing = self.algebra.form[a, b]
        if pairing != 0:
            gam = self.gamma_value(n, p, m, r)
            if abs(gam) > 1e-14:
                central = -pairing * gam * self.level
                _merge(out, rest, scale * central * vec)

    def apply_current(self, coeffs, n: int, p: int, state: State) -> State:
        """x(n,p) for x = sum coeffs_a u_a."""
        out: State = {}
        for a, c in enumerate(coeffs):
            if c == 0:
                continue
            part = self.apply_mode(n, p, a, state)
            for mono, vec in part.items():
                _merge(out, mono, c * vec)
        return out

    # -- comparisons ---------------------------------------------------------------

    def state_norm(self, state: State) -> float:
        return max((float(np.abs(v).max()) for v in state.values()),
                   default=0.0)

    def state_sub(self, s1: State, s2: State) -> State:
        out = {k: v.copy() for k, v in s1.items()}
        for k, v in s2.items():
            _merge(out, k, -v)
        return out

    def state_scale(self, s: State, c) -> State:
        return {k: c * v for k, v in s.items()}


def build_truncated_module(basis: KNBasis, space: WeightedTensorSpace,
                           depth: int, require_noncritical: bool = False
                           ) -> TruncatedAdmissibleModule:
    mod = TruncatedAdmissibleModule(basis, space, depth)
    if require_noncritical and abs(space.level + space.algebra.kappa) < 1e-12:
        raise CriticalLevelError("critical level")
    return mod


class SugawaraOperator:
    """T[e] on a truncated module, with the almost-graded mode window made
    explicit; application outside the admissible window breaches loudly."""

    def __init__(self, module: TruncatedAdmissibleModule, e_form: KNForm,
                 mode_bound: int | None = None):
        self.module = module
        self.e = e_form
        c_plus_kappa = module.level + module.algebra.kappa
        if abs(c_plus_kappa) < 1e-12:
            raise CriticalLevelError("critical level")
        self.prefactor = -1.0 / (2.0 * c_plus_kappa)
        self.mode_bound = mode_bound if mode_bound is not None \
            else module.depth + module.band_guess + 2
        self._l_table = self._build_l_table()

    def _build_l_table(self):
        basis, curve = self.module.basis, self.module.basis.curve
        table = {}
        bound = self.mode_bound
        # almost-grading: l vanishes unless n+m sits in a narrow band around
        # the degree of e; the window below is generous
        deg = getattr(self.e, "degree", None)
        slack = curve.n_points + self.module.band_guess + 3
        for n in range(-bound, bound + 1):
            for p in range(curve.n_points):
                for m in range(-bound, bound + 1):
                    if deg is not None and not (deg - slack <= n + m
                                                <= deg + slack):
                        continue
                    for s in range(curve.n_points):
                        val = basis.product_residue_sum_in(
                            (basis.omega(n, p), basis.omega(m, s), self.e))
                        if abs(val) > L_COEFF_PRUNE:
                            table[(n, p, m, s)] = val
        if table:
            floor = 1e-9 * max(1.0, max(abs(v) for v in table.values()))
            table = {k: v for k, v in table.items() if abs(v) > floor}
        return table

    def l_coefficient(self, n, p, m, s) -> complex:
        return self._l_table.get((n, p, m, s), 0j)

    def apply(self, state: State) -> State:
        """T[e] applied to a state; normal ordering sends the higher-degree
        mode to the right where it can annihilate."""
        mod = self.module
        out: State = {}
        for (n, p, m, s), l_val in self._l_table.items():
            if n <= m:
                first, second = (m, s), (n, p)   # applied right-to-left
            else:
                first, second = (n, p), (m, s)
            for a in range(mod.algebra.dim):
                inner = mod.apply_mode(first[0], first[1], a, state) \
                    if n > m else mod.apply_dual_mode(first[0], first[1], a,
                                                      state)
                if not inner:
                    continue
                outer = mod.apply_dual_mode(second[0], second[1], a, inner) \
                    if n > m else mod.apply_mode(second[0], second[1], a,
                                                 inner)
                for mono, vec in outer.items():
                    _merge(out, mono, self.prefactor * l_val * vec)
        return {k: v for k, v in out.items()
                if float(np.abs(v).max()) > 0.0}
