"""Finite-dimensional gauge algebra data and weighted tensor spaces.

The current/affine layer is built over a finite-dimensional Lie algebra g
with a fixed invariant nondegenerate symmetric bilinear form.  The default
is sl2 with the trace form of the defining representation; an abelian
one-dimensional algebra covers the Heisenberg/free-boson checks.  The
constant kappa is half the eigenvalue of the Casimir operator in the
adjoint representation, computed from the data rather than hardcoded.

Highest-weight sites are the finite irreducibles (dimension weight+1 for
sl2); each site may be twisted by conjugation with an invertible matrix in
the defining representation, matching the twist data of the module
construction.
"""

from __future__ import annotations

import numpy as np


class SimpleLieAlgebraData:
    """Basis matrices, structure constants, invariant form, dual basis."""

    def __init__(self, name: str, basis, form_matrix=None):
        self.name = name
        self.basis = [np.asarray(m, dtype=complex) for m in basis]
        self.dim = len(self.basis)
        d = self.basis[0].shape[0]
        # structure constants from the defining matrices
        flat = np.stack([m.reshape(-1) for m in self.basis], axis=1)
        self.structure = np.zeros((self.dim, self.dim, self.dim), dtype=complex)
        for i in range(self.dim):
            for j in range(self.dim):
                comm = (self.basis[i] @ self.basis[j]
                        - self.basis[j] @ self.basis[i])
                coeffs, *_ = np.linalg.lstsq(flat, comm.reshape(-1), rcond=None)
                self.structure[i, j] = coeffs
        if form_matrix is None:
            form_matrix = np.array(
                [[np.trace(a @ b) for b in self.basis] for a in self.basis])
        self.form = np.asarray(form_matrix, dtype=complex)
        if abs(np.linalg.det(self.form)) < 1e-12:
            raise ValueError("bilinear form is degenerate")
        # dual basis u^i = sum_j (form^-1)_{ji} u_j so that (u_i | u^j) = delta
        self.form_inv = np.linalg.inv(self.form)
        self.dual_coeffs = self.form_inv  # column i gives u^i in the basis
        self.kappa = self._compute_kappa()

    def bracket_coeffs(self, x, y):
        """Coefficient vector of [x, y] for coefficient vectors x, y."""
        return np.einsum("ijk,i,j->k", self.structure, x, y)

    def adjoint(self, i: int) -> np.ndarray:
        """ad(u_i) in the basis coordinates."""
        return self.structure[i].T.copy()

    def _compute_kappa(self) -> complex:
        cas = np.zeros((self.dim, self.dim), dtype=complex)
        ads = [self.adjoint(i) for i in range(self.dim)]
        for i in range(self.dim):
            ad_dual = sum(self.dual_coeffs[j, i] * ads[j]
                          for j in range(self.dim))
            cas += ads[i] @ ad_dual
        if self.dim == 1 and np.allclose(cas, 0):
            return 0j  # abelian: the adjoint representation is trivial
        off = cas - cas[0, 0] * np.eye(self.dim)
        if np.abs(off).max() > 1e-10 * max(1.0, abs(cas[0, 0])):
            raise ValueError("Casimir is not scalar on the adjoint; "
                             "the algebra is not simple or abelian")
        return complex(cas[0, 0]) / 2.0

    def invariance_defect(self) -> float:
        """max |([x,y]|z) + (y|[x,z])| over basis triples."""
        worst = 0.0
        for i in range(self.dim):
            for j in range(self.dim):
                for k in range(self.dim):
                    v = (self.structure[i, j] @ self.form[:, k]
                         + self.structure[i, k] @ self.form[j, :])
                    worst = max(worst, abs(v))
        return worst

    def irrep(self, weight) -> list[np.ndarray]:
        """Matrices of the basis elements on the highest-weight irreducible.

        sl2: spin representation of dimension weight+1.  Abelian: the
        one-dimensional representation u . v = weight * v.
        """
        if self.name == "abelian":
            return [np.array([[complex(weight)]])]
        if self.name != "sl2":
            raise NotImplementedError("irreps implemented for sl2 and abelian")
        lam = int(weight)
        if lam < 0:
            raise ValueError("sl2 highest weight must be a nonnegative integer")
        dim = lam + 1
        e = np.zeros((dim, dim), dtype=complex)
        f = np.zeros((dim, dim), dtype=complex)
        h = np.zeros((dim, dim), dtype=complex)
        for k in range(dim):
            h[k, k] = lam - 2 * k
            if k + 1 < dim:
                f[k + 1, k] = 1.0
                e[k, k + 1] = (k + 1) * (lam - k)
        return [e, f, h]


def sl2() -> SimpleLieAlgebraData:
    """sl2 with basis (e, f, h) and the trace form of the defining rep."""
    e = [[0, 1], [0, 0]]
    f = [[0, 0], [1, 0]]
    h = [[1, 0], [0, -1]]
    return SimpleLieAlgebraData("sl2", [e, f, h])


def abelian() -> SimpleLieAlgebraData:
    """One-dimensional abelian algebra with (u|u) = 1 (free boson)."""
    data = SimpleLieAlgebraData.__new__(SimpleLieAlgebraData)
    data.name = "abelian"
    data.basis = [np.array([[1.0 + 0j]])]
    data.dim = 1
    data.structure = np.zeros((1, 1, 1), dtype=complex)
    data.form = np.array([[1.0 + 0j]])
    data.form_inv = np.array([[1.0 + 0j]])
    data.dual_coeffs = data.form_inv
    data.kappa = 0j
    return data


def algebra_by_name(name: str) -> SimpleLieAlgebraData:
    if name == "sl2":
        return sl2()
    if name == "abelian":
        return abelian()
    raise ValueError(f"unknown algebra '{name}'")


class WeightedTensorSpace:
    """Tensor product of per-site highest-weight irreducibles with twists.

    Site p carries the weight-lam_p module; an element x of g acts at site p
    through the twisted matrix rho_p(Ad(gamma_p^-1) x).  The level is the
    scalar by which the central element of the affine algebra will act.
    """

    def __init__(self, algebra: SimpleLieAlgebraData, weights,
                 twists=None, level: complex = 1.0):
        self.algebra = algebra
        self.weights = tuple(weights)
        self.n_sites = len(self.weights)
        self.level = complex(level)
        self.site_dims = []
        self._site_matrices = []
        if twists is None:
            twists = [None] * self.n_sites
        if len(twists) != self.n_sites:
            raise ValueError("one twist per site required")
        self.twists = []
        flat = np.stack([m.reshape(-1) for m in algebra.basis], axis=1)
        for p, lam in enumerate(self.weights):
            mats = algebra.irrep(lam)
            self.site_dims.append(mats[0].shape[0])
            gamma = twists[p]
            if gamma is not None:
                gamma = np.asarray(gamma, dtype=complex)
                if abs(np.linalg.det(gamma)) < 1e-12:
                    raise ValueError("twist must be invertible")
                ginv = np.linalg.inv(gamma)
                twisted = []
                for u in algebra.basis:
                    conj = ginv @ u @ gamma
                    coeffs, *_ = np.linalg.lstsq(flat, conj.reshape(-1),
                                                 rcond=None)
                    twisted.append(sum(c * m for c, m in zip(coeffs, mats)))
                mats = twisted
            self.twists.append(gamma)
            self._site_matrices.append(mats)
        self.dim = int(np.prod(self.site_dims))

    def site_action(self, p: int, coeffs) -> np.ndarray:
        """Matrix of sum_i coeffs_i u_i acting at site p on the full tensor."""
        local = sum(c * m for c, m in zip(coeffs, self._site_matrices[p]))
        out = np.eye(1, dtype=complex)
        for q in range(self.n_sites):
            out = np.kron(out, local if q == p else np.eye(self.site_dims[q]))
        return out

    def basis_action(self, p: int, i: int) -> np.ndarray:
        """u_i acting at site p."""
        coeffs = np.zeros(self.algebra.dim)
        coeffs[i] = 1.0
        return self.site_action(p, coeffs)

    def dual_action(self, p: int, i: int) -> np.ndarray:
        """u^i (dual basis) acting at site p."""
        return self.site_action(p, self.algebra.dual_coeffs[:, i])

    def diagonal_action(self, coeffs) -> np.ndarray:
        """x acting as the sum over all sites (the embedded copy of g)."""
        return sum(self.site_action(p, coeffs) for p in range(self.n_sites))

    def highest_weight_index(self) -> int:
        return 0  # the all-top-weight tensor basis vector comes first


def casimir_two_site(space: WeightedTensorSpace, i: int, j: int) -> np.ndarray:
    """Omega_ij = sum_a (u_a at site i)(u^a at site j), twists included.

    The diagonal case is excluded: in the reduced KZ systems it is removed
    by the vertical-field adjustment, not by this operator.
    """
    if i == j:
        raise ValueError("two-site Casimir needs distinct sites")
    dim_g = space.algebra.dim
    out = np.zeros((space.dim, space.dim), dtype=complex)
    for a in range(dim_g):
        out += space.basis_action(i, a) @ space.dual_action(j, a)
    return out
