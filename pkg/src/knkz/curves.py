"""Marked curves: genus 0 or 1 with ordered in-points and one out-point."""

from __future__ import annotations

import numpy as np

from .laurent import ContourSpec, DEFAULT_SAMPLES
from .weierstrass import Lattice

INFINITY = None  # symbolic out-point for genus 0


class MarkedCurve:
    """Genus 0: the Riemann sphere with quasi-global coordinate z, in-points
    z_1..z_N and the out-point fixed at z = infinity.

    Genus 1: the torus C mod <1, tau>, with complex lifts of the in-points
    and of the out-point, normalized into the centered fundamental cell.
    """

    def __init__(self, genus: int, in_points, out_point=INFINITY,
                 lattice: Lattice | None = None, tau: complex | None = None):
        if genus not in (0, 1):
            raise ValueError("genus must be 0 or 1")
        self.genus = genus
        pts = tuple(complex(z) for z in in_points)
        if not pts:
            raise ValueError("at least one in-point required")
        if genus == 0:
            if out_point is not INFINITY:
                raise ValueError("genus-0 out-point is fixed at infinity")
            self.lattice = None
            self.in_points = pts
            self.out_point = INFINITY
        else:
            if lattice is None:
                if tau is None:
                    raise ValueError("genus 1 needs a lattice or tau")
                lattice = Lattice(tau)
            if out_point is INFINITY or out_point is None:
                raise ValueError("genus 1 needs a finite out-point lift")
            self.lattice = lattice
            reduce = lambda z: complex(lattice.reduce(z)[0])
            self.in_points = tuple(reduce(z) for z in pts)
            self.out_point = reduce(complex(out_point))
        self._check_distinct()

    @property
    def n_points(self) -> int:
        return len(self.in_points)

    def _check_distinct(self):
        all_pts = list(self.in_points)
        if self.genus == 1:
            all_pts.append(self.out_point)
        for i in range(len(all_pts)):
            for j in range(i + 1, len(all_pts)):
                if self.distance(all_pts[i], all_pts[j]) < 1e-12:
                    raise ValueError("marked points must be distinct")

    def distance(self, a: complex, b: complex) -> float:
        """|a - b|, taken modulo the lattice for genus 1."""
        if self.genus == 0:
            return abs(a - b)
        return float(self.lattice.lattice_distance(a - b))

    def marked_points(self) -> tuple[complex, ...]:
        """In-points plus the finite out-point lift (genus 1 only)."""
        if self.genus == 0:
            return self.in_points
        return self.in_points + (self.out_point,)

    def min_gap(self) -> float:
        pts = self.marked_points()
        gaps = [self.distance(pts[i], pts[j])
                for i in range(len(pts)) for j in range(i + 1, len(pts))]
        if self.genus == 1:
            gaps.append(self.lattice.min_period())
        return min(gaps) if gaps else 1.0

    def contour_radius(self, center: complex, factor: float = 1.0 / 3.0) -> float:
        """Default quadrature radius: a third of the distance from `center`
        to the nearest other marked point (lattice translates included)."""
        dists = []
        for p in self.marked_points():
            if self.genus == 0:
                d = abs(center - p)
            else:
                # singularities sit at every translate of p; measure to the
                # nearest one, and guard against self-translates as well
                d = float(self.lattice.lattice_distance(center - p))
                if abs(center - p) < 1e-12 or d < 1e-12:
                    d = self.lattice.min_period()
            if d > 1e-12:
                dists.append(d)
        if not dists:
            return factor  # single point on the sphere: any radius works
        return factor * min(dists)

    def contour(self, center: complex, samples: int = DEFAULT_SAMPLES,
                radius: float | None = None) -> ContourSpec:
        r = self.contour_radius(center) if radius is None else radius
        return ContourSpec(complex(center), r, samples)

    def __repr__(self):
        if self.genus == 0:
            return f"MarkedCurve(genus=0, in_points={list(self.in_points)})"
        return (f"MarkedCurve(genus=1, tau={self.lattice.tau}, "
                f"in_points={list(self.in_points)}, out={self.out_point})")
