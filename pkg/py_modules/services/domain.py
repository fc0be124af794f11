"""
Domains near a boundary point
Graphs {x_m > h(x', y)} and level sets {phi < 0}, with membership, projection and boundary sampling
"""
from typing import List, Optional, Sequence, Union

import numpy as np

from constants import GEOMETRY, SAMPLING, TOLERANCES
from models.errors import BadGraph
from services.algebra import Stratification
from services.fields import (
    ScalarField,
    Var,
    fd_horizontal_gradient,
    field_from_input,
    sub,
    symbolic_horizontal_gradient,
)
from services.group import GroupElement, bch_coords, gauge_coords, sample_gauge_ball
from services.poly import StratifiedPolynomial

FieldInput = Union[ScalarField, StratifiedPolynomial, str]


class Domain:
    """Omega = {phi < 0}, optionally intersected with the gauge ball B(radius)

    Graph domains carry h and use phi = h - x_m; h never depends on x_m.
    """

    def __init__(self, group: Stratification, phi: ScalarField, h: Optional[ScalarField] = None,
                 radius: Optional[float] = None, label: str = ""):
        self.group = group
        self.phi = phi
        self.h = h
        self.radius = radius
        self.label = label or (f"x_m > {h.label}" if h is not None else f"{phi.label} < 0")
        self._horizontal: Optional[List[ScalarField]] = None

    # ---------------------------
    # Constructors
    # ---------------------------

    @classmethod
    def graph(cls, h: FieldInput, group: Optional[Stratification] = None, radius: Optional[float] = None) -> "Domain":
        if group is None:
            group = h.group
        h = field_from_input(h, group)
        slot = group.x_m
        name = group.coordinate_names[slot]
        if h.expr is not None:
            phi = ScalarField.from_expr(sub(h.expr, Var(slot, name)), group)
        elif h.polynomial is not None:
            phi = ScalarField.from_polynomial(h.polynomial - StratifiedPolynomial.variable(group, slot))
        else:
            phi = ScalarField.from_callable(lambda c: h(c) - c[slot], group, label=f"{h.label} - {name}")
        return cls(group, phi, h=h, radius=radius, label=f"{name} > {h.label}")

    @classmethod
    def flat(cls, group: Stratification, radius: Optional[float] = None) -> "Domain":
        return cls.graph(StratifiedPolynomial.zero(group), group, radius)

    @classmethod
    def level_set(cls, phi: FieldInput, group: Optional[Stratification] = None, radius: Optional[float] = None) -> "Domain":
        if group is None:
            group = phi.group
        return cls(group, field_from_input(phi, group), radius=radius)

    @classmethod
    def from_input(cls, text: str, group: Stratification, radius: Optional[float] = None) -> "Domain":
        """'flat', a graph expression h, or 'phi:<expression>' for a level set"""
        text = str(text).strip()
        if text == "flat":
            return cls.flat(group, radius)
        if text.startswith("phi:"):
            return cls.level_set(text[4:], group, radius)
        return cls.graph(text, group, radius)

    # ---------------------------
    # Geometry
    # ---------------------------

    @property
    def is_graph(self) -> bool:
        return self.h is not None

    @property
    def is_flat(self) -> bool:
        return self.is_graph and self.h.polynomial is not None and self.h.polynomial.is_zero()

    def with_radius(self, radius: Optional[float]) -> "Domain":
        return Domain(self.group, self.phi, self.h, radius, self.label)

    def contains(self, coords: Sequence):
        inside = np.asarray(self.phi(coords), dtype=float) < 0
        if self.radius is not None:
            inside = inside & (np.asarray(gauge_coords(coords, self.group)) <= self.radius)
        return inside

    def contains_point(self, p: GroupElement) -> bool:
        return bool(self.contains([float(c) for c in p.coords]))

    def check_normalized(self):
        """h(0) = 0, grad_x' h(0) = 0 and no dependence on x_m"""
        if not self.is_graph:
            raise BadGraph(f"{self.label} is not a graph over the x_m direction", {"domain": self.label})
        group = self.group
        tol = TOLERANCES["GRAPH_NORMALIZATION"]
        P = self.h.polynomial
        if P is not None and P.depends_on(group.x_m):
            raise BadGraph(f"graph function {self.h.label} depends on x_m", {"h": self.h.label})
        origin = [0.0] * group.N
        if abs(float(self.h(origin))) > tol:
            raise BadGraph(f"graph function {self.h.label} does not vanish at e", {"h": self.h.label})
        for i in range(group.m - 1):
            slope = float(self.partial(self.h, i)(origin))
            if abs(slope) > tol:
                raise BadGraph(
                    f"d{group.coordinate_names[i]} of {self.h.label} is {slope:.3g} at e, expected 0",
                    {"h": self.h.label, "slot": group.coordinate_names[i]},
                )

    def partial(self, f: ScalarField, slot: int) -> ScalarField:
        """Euclidean partial derivative in one exponential coordinate"""
        if f.expr is not None:
            return ScalarField.from_expr(f.expr.diff(slot), self.group)
        if f.polynomial is not None:
            return ScalarField.from_polynomial(f.polynomial.derivative(slot))
        step = SAMPLING["FD_STEP"]

        def central(coords):
            forward, backward = list(coords), list(coords)
            forward[slot] = forward[slot] + step
            backward[slot] = backward[slot] - step
            return (f(forward) - f(backward)) / (2.0 * step)

        return ScalarField.from_callable(central, self.group, label=f"d{slot}({f.label})")

    def horizontal_gradient(self, coords: Sequence) -> List:
        """X_i phi at the given coordinates, symbolic when phi has an expression"""
        if self.phi.symbolic:
            if self._horizontal is None:
                self._horizontal = symbolic_horizontal_gradient(self.phi)
            return [np.asarray(X(coords), dtype=float) * np.ones_like(np.asarray(coords[0], dtype=float))
                    for X in self._horizontal]
        return fd_horizontal_gradient(self.phi, coords, SAMPLING["FD_STEP"])

    def horizontal_gradient_norm(self, coords: Sequence):
        gradient = self.horizontal_gradient(coords)
        return np.sqrt(sum(np.asarray(g, dtype=float) ** 2 for g in gradient))

    def project(self, coords: Sequence) -> List:
        """Move points onto {phi = 0}: exactly along x_m for graphs, by Newton steps otherwise"""
        coords = [np.asarray(c, dtype=float) for c in coords]
        if self.is_graph:
            projected = list(coords)
            projected[self.group.x_m] = np.asarray(self.h(coords), dtype=float) * np.ones_like(coords[0])
            return projected
        partials = [self.partial(self.phi, c) for c in range(self.group.N)]
        point = list(coords)
        for _ in range(GEOMETRY["PROJECTION_ITERATIONS"]):
            value = np.asarray(self.phi(point), dtype=float)
            grad = [np.asarray(p(point), dtype=float) * np.ones_like(value) for p in partials]
            norm2 = sum(g ** 2 for g in grad)
            safe = np.where(norm2 > 0, norm2, 1.0)
            point = [x - value * g / safe for x, g in zip(point, grad)]
            if np.all(np.abs(value) < TOLERANCES["POLY_REPRODUCTION"]):
                break
        return point

    def boundary_samples(self, n: int, rng: np.random.Generator, center: Optional[Sequence] = None,
                         radius: Optional[float] = None) -> List[np.ndarray]:
        """n points on the boundary near center, drawn from the gauge ball B(center, radius) and projected"""
        radius = radius or GEOMETRY["SCAN_HALF_WIDTH"]
        offsets = list(sample_gauge_ball(self.group, radius, n, rng))
        if center is not None:
            offsets = bch_coords([float(c) for c in center], offsets, self.group)
        return self.project(offsets)

    def distance_to_boundary(self, p: GroupElement, rng: np.random.Generator, n: Optional[int] = None) -> float:
        """Sampled gauge distance from p to the boundary; an upper bound that tightens with n"""
        n = n or SAMPLING["BOUNDARY_SAMPLES"]
        point = [float(c) for c in p.coords]
        foot = self.project([np.array([c]) for c in point])
        best = float(gauge_coords(bch_coords([-c for c in point], [f[0] for f in foot], self.group), self.group))
        if best == 0.0:
            return 0.0
        for _ in range(2):
            candidates = self.boundary_samples(n, rng, center=point, radius=best)
            distances = gauge_coords(bch_coords([-c for c in point], candidates, self.group), self.group)
            finite = np.asarray(distances)[np.isfinite(distances)]
            if finite.size:
                best = min(best, float(finite.min()))
        return best

    def __repr__(self) -> str:
        return f"Domain({self.label}, radius={self.radius})"
