"""Radial grids, radial functions, Lebesgue norms and singular data classes.

The grids are graded toward the origin so that power-law singularities
|x|^{-gamma} are resolved; the origin itself is never a node, and the
integral over the first cell (0, r_1] is always evaluated analytically
from the declared singular power.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, TextIO

import numpy as np

from heatlab.nonlinearity import NonlinearitySpec, WeightSpec

__all__ = [
    "RadialGrid",
    "RadialFunction",
    "ProblemSpec",
    "Membership",
    "sphere_area",
    "build_singular_data",
    "radial_norm",
    "class_membership",
    "default_grid",
]


def sphere_area(dimension: int) -> float:
    """Surface area of the unit sphere S^{N-1} in R^N (2, 2*pi, 4*pi for N=1,2,3)."""
    return 2.0 * math.pi ** (dimension / 2.0) / math.gamma(dimension / 2.0)


@dataclass(frozen=True)
class RadialGrid:
    """Graded radial grid r_i = R (i/M)^grading, i = 1..M."""

    dimension: int
    max_radius: float
    node_count: int
    grading: float = 3.0
    nodes: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.dimension not in (1, 2, 3):
            raise ValueError("dimension must be 1, 2 or 3")
        if self.max_radius <= 0.0:
            raise ValueError("max_radius must be positive")
        if self.node_count < 4:
            raise ValueError("node_count must be at least 4")
        if self.grading < 1.0:
            raise ValueError("grading must be >= 1")
        i = np.arange(1, self.node_count + 1, dtype=float)
        nodes = self.max_radius * (i / self.node_count) ** self.grading
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)


@dataclass(frozen=True)
class RadialFunction:
    """Samples of a radial profile with declared near-origin power behavior.

    Near the origin the profile is modeled as v(s) = v_1 (s / r_1)^{-gamma}
    on (0, r_1]; values are treated as zero beyond support_radius.
    """

    grid: RadialGrid
    values: np.ndarray
    singular_power: float = 0.0
    support_radius: Optional[float] = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.grid.nodes.shape:
            raise ValueError("values must match the grid nodes")
        if not np.all(np.isfinite(vals)):
            raise ValueError("values must be finite at all nodes")
        if self.singular_power < 0.0:
            raise ValueError("singular_power must be nonnegative")
        if self.singular_power > 0.0 and self.singular_power >= self.grid.dimension:
            raise ValueError(
                "singular_power must be < dimension for local integrability"
            )
        support = self.support_radius
        if support is None:
            support = self.grid.max_radius
        if not 0.0 < support <= self.grid.max_radius * (1.0 + 1e-12):
            raise ValueError("support_radius must lie in (0, max_radius]")
        vals = vals.copy()
        vals[self.grid.nodes > support * (1.0 + 1e-12)] = 0.0
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "support_radius", float(support))

    def with_values(self, values: np.ndarray, singular_power: float = 0.0,
                    support_radius: Optional[float] = None) -> "RadialFunction":
        return RadialFunction(self.grid, values, singular_power,
                              support_radius if support_radius is not None
                              else self.grid.max_radius)

    def scaled(self, c: float) -> "RadialFunction":
        return RadialFunction(self.grid, c * self.values, self.singular_power,
                              self.support_radius)

    def to_csv(self, stream: TextIO) -> None:
        stream.write(
            f"# N={self.grid.dimension} singular_power={self.singular_power:.17g} "
            f"support_radius={self.support_radius:.17g}\n"
        )
        stream.write("radius,value\n")
        for r, v in zip(self.grid.nodes, self.values):
            stream.write(f"{r:.17g},{v:.17g}\n")

    @staticmethod
    def from_csv(stream: TextIO, grading: float = 3.0) -> "RadialFunction":
        header = stream.readline()
        if not header.startswith("#"):
            raise ValueError("missing metadata header")
        meta = dict(item.split("=") for item in header[1:].split())
        stream.readline()  # column header
        rows = [line.strip().split(",") for line in stream if line.strip()]
        radii = np.array([float(r) for r, _ in rows])
        values = np.array([float(v) for _, v in rows])
        grid = RadialGrid(int(meta["N"]), float(radii[-1]), len(radii), grading)
        if not np.allclose(grid.nodes, radii, rtol=1e-9):
            raise ValueError("radii do not form a graded grid with this grading")
        return RadialFunction(grid, values, float(meta["singular_power"]),
                              float(meta["support_radius"]))


@dataclass(frozen=True)
class ProblemSpec:
    """A full problem instance for u_t - Lap u = h(t) g(u), u(0) in L^r."""

    dimension: int
    r: float
    rho: float
    K: float
    a: float
    nonlinearity: NonlinearitySpec
    weight: WeightSpec
    data_side: str = "upper_class"       # or "lower_class"
    domain: str = "whole_space"          # or "dirichlet_ball"
    ball_radius: Optional[float] = None  # required for dirichlet_ball

    def __post_init__(self):
        if self.dimension not in (1, 2, 3):
            raise ValueError("dimension must be 1, 2 or 3")
        if self.r < 1.0:
            raise ValueError("Lebesgue exponent r must be >= 1")
        if not 0.0 < self.rho < self.dimension:
            raise ValueError("rho must satisfy 0 < rho < N")
        if self.K <= 0.0 or self.a <= 0.0:
            raise ValueError("K and a must be positive")
        if self.data_side not in ("upper_class", "lower_class"):
            raise ValueError("data_side must be upper_class or lower_class")
        if self.domain not in ("whole_space", "dirichlet_ball"):
            raise ValueError("domain must be whole_space or dirichlet_ball")
        if self.domain == "dirichlet_ball":
            if self.ball_radius is None:
                raise ValueError("dirichlet_ball requires ball_radius")
            if self.a > self.ball_radius:
                raise ValueError("support radius a must satisfy a <= ball radius")

    @property
    def truncation_radius(self) -> float:
        """Computational domain radius (8a truncation for whole space)."""
        if self.domain == "dirichlet_ball":
            return float(self.ball_radius)
        return 8.0 * self.a

    def as_dict(self) -> dict:
        return {
            "N": self.dimension,
            "r": self.r,
            "rho": self.rho,
            "K": self.K,
            "a": self.a,
            "f": self.nonlinearity.label(),
            "h": self.weight.label(),
            "side": self.data_side,
            "domain": self.domain,
            "ball_radius": self.ball_radius,
        }


def default_grid(spec: ProblemSpec, node_count: int = 1024,
                 grading: float = 3.0) -> RadialGrid:
    return RadialGrid(spec.dimension, spec.truncation_radius, node_count, grading)


def build_singular_data(spec: ProblemSpec, grid: RadialGrid) -> RadialFunction:
    """The witness profile K^{1/r} |x|^{-rho/r} on B_a, zero beyond.

    This single profile saturates the defining bounds of both data classes
    with the same (K, a).
    """
    if grid.dimension != spec.dimension:
        raise ValueError("grid dimension does not match the problem")
    if spec.a > grid.max_radius * (1.0 + 1e-12):
        raise ValueError("support radius a exceeds the grid radius")
    gamma = spec.rho / spec.r
    amp = spec.K ** (1.0 / spec.r)
    values = np.where(grid.nodes <= spec.a * (1.0 + 1e-12),
                      amp * grid.nodes ** (-gamma), 0.0)
    return RadialFunction(grid, values, singular_power=gamma,
                          support_radius=spec.a)


def _power_cell_integrals(r: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Exact integrals of the log-log linear interpolant of phi per cell.

    Cells where either endpoint is nonpositive fall back to the trapezoid.
    Exact for pure power-law integrands, second order otherwise.
    """
    r1, r2 = r[:-1], r[1:]
    p1, p2 = phi[:-1], phi[1:]
    out = 0.5 * (p1 + p2) * (r2 - r1)
    ok = (p1 > 0.0) & (p2 > 0.0)
    if np.any(ok):
        x = r2[ok] / r1[ok]
        beta = np.log(p2[ok] / p1[ok]) / np.log(x)
        bp1 = beta + 1.0
        logx = np.log(x)
        with np.errstate(over="ignore", invalid="ignore"):
            cell = p1[ok] * r1[ok] * np.expm1(bp1 * logx) / bp1
        near = np.abs(bp1) < 1e-10
        cell = np.where(near, p1[ok] * r1[ok] * logx, cell)
        out[ok] = cell
    return out


def radial_norm(f: RadialFunction, p: float) -> float:
    """L^p(R^N) norm of the radial profile (power-law-exact quadrature).

    Finite p uses sigma_{N-1} int_0^R |f|^p s^{N-1} ds with the first cell
    (0, r_1] integrated analytically from the declared singular power;
    p = inf combines the node maximum with the analytic origin supremum.
    """
    if p != math.inf and p < 1.0:
        raise ValueError("p must be >= 1 or infinity")
    N = f.grid.dimension
    r = f.grid.nodes
    gamma = f.singular_power
    support = f.support_radius

    if p == math.inf:
        if gamma > 0.0 and f.values[0] != 0.0:
            return math.inf
        return float(np.max(np.abs(f.values), initial=0.0))

    phi = np.abs(f.values) ** p * r ** (N - 1)

    # analytic (0, r_1] piece from the declared power model
    if f.values[0] != 0.0:
        if gamma * p >= N:
            return math.inf
        origin = abs(f.values[0]) ** p * r[0] ** N / (N - gamma * p)
    else:
        origin = 0.0

    inside = r <= support * (1.0 + 1e-12)
    total = origin
    ri, pi = r[inside], phi[inside]
    if ri.size >= 2:
        total += float(np.sum(_power_cell_integrals(ri, pi)))
    # partial cell from the last interior node to the support radius
    if ri.size >= 1 and support > ri[-1] * (1.0 + 1e-12):
        if ri.size >= 2 and pi[-2] > 0.0 and pi[-1] > 0.0:
            beta = math.log(pi[-1] / pi[-2]) / math.log(ri[-1] / ri[-2])
        else:
            beta = 0.0
        x = support / ri[-1]
        bp1 = beta + 1.0
        if abs(bp1) < 1e-10:
            total += pi[-1] * ri[-1] * math.log(x)
        else:
            total += pi[-1] * ri[-1] * (x ** bp1 - 1.0) / bp1
    return float((sphere_area(N) * total) ** (1.0 / p))


@dataclass(frozen=True)
class Membership:
    in_upper: bool
    upper_K: Optional[float]
    upper_a: Optional[float]
    in_lower: bool
    lower_K: Optional[float]
    lower_a: Optional[float]

    def as_dict(self) -> dict:
        return {
            "in_upper": self.in_upper, "upper_K": self.upper_K,
            "upper_a": self.upper_a, "in_lower": self.in_lower,
            "lower_K": self.lower_K, "lower_a": self.lower_a,
        }


def class_membership(f: RadialFunction, rho: float, r: float) -> Membership:
    """Membership in the upper/lower singular data classes with witnesses.

    The quantity s^rho f(s)^r is examined on the support; on (0, r_1] the
    declared singular power decides whether its sup is finite (upper class)
    and its inf positive (lower class).
    """
    if np.any(f.values < 0.0):
        raise ValueError("class membership requires nonnegative data")
    if not 0.0 < rho < f.grid.dimension:
        raise ValueError("rho must satisfy 0 < rho < N")
    if r < 1.0:
        raise ValueError("r must be >= 1")
    nodes = f.grid.nodes
    gamma = f.singular_power
    inside = nodes <= f.support_radius * (1.0 + 1e-12)
    w = nodes[inside] ** rho * f.values[inside] ** r

    # near-origin behavior of s^rho f(s)^r is s^{rho - gamma r} v_1^r r_1^{gamma r}
    exponent = rho - gamma * r
    v1 = f.values[0]

    upper_ok = v1 == 0.0 or exponent >= 0.0
    if upper_ok and w.size:
        upper_K = float(np.max(w))
        upper_a = float(f.support_radius)
    else:
        upper_K = upper_a = None

    lower_ok = v1 > 0.0 and exponent <= 0.0
    if lower_ok:
        positive = w > 0.0
        if not positive[0]:
            lower_ok = False
    if lower_ok:
        first_zero = np.argmin(positive) if not positive.all() else w.size
        if first_zero == 0:
            lower_ok = False
    if lower_ok:
        if first_zero == w.size:
            lower_a = float(f.support_radius)
        else:
            lower_a = float(nodes[inside][first_zero - 1])
        lower_K = float(np.min(w[:first_zero]))
    else:
        lower_K = lower_a = None

    return Membership(bool(upper_ok and w.size > 0), upper_K, upper_a,
                      bool(lower_ok), lower_K, lower_a)
