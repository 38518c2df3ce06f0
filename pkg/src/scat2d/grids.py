"""
Spatial and angular quadrature grids
====================================

The disk grid is the discrete carrier for square-integrable functions on the
plane: tensor Gauss-Legendre in radius (with the area Jacobian r attached to
the weights) times an equispaced trapezoid rule in angle.  The angular grid
is the discrete carrier for functions on the unit circle, where scattering
matrices live.

The radial rule may be composited over segments (``breaks``) so that
piecewise potentials keep spectral radial convergence; each segment gets the
full Gauss-Legendre node count.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BadGridSpec


@dataclass(frozen=True)
class QuadGrid2D:
    """Quadrature nodes/weights covering a disk of given radius.

    nodes   -- (n, 2) points
    weights -- (n,) positive area weights, summing to pi * radius^2
    r, theta -- polar coordinates of the nodes (kept for radial profiles)
    """

    nodes: np.ndarray
    weights: np.ndarray
    radius: float
    n_radial: int
    n_angular: int
    breaks: tuple[float, ...] = field(default=())
    # radial values of the tensor layout (node index = ir * n_angular + ia);
    # lets kernel assembly evaluate on (r, r', dtheta) triples only
    radial_nodes: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if np.any(self.weights <= 0.0):
            raise BadGridSpec("all quadrature weights must be positive")
        rr = np.hypot(self.nodes[:, 0], self.nodes[:, 1])
        if np.any(rr > self.radius * (1.0 + 1e-12)):
            raise BadGridSpec("grid node outside the stated radius")
        area = np.pi * self.radius**2
        if abs(self.weights.sum() - area) > 1e-6 * area:
            raise BadGridSpec("weights do not sum to the disk area")

    @property
    def n(self) -> int:
        return self.nodes.shape[0]

    @property
    def r(self) -> np.ndarray:
        return np.hypot(self.nodes[:, 0], self.nodes[:, 1])

    def refined(self, factor: int = 2) -> "QuadGrid2D":
        """Same disk, node counts multiplied by ``factor`` (convergence gate)."""
        return build_disk_grid(self.radius, factor * self.n_radial,
                               factor * self.n_angular, breaks=self.breaks)


def build_disk_grid(radius: float, n_radial: int, n_angular: int,
                    breaks: tuple[float, ...] = ()) -> QuadGrid2D:
    """Tensor Gauss-Legendre (radial) x trapezoid (angular) rule on a disk.

    ``breaks`` lists interior radii at which the radial rule is restarted
    (each segment receives ``n_radial`` nodes); used for piecewise-defined
    potentials.
    """
    if not (radius > 0.0):
        raise BadGridSpec(f"radius must be positive, got {radius}")
    if n_radial < 4:
        raise BadGridSpec(f"n_radial must be >= 4, got {n_radial}")
    if n_angular < 8:
        raise BadGridSpec(f"n_angular must be >= 8, got {n_angular}")
    edges = (0.0,) + tuple(sorted(breaks)) + (radius,)
    if any(not (0.0 < b < radius) for b in breaks):
        raise BadGridSpec("radial breaks must lie strictly inside (0, radius)")

    x, wq = np.polynomial.legendre.leggauss(n_radial)
    rs, wr = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        half = 0.5 * (hi - lo)
        rseg = lo + half * (x + 1.0)
        rs.append(rseg)
        wr.append(half * wq * rseg)          # area Jacobian r
    rall = np.concatenate(rs)
    wall = np.concatenate(wr)

    theta = 2.0 * np.pi * np.arange(n_angular) / n_angular
    wtheta = 2.0 * np.pi / n_angular

    rg, tg = np.meshgrid(rall, theta, indexing="ij")
    nodes = np.column_stack([(rg * np.cos(tg)).ravel(), (rg * np.sin(tg)).ravel()])
    weights = (wall[:, None] * wtheta * np.ones_like(tg)).ravel()
    return QuadGrid2D(nodes=nodes, weights=weights, radius=float(radius),
                      n_radial=n_radial, n_angular=n_angular, breaks=tuple(breaks),
                      radial_nodes=rall)


@dataclass(frozen=True)
class AngularGrid:
    """m equispaced points on the unit circle, weight 2 pi / m each.

    m must be even so that every direction has its antipode on the grid
    (needed by the reciprocity check).
    """

    m: int

    def __post_init__(self):
        if self.m < 4 or self.m % 2 != 0:
            raise BadGridSpec(f"angular grid needs even m >= 4, got {self.m}")

    @property
    def angles(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.m) / self.m

    @property
    def omega(self) -> np.ndarray:
        a = self.angles
        return np.column_stack([np.cos(a), np.sin(a)])

    @property
    def weight(self) -> float:
        return 2.0 * np.pi / self.m

    @property
    def weights(self) -> np.ndarray:
        return np.full(self.m, self.weight)

    @property
    def antipode(self) -> np.ndarray:
        """Index permutation sending omega_k to -omega_k."""
        return (np.arange(self.m) + self.m // 2) % self.m
