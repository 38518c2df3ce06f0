"""
Potential presets and their sign/modulus factorization
======================================================

A sampled potential is stored together with v = |V|^{1/2} and the unitary
sign u (+1 where V >= 0, -1 where V < 0), so that V = u v^2 holds exactly at
every node; all Birman-Schwinger operators are assembled from (u, v).

Presets (all multiplied by the coupling g):
    gaussian    V0 = -exp(-|x|^2 / w^2)
    square_well V0 = sign * 1 on |x| <= a     (sign defaults to -1)
    ring        V0 = +h on |x| <= a, -1 on a < |x| <= b   (sign changing)

Default grids put the quadrature boundary exactly on the support edge
(square well) or on the interior jump (ring), which keeps the radial
Gauss-Legendre rule spectrally accurate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadPotentialSpec
from .grids import QuadGrid2D, build_disk_grid

PRESETS = ("gaussian", "square_well", "ring")


@dataclass(frozen=True)
class FactorizedPotential:
    """Sampled V with its factorization V = u v^2 (exact per node)."""

    grid: QuadGrid2D
    V: np.ndarray
    v: np.ndarray
    u: np.ndarray
    g: float
    kind: str
    params: dict

    @property
    def vnorm2(self) -> float:
        """Weighted squared norm of v, i.e. the integral of |V|."""
        return float(np.sum(self.grid.weights * self.v**2))

    @property
    def support_radius(self) -> float:
        return self.grid.radius

    @property
    def extent(self) -> float:
        """Length scale of the well (box-size checks for eigenvalue counts)."""
        if self.kind == "gaussian":
            return 2.0 * float(self.params.get("width", 1.0))
        if self.kind == "square_well":
            return float(self.params.get("radius", 1.0))
        return float(self.params.get("b", 1.2))


def default_grid(kind: str, params: dict, n_radial: int | None = None,
                 n_angular: int | None = None) -> QuadGrid2D:
    """Disk grid matched to a preset's support."""
    if kind == "gaussian":
        w = float(params.get("width", 1.0))
        if w <= 0.0:
            raise BadPotentialSpec("gaussian width must be positive")
        return build_disk_grid(float(params.get("radius", 6.0 * w)),
                               n_radial or 32, n_angular or 64)
    if kind == "square_well":
        a = float(params.get("radius", 1.0))
        if a <= 0.0:
            raise BadPotentialSpec("square_well radius must be positive")
        return build_disk_grid(a, n_radial or 24, n_angular or 48)
    if kind == "ring":
        a, b = float(params.get("a", 0.5)), float(params.get("b", 1.2))
        if not (0.0 < a < b):
            raise BadPotentialSpec("ring needs 0 < a < b")
        return build_disk_grid(b, n_radial or 16, n_angular or 48, breaks=(a,))
    raise BadPotentialSpec(f"unknown preset {kind!r}")


def factorize_potential(kind: str, params: dict, g: float,
                        grid: QuadGrid2D | None = None) -> FactorizedPotential:
    """Sample g * V0(preset) on the grid and factorize it."""
    params = dict(params or {})
    if grid is None:
        grid = default_grid(kind, params)
    r = grid.r
    if kind == "gaussian":
        w = float(params.get("width", 1.0))
        if w <= 0.0:
            raise BadPotentialSpec("gaussian width must be positive")
        v0 = -np.exp(-(r**2) / w**2)
    elif kind == "square_well":
        a = float(params.get("radius", 1.0))
        sign = float(params.get("sign", -1.0))
        if a <= 0.0 or sign not in (-1.0, 1.0):
            raise BadPotentialSpec("square_well needs radius > 0 and sign +-1")
        v0 = np.where(r <= a, sign, 0.0)
    elif kind == "ring":
        a, b = float(params.get("a", 0.5)), float(params.get("b", 1.2))
        h = float(params.get("h", 1.0))
        if not (0.0 < a < b) or h < 0.0:
            raise BadPotentialSpec("ring needs 0 < a < b and h >= 0")
        v0 = np.where(r <= a, h, np.where(r <= b, -1.0, 0.0))
    else:
        raise BadPotentialSpec(f"unknown preset {kind!r}")

    sampled = g * v0
    v = np.sqrt(np.abs(sampled))
    u = np.where(sampled >= 0.0, 1.0, -1.0)
    return FactorizedPotential(grid=grid, V=u * v**2, v=v, u=u, g=float(g),
                               kind=kind, params=params)
