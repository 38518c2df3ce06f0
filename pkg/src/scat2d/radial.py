"""
Radial zero-energy shooting oracle
==================================

Independent cross-check for the dense Birman-Schwinger machinery, usable for
radial potentials only.  For angular momentum channel l the regular solution
of

    u'' + u'/r + (-V(r) - l^2/r^2) u = 0,      u ~ r^l at the origin,

is integrated across the support; outside the support the solution is exactly

    l = 0 :  alpha + beta ln r
    l >= 1:  alpha r^{-l} + beta r^{l}

so interior sign changes plus the (analytic) tail node give the exact count
of negative-energy bound states in the channel (Sturm oscillation: one node
migrates in from infinity at each criticality).  The coefficient beta of the
growing tail solution vanishes exactly at critical couplings, which makes
sign(beta) a bisection detector for thresholds -- the square well reproduces
the Bessel-zero conditions J_1(sqrt(g) a) = 0 (l = 0, 2) and
J_0(sqrt(g) a) = 0 (l = 1).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.optimize as sopt

from .errors import BadPotentialSpec, NoSignChange


def radial_potential(kind: str, params: dict, g: float) -> tuple[Callable, float]:
    """Radial profile V(r) of a preset and its support radius."""
    params = dict(params or {})
    if kind == "gaussian":
        w = float(params.get("width", 1.0))
        rmax = float(params.get("radius", 6.0 * w))
        return (lambda r: -g * np.exp(-(r / w) ** 2)), rmax
    if kind == "square_well":
        a = float(params.get("radius", 1.0))
        sign = float(params.get("sign", -1.0))
        return (lambda r: g * sign * (r <= a)), a
    if kind == "ring":
        a, b = float(params.get("a", 0.5)), float(params.get("b", 1.2))
        h = float(params.get("h", 1.0))
        return (lambda r: g * np.where(r <= a, h, np.where(r <= b, -1.0, 0.0))), b
    raise BadPotentialSpec(f"unknown preset {kind!r}")


@dataclass(frozen=True)
class ShootResult:
    """Zero-energy regular solution summary for one channel."""

    ell: int
    nodes_interior: int
    alpha: float            # coefficient of the decaying/bounded tail branch
    beta: float             # coefficient of the growing tail branch
    tail_node: bool

    @property
    def bound_states(self) -> int:
        return self.nodes_interior + (1 if self.tail_node else 0)


def shoot_zero_energy(vr: Callable, r_support: float, ell: int,
                      n_steps: int = 6000) -> ShootResult:
    """Integrate the channel-l regular solution to the support edge by RK4."""
    r0 = r_support * 1e-6
    h = (r_support - r0) / n_steps

    def rhs(r, y):
        u, du = y
        return np.array([du, -du / r + (vr(r) + ell * ell / (r * r)) * u])

    y = np.array([r0**ell, ell * r0 ** (ell - 1) if ell > 0 else 0.0])
    r = r0
    nodes = 0
    sign_prev = np.sign(y[0]) or 1.0
    for _ in range(n_steps):
        k1 = rhs(r, y)
        k2 = rhs(r + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(r + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(r + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        r += h
        s = np.sign(y[0])
        if s != 0.0 and s != sign_prev:
            nodes += 1
            sign_prev = s
        scale = max(abs(y[0]), abs(y[1]))
        if scale > 1e120:
            y /= scale

    u, du = float(y[0]), float(y[1])
    rr = r_support
    if ell == 0:
        beta = rr * du
        alpha = u - beta * np.log(rr)
    else:
        beta = (rr * du + ell * u) / (2.0 * ell * rr**ell)
        alpha = (ell * u - rr * du) * rr**ell / (2.0 * ell)
    tail = beta != 0.0 and np.sign(u) != np.sign(beta) and u != 0.0
    return ShootResult(ell, nodes, alpha, beta, bool(tail))


def channel_count(kind: str, params: dict, g: float, ell: int) -> int:
    vr, rmax = radial_potential(kind, params, g)
    return shoot_zero_energy(vr, rmax, ell).bound_states


def count_bound_states_radial(kind: str, params: dict, g: float,
                              ell_max: int = 40) -> int:
    """Negative-eigenvalue count, channels summed with degeneracy 2 for l >= 1."""
    if g <= 0.0:
        return 0
    vr, rmax = radial_potential(kind, params, g)
    total = 0
    for ell in range(ell_max + 1):
        c = shoot_zero_energy(vr, rmax, ell).bound_states
        if c == 0:
            break
        total += c if ell == 0 else 2 * c
    return total


def phase_shift(kind: str, params: dict, g: float, ell: int, lam: float,
                n_steps: int = 6000) -> float:
    """Scattering phase shift delta_l(lam) by radial log-derivative matching.

    Integrates u'' + u'/r + (lam - V - l^2/r^2) u = 0 across the support and
    matches against the free cylinder waves J_l(kr), Y_l(kr) (scipy.special,
    deliberately independent of the package's own kernels).  Exact reference
    for radial potentials; the dense machinery never calls it.
    """
    from scipy.special import jv, jvp, yv, yvp

    vr, rmax = radial_potential(kind, params, g)
    k = np.sqrt(lam)
    r0 = rmax * 1e-6
    h = (rmax - r0) / n_steps

    def rhs(r, y):
        u, du = y
        return np.array([du, -du / r + (vr(r) - lam + ell * ell / (r * r)) * u])

    y = np.array([r0**ell, ell * r0 ** (ell - 1) if ell > 0 else 0.0])
    r = r0
    for _ in range(n_steps):
        k1 = rhs(r, y)
        k2 = rhs(r + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(r + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(r + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        r += h
        scale = max(abs(y[0]), abs(y[1]))
        if scale > 1e120:
            y /= scale
    gam = y[1] / y[0]
    x = k * rmax
    num = k * jvp(ell, x) - gam * jv(ell, x)
    den = k * yvp(ell, x) - gam * yv(ell, x)
    # principal branch (-pi/2, pi/2]: the phase shift is defined modulo pi
    if den == 0.0:
        return 0.5 * np.pi * np.sign(num)
    return float(np.arctan(num / den))


def smatrix_deviation_radial(kind: str, params: dict, g: float, lam: float,
                             ell_max: int = 12) -> float:
    """max_l |e^{2 i delta_l} - 1|: the exact ||S(lam) - 1|| for radial V."""
    devs = [abs(np.exp(2j * phase_shift(kind, params, g, ell, lam)) - 1.0)
            for ell in range(ell_max + 1)]
    return float(max(devs))


def critical_coupling_radial(kind: str, params: dict, ell: int,
                             bracket: tuple[float, float],
                             gtol: float = 1e-10) -> float:
    """Coupling at which channel l acquires a new threshold solution.

    Root of the growing-tail coefficient beta(g) inside the bracket.
    """
    vr_of = lambda g: radial_potential(kind, params, g)

    def beta(g: float) -> float:
        vr, rmax = vr_of(g)
        return shoot_zero_energy(vr, rmax, ell).beta

    b_lo, b_hi = beta(bracket[0]), beta(bracket[1])
    if np.sign(b_lo) == np.sign(b_hi):
        raise NoSignChange(f"channel {ell}: no threshold in bracket {bracket}")
    return float(sopt.brentq(beta, bracket[0], bracket[1], xtol=gtol))
