"""
Birman-Schwinger operator and the stationary scattering matrix
==============================================================

The central objects:

    M(kappa)        = u + v G(-kappa^2) v        (kappa > 0, real-energy side)
    M(lambda + i0)  = u + v G(lambda + i0) v     (boundary values on the cut)
    S(lambda)       = 1 - 2 pi i F(lambda) v M(lambda+i0)^{-1} v F(lambda)*

with F(lambda) the spectral-transform fiber and G the free-resolvent kernel,

    G(-kappa^2)(x, y)   = (1/2 pi) K0(kappa |x - y|),
    G(lambda + i0)(x, y) = (i/4) H0+(sqrt(lambda) |x - y|).

The boundary branch corresponds to kappa = -i sqrt(lambda) through
K0(-i z) = (i pi / 2) H0+(z); the test suite pins that branch numerically.

Diagonal (Nystrom) correction: the log singularity at coincidence is replaced
by the analytic integral of the kernel over the equivalent-area disk of each
quadrature cell, which restores quadrature accuracy for log kernels.  Both
corrections are consistent: the small-argument limit of the K0 cell integral
reproduces the zero-energy cell integral plus the logarithmic counterterm
handled in the threshold module.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

from . import bessel
from .errors import NearSingularM, SingularEnergy
from .grids import AngularGrid
from .operators import WeightedOperator, assemble_f0
from .potentials import FactorizedPotential

_RCOND_FLOOR = 1e-13


def _equiv_cell_radius(weights: np.ndarray) -> np.ndarray:
    return np.sqrt(weights / np.pi)


def kernel_on_grid(grid, fn) -> np.ndarray:
    """Evaluate a radial kernel fn(distance) on all node pairs.

    On tensor polar grids the distance depends only on (r, r', dtheta), so fn
    runs on n_radial^2 * n_angular values and the full matrix is gathered by
    indexing.  Coincident pairs get the placeholder value fn(1.0); the caller
    always overwrites the diagonal.
    """
    n = grid.n
    if grid.radial_nodes is not None:
        rr = grid.radial_nodes
        na = grid.n_angular
        cos = np.cos(2.0 * np.pi * np.arange(na) / na)
        d2 = (rr[:, None, None] ** 2 + rr[None, :, None] ** 2
              - 2.0 * np.outer(rr, rr)[:, :, None] * cos[None, None, :])
        np.maximum(d2, 0.0, out=d2)
        dh = np.sqrt(d2)
        dh[dh == 0.0] = 1.0
        ker_hat = fn(dh)
        idx = np.arange(n)
        ir, ia = idx // na, idx % na
        return ker_hat[ir[:, None], ir[None, :], (ia[:, None] - ia[None, :]) % na]
    sq = np.sum(grid.nodes**2, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (grid.nodes @ grid.nodes.T)
    np.maximum(d2, 0.0, out=d2)
    d = np.sqrt(d2)
    d[d == 0.0] = 1.0
    return fn(d)


def resolvent_kernel_matrix(grid, *, real_kappa: float | None = None,
                            boundary_lambda: float | None = None) -> np.ndarray:
    """Free-resolvent kernel sampled on the grid, with Nystrom diagonal.

    The log-singular part of the kernel is replaced on the diagonal by its
    analytic integral over the node's equivalent-area disk divided by the
    cell area.  On the boundary branch only the real part is singular; the
    imaginary part J0(.)/4 is smooth and keeps its point value 1/4, which
    preserves the discrete optical identity Im M = pi (v F* F v) to the
    accuracy of the angular rule.
    """
    if (real_kappa is None) == (boundary_lambda is None):
        raise ValueError("specify exactly one of real_kappa, boundary_lambda")
    a = _equiv_cell_radius(grid.weights)
    if real_kappa is not None:
        kap = float(real_kappa)
        if kap <= 0.0:
            raise SingularEnergy("real_kappa must be positive")
        ker = kernel_on_grid(grid, lambda d: bessel.k0(kap * d) / (2.0 * np.pi))
        za = kap * a
        diag = (1.0 - za * bessel.k1(za)) / kap**2 / grid.weights
    else:
        lam = float(boundary_lambda)
        if lam <= 0.0:
            raise SingularEnergy("boundary values require lambda > 0")
        k = np.sqrt(lam)
        ker = kernel_on_grid(grid, lambda d: 0.25j * bessel.h0plus(k * d))
        za = k * a
        cell_re = -0.5 * np.pi * a / k * bessel.y1(za) - 1.0 / lam
        diag = cell_re / grid.weights + 0.25j
    idx = np.arange(grid.n)
    ker[idx, idx] = diag
    return ker


def assemble_m(pot: FactorizedPotential, *, real_kappa: float | None = None,
               boundary_lambda: float | None = None) -> WeightedOperator:
    """Birman-Schwinger matrix u + v G v at the requested energy point."""
    grid = pot.grid
    if pot.vnorm2 == 0.0:
        dtype = float if real_kappa is not None else complex
        return WeightedOperator(np.diag(pot.u).astype(dtype),
                                grid.weights, grid.weights)
    ker = resolvent_kernel_matrix(grid, real_kappa=real_kappa,
                                  boundary_lambda=boundary_lambda)
    mat = (pot.v[:, None] * ker * (pot.v * grid.weights)[None, :])
    idx = np.arange(grid.n)
    mat[idx, idx] += pot.u
    return WeightedOperator(mat, grid.weights, grid.weights)


@dataclass
class SMatrixSample:
    """Scattering matrix at one energy with its numerical health metrics."""

    lam: float
    s: np.ndarray | None
    unitarity_defect: float = np.nan
    cond: float = np.nan
    error: str | None = None
    _s1norm: float = field(default=np.nan, repr=False)

    @property
    def ok(self) -> bool:
        return self.s is not None

    @property
    def s_minus_1_norm(self) -> float:
        if self.s is None:
            return np.nan
        if np.isnan(self._s1norm):
            m = self.s.shape[0]
            self._s1norm = float(np.linalg.norm(self.s - np.eye(m), 2))
        return self._s1norm


def _lu_and_cond(mat: np.ndarray):
    lu, piv = sla.lu_factor(mat, check_finite=False)
    anorm = np.linalg.norm(mat, 1)
    if np.iscomplexobj(mat):
        rcond, info = lapack.zgecon(lu, anorm, norm="1")
    else:
        rcond, info = lapack.dgecon(lu, anorm, norm="1")
    cond = np.inf if rcond == 0.0 else 1.0 / float(rcond)
    return (lu, piv), cond


def smatrix(pot: FactorizedPotential, lam: float, ang: AngularGrid) -> SMatrixSample:
    """Stationary scattering matrix S(lam) on the angular grid.

    Raises NearSingularM when the Birman-Schwinger matrix is singular to
    working precision (embedded numerical threshold artifact); otherwise the
    condition number is only recorded.
    """
    m = ang.m
    if pot.vnorm2 == 0.0:
        return SMatrixSample(lam, np.eye(m, dtype=complex), 0.0, 1.0)
    bs = assemble_m(pot, boundary_lambda=lam)
    lupiv, cond = _lu_and_cond(bs.matrix)
    if not np.isfinite(cond) or cond > 1.0 / _RCOND_FLOOR:
        raise NearSingularM(f"Birman-Schwinger matrix singular at lambda={lam:g} "
                            f"(cond ~ {cond:.3e})", cond)
    f0 = assemble_f0(lam, pot.grid, ang)
    vfstar = pot.v[:, None] * f0.adjoint().matrix
    x = sla.lu_solve(lupiv, vfstar, check_finite=False)
    t = (f0.matrix * pot.v[None, :]) @ x
    s = np.eye(m, dtype=complex) - 2.0j * np.pi * t
    defect = float(np.linalg.norm(s.conj().T @ s - np.eye(m), 2))
    return SMatrixSample(lam, s, defect, cond)


def born_smatrix(pot: FactorizedPotential, lam: float, ang: AngularGrid) -> np.ndarray:
    """First Born approximation 1 - 2 pi i F V F* (weak-coupling oracle)."""
    f0 = assemble_f0(lam, pot.grid, ang)
    t = (f0.matrix * pot.V[None, :]) @ f0.adjoint().matrix
    return np.eye(ang.m, dtype=complex) - 2.0j * np.pi * t


def _worker_count(threads: int | None) -> int:
    if threads is not None:
        return max(1, threads)
    env = os.environ.get("THREADS", "")
    if env.isdigit() and int(env) > 0:
        return int(env)
    return min(4, os.cpu_count() or 1)


def sweep_smatrix(pot: FactorizedPotential, lambdas, ang: AngularGrid,
                  threads: int | None = None) -> list[SMatrixSample]:
    """Independent S(lam) samples for an ascending energy list.

    Per-sample errors are recorded on the sample (error string, s = None)
    without aborting the remaining sweep.
    """
    lambdas = list(lambdas)

    def one(lam: float) -> SMatrixSample:
        try:
            return smatrix(pot, lam, ang)
        except NearSingularM as exc:
            return SMatrixSample(lam, None, error=f"NearSingularM: {exc}", cond=exc.cond)

    nw = _worker_count(threads)
    if nw == 1 or len(lambdas) <= 1:
        return [one(lam) for lam in lambdas]
    with ThreadPoolExecutor(max_workers=nw) as pool:
        return list(pool.map(one, lambdas))


def assemble_i1(pot: FactorizedPotential, lam: float,
                s1: WeightedOperator | None = None) -> WeightedOperator:
    """Inverse of (M(lambda + i0) + S1); S1 = None means the zero projection.

    With a trivial S1 this is plain M^{-1}; at a tuned criticality the added
    projection removes the near-kernel and restores a bounded inverse.
    """
    bs = assemble_m(pot, boundary_lambda=lam)
    mat = bs.matrix.astype(complex)
    if s1 is not None:
        mat = mat + s1.matrix
    lupiv, cond = _lu_and_cond(mat)
    if not np.isfinite(cond) or cond > 1.0 / _RCOND_FLOOR:
        raise NearSingularM(f"M + S1 singular at lambda={lam:g}", cond)
    inv = sla.lu_solve(lupiv, np.eye(mat.shape[0], dtype=complex), check_finite=False)
    return WeightedOperator(inv, pot.grid.weights, pot.grid.weights)


def operator_condition(pot: FactorizedPotential, lam: float,
                       s1: WeightedOperator | None = None) -> float:
    """1-norm condition estimate of M(lambda+i0) (+ S1 if given)."""
    mat = assemble_m(pot, boundary_lambda=lam).matrix.astype(complex)
    if s1 is not None:
        mat = mat + s1.matrix
    _, cond = _lu_and_cond(mat)
    return cond
