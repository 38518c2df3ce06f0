"""
Weighted dense operators, the spectral transform, and null-space projections
=============================================================================

Every operator between grid/angular spaces is stored as a dense matrix whose
entries already include the domain quadrature weights, so that plain matvec
realizes the integral operator.  Adjoints and norms are always taken with
respect to the weighted inner products

    <f, g>_w = sum_i w_i conj(f_i) g_i,

never the raw Euclidean one; raw matrices of symmetric kernels are therefore
not Hermitian, only weighted-self-adjoint.

The spectral transform at energy lam maps grid functions to angular
functions through the kernel

    (2^{3/2} pi)^{-1} exp(-i sqrt(lam) omega . x),

with the Fourier convention F f(xi) = (2 pi)^{-1} int exp(-i xi . x) f(x) dx.
That convention is forced by the zero-energy moment operators: the order-j
coefficient of the sqrt(lam)-expansion of the transform must carry the
prefactor (-i)^j / (2^{3/2} pi j!).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import BadOrder, IllConditionedSplit, NonPositiveEnergy
from .grids import AngularGrid, QuadGrid2D

_TWO32PI = 2.0**1.5 * np.pi


def winner(w: np.ndarray, f: np.ndarray, g: np.ndarray) -> complex:
    """Weighted inner product, antilinear in the first slot."""
    return complex(np.sum(w * np.conj(f) * g))


def wnorm(w: np.ndarray, f: np.ndarray) -> float:
    return float(np.sqrt(np.sum(w * np.abs(f) ** 2).real))


class DilationGenerator(enum.Enum):
    """Symbolic tags for the dilation generators on the plane (A) and on the
    half-line energy axis (A_PLUS).

    Never materialized as matrices; functions of them act only as Fourier
    multipliers in the logarithmic (Mellin) representation, see the wave
    operator module.  Under the spectral transform, A corresponds to
    -2 * A_PLUS (energies scale twice as fast as lengths).
    """

    A = "A"
    A_PLUS = "A_plus"


@dataclass
class WeightedOperator:
    """Dense matrix with quadrature-weight metadata for both spaces."""

    matrix: np.ndarray
    row_weights: np.ndarray
    col_weights: np.ndarray

    def __post_init__(self):
        nr, nc = self.matrix.shape
        if self.row_weights.shape != (nr,) or self.col_weights.shape != (nc,):
            raise ValueError("weight vectors do not match matrix dimensions")

    # --- algebra -------------------------------------------------------------

    def apply(self, f: np.ndarray) -> np.ndarray:
        return self.matrix @ f

    def adjoint(self) -> "WeightedOperator":
        """Adjoint with respect to the weighted inner products."""
        m = (self.matrix.conj().T * self.row_weights[None, :]) / self.col_weights[:, None]
        return WeightedOperator(m, self.col_weights, self.row_weights)

    def __matmul__(self, other: "WeightedOperator") -> "WeightedOperator":
        if not np.allclose(self.col_weights, other.row_weights, rtol=1e-12):
            raise ValueError("operator composition across mismatched spaces")
        return WeightedOperator(self.matrix @ other.matrix,
                                self.row_weights, other.col_weights)

    def __add__(self, other: "WeightedOperator") -> "WeightedOperator":
        return WeightedOperator(self.matrix + other.matrix,
                                self.row_weights, self.col_weights)

    def __sub__(self, other: "WeightedOperator") -> "WeightedOperator":
        return WeightedOperator(self.matrix - other.matrix,
                                self.row_weights, self.col_weights)

    def __mul__(self, c) -> "WeightedOperator":
        return WeightedOperator(c * self.matrix, self.row_weights, self.col_weights)

    __rmul__ = __mul__

    def __neg__(self) -> "WeightedOperator":
        return self * (-1.0)

    # --- metrics ---------------------------------------------------------------

    def scaled(self) -> np.ndarray:
        """Similarity D_r^{1/2} M D_c^{-1/2}; Euclidean geometry of this matrix
        is the weighted geometry of the operator."""
        return (np.sqrt(self.row_weights)[:, None] * self.matrix
                / np.sqrt(self.col_weights)[None, :])

    def norm(self) -> float:
        """Weighted operator 2-norm (exact SVD below 600 rows/cols, power
        iteration above; the estimate is certified to ~1e-6 relative)."""
        s = self.scaled()
        if min(s.shape) <= 600:
            return float(np.linalg.norm(s, 2))
        rng = np.random.default_rng(7)
        v = rng.standard_normal(s.shape[1]) + 1j * rng.standard_normal(s.shape[1])
        v /= np.linalg.norm(v)
        sig = 0.0
        for _ in range(100):
            u = s @ v
            new = float(np.linalg.norm(u))
            if new == 0.0:
                return 0.0
            v = s.conj().T @ u
            v /= np.linalg.norm(v)
            if abs(new - sig) <= 1e-6 * new:
                sig = new
                break
            sig = new
        return sig

    def fnorm(self) -> float:
        """Weighted Frobenius norm (upper bound on the 2-norm)."""
        return float(np.linalg.norm(self.scaled(), "fro"))

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    # --- constructors -----------------------------------------------------------

    @staticmethod
    def identity(weights: np.ndarray) -> "WeightedOperator":
        n = weights.shape[0]
        return WeightedOperator(np.eye(n), weights, weights)

    @staticmethod
    def diagonal(values: np.ndarray, weights: np.ndarray) -> "WeightedOperator":
        return WeightedOperator(np.diag(values), weights, weights)

    @staticmethod
    def zero(row_weights: np.ndarray, col_weights: np.ndarray) -> "WeightedOperator":
        return WeightedOperator(np.zeros((row_weights.shape[0], col_weights.shape[0])),
                                row_weights, col_weights)


def weighted_adjoint(op: WeightedOperator) -> WeightedOperator:
    return op.adjoint()


# ----------------------------------------------------------------------------
# spectral transform and moment operators
# ----------------------------------------------------------------------------

def assemble_f0(lam: float, grid: QuadGrid2D, ang: AngularGrid) -> WeightedOperator:
    """Spectral transform fiber at energy lam > 0 (rows: directions omega,
    columns: grid nodes x), kernel (2^{3/2} pi)^{-1} e^{-i sqrt(lam) omega.x}."""
    if not (lam > 0.0):
        raise NonPositiveEnergy(f"energy must be positive, got {lam}")
    phase = ang.omega @ grid.nodes.T
    mat = np.exp(-1j * np.sqrt(lam) * phase) * (grid.weights[None, :] / _TWO32PI)
    return WeightedOperator(mat, ang.weights, grid.weights)


def assemble_gamma(j: int, grid: QuadGrid2D, ang: AngularGrid) -> WeightedOperator:
    """Order-j coefficient of the low-energy expansion of the spectral
    transform: kernel (-i)^j (2^{3/2} pi j!)^{-1} (omega . x)^j."""
    if j not in (0, 1, 2):
        raise BadOrder(f"moment order must be 0, 1 or 2, got {j}")
    dot = ang.omega @ grid.nodes.T
    fact = (1.0, 1.0, 2.0)[j]
    mat = ((-1j) ** j / (_TWO32PI * fact)) * dot**j * grid.weights[None, :]
    return WeightedOperator(mat, ang.weights, grid.weights)


# ----------------------------------------------------------------------------
# null spaces
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class NullspaceResult:
    """Orthogonal projection onto a certified numerical kernel."""

    projector: WeightedOperator
    rank: int
    sigma_max: float
    kept: np.ndarray          # |eigenvalues| classified as kernel
    discarded_min: float      # smallest |eigenvalue| kept out of the kernel
    gap: float                # discarded_min / max(kept), inf if kept empty


def nullspace_projection(op: WeightedOperator, tol: float,
                         stage: str = "") -> NullspaceResult:
    """Weighted-orthogonal projection onto the span of eigenvectors of a
    weighted-self-adjoint operator with |eigenvalue| < tol * sigma_max.

    The split must be certified by a relative spectral gap >= 10 across the
    threshold, otherwise the rank decision is refused (IllConditionedSplit).
    """
    if not (tol > 0.0):
        raise ValueError("tol must be positive")
    m = op.matrix
    if m.shape[0] != m.shape[1] or not np.allclose(op.row_weights, op.col_weights):
        raise ValueError("nullspace_projection needs an endomorphism")
    w = op.row_weights
    sq = np.sqrt(w)
    b = sq[:, None] * m / sq[None, :]
    herm_defect = np.linalg.norm(b - b.conj().T, "fro")
    if herm_defect > 1e-8 * max(1.0, np.linalg.norm(b, "fro")):
        raise ValueError(f"operator not weighted-self-adjoint (defect {herm_defect:.2e})")
    if np.isrealobj(m):
        b = 0.5 * (b + b.T)
    else:
        b = 0.5 * (b + b.conj().T)
    eigval, eigvec = np.linalg.eigh(b)
    sig = np.abs(eigval)
    sigma_max = float(sig.max(initial=0.0))
    label = f" at stage {stage}" if stage else ""
    if sigma_max == 0.0:
        return NullspaceResult(WeightedOperator.identity(w), m.shape[0],
                               0.0, sig, np.inf, np.inf)
    mask = sig < tol * sigma_max
    kept = sig[mask]
    above = sig[~mask]
    discarded_min = float(above.min()) if above.size else np.inf
    kept_max = float(kept.max()) if kept.size else 0.0
    gap = np.inf if kept_max == 0.0 else discarded_min / kept_max
    if gap < 10.0:
        raise IllConditionedSplit(
            f"no certified spectral gap across tol{label}: "
            f"largest kernel candidate {kept.max():.3e}, smallest retained "
            f"{discarded_min:.3e} (ratio {gap:.2f} < 10, sigma_max {sigma_max:.3e})")
    vk = eigvec[:, mask]
    proj = (vk / sq[:, None]) @ (vk.conj().T * sq[None, :])
    if np.isrealobj(m):
        proj = proj.real
    return NullspaceResult(WeightedOperator(proj, w, w), int(mask.sum()),
                           sigma_max, kept, discarded_min, float(gap))
