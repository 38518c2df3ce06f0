"""scat2d: numerical laboratory for low-energy scattering of 2D Schrodinger
operators -- scattering matrices, threshold classification, a regularized
Levinson check, and the exact wave-operator formula with a time-domain
oracle."""

from .bessel import BesselKind, cyl_bessel
from .grids import AngularGrid, QuadGrid2D, build_disk_grid
from .levinson import SweepSpec, count_bound_states, levinson_check, winding_number
from .operators import (WeightedOperator, assemble_f0, assemble_gamma,
                        nullspace_projection, weighted_adjoint)
from .potentials import FactorizedPotential, default_grid, factorize_potential
from .smatrix import SMatrixSample, assemble_i1, assemble_m, smatrix, sweep_smatrix
from .threshold import (ProjectionSet, ThresholdReport, assemble_m00,
                        classify_threshold, compute_projection_set,
                        tune_critical_coupling, zero_energy_profile)
from .waveop import (LogEnergyGrid, MellinMultiplier, SpectralField, WavePacket,
                     assemble_nb, compare_waveops, dilation_multiplier_apply,
                     from_spectral, gaussian_packet, spectral_transform,
                     waveop_apply_formula, waveop_timedomain)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
