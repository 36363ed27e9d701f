"""Decoherence of an EPR spin singlet and its Bell-inequality violation."""

from .analytic_dynamics import NO_NOISE, RelaxationTimes, SpinDecayParams, correlation, evolve_polarization, singlet_rho_t
from .bell_analysis import BellAngles, BellEvaluation, crossover_separation, crossover_time, evaluate_bell, sweep
from .spatial_decoherence import SpatialParams, big_m, coherence_factor, rho_spatial, separation, wavepacket_center
from .spin_algebra import DensityMatrix4, expectation, pauli, sigma_dot, singlet_density, tensor
from .stochastic_engine import EnsembleConfig, NoiseParams, TrajectoryConfig, ensemble_average, mc_correlation

__version__ = "0.1.0"
