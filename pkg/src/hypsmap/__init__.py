"""Numerical lab for 1-equivariant Schroedinger maps from the hyperbolic plane to the sphere."""

__version__ = "0.1.0"

from .grid import RadialGrid, build_grid  # noqa: E402
from .maps import MapProfile, bump_map, energy, q_lambda, soliton_energy  # noqa: E402
from .gauge import GaugeFields, gauge_transform  # noqa: E402
from .reconstruct import reconstruct_map  # noqa: E402
from .evolve import EvolveConfig, Potentials, run  # noqa: E402
from .kernel import decay_fit, free_kernel, oscillatory_bound_ratio  # noqa: E402

__all__ = [
    "RadialGrid",
    "build_grid",
    "MapProfile",
    "bump_map",
    "energy",
    "q_lambda",
    "soliton_energy",
    "GaugeFields",
    "gauge_transform",
    "reconstruct_map",
    "EvolveConfig",
    "Potentials",
    "run",
    "decay_fit",
    "free_kernel",
    "oscillatory_bound_ratio",
]
